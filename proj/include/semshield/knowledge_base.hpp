#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semshield/matrix_core.hpp"

namespace semshield {

/// k-dimensional vector in attribute space, laid out group after group in
/// knowledge-base order.
using SemanticVector = Vector;

struct AttributeGroup {
  std::string name;
  std::vector<std::string> values;
};

struct ClassEntry {
  std::string label;
  std::vector<std::size_t> value_index;  // one per group, in group order
};

/// Attribute-group schema plus the class -> attribute mapping.
///
/// Immutable once loaded. Group, value and class order follow the source
/// document, so vector layouts are reproducible.
class KnowledgeBase {
 public:
  static KnowledgeBase from_json(std::string_view text);
  static KnowledgeBase from_file(const std::filesystem::path& path);

  const std::vector<AttributeGroup>& groups() const { return groups_; }
  const std::vector<ClassEntry>& classes() const { return classes_; }
  std::size_t num_classes() const { return classes_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t offset(std::size_t group) const { return offsets_.at(group); }

  /// Index of a class label, or throws index_error.
  std::size_t class_index(std::string_view label) const;

  /// FNV-1a 64 hash of the canonical serialisation, as 16 hex digits.
  const std::string& fingerprint() const { return fingerprint_; }

  std::string to_json() const;

 private:
  KnowledgeBase() = default;
  void finalize();

  std::vector<AttributeGroup> groups_;
  std::vector<ClassEntry> classes_;
  std::vector<std::size_t> offsets_;
  std::size_t dim_ = 0;
  std::string fingerprint_;
};

inline KnowledgeBase load_kb(std::string_view text) { return KnowledgeBase::from_json(text); }

/// One-hot-per-group vector for a class index.
SemanticVector encode_class(const KnowledgeBase& kb, std::size_t label);

/// m x k matrix; row i is encode_class(labels[i]).
Matrix annotate(const KnowledgeBase& kb, std::span<const std::size_t> labels);

/// The valid attribute configurations, one row per class.
struct PrototypeSet {
  Matrix rows;  // c x k

  std::size_t count() const { return static_cast<std::size_t>(rows.rows()); }
  SemanticVector operator[](std::size_t cls) const { return rows.row(static_cast<Eigen::Index>(cls)).transpose(); }
  /// Index of the prototype exactly equal to `v`, or -1.
  long find(const SemanticVector& v) const;
};

PrototypeSet build_prototypes(const KnowledgeBase& kb);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace semshield
