#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semshield/embedding.hpp"
#include "semshield/knowledge_base.hpp"

namespace semshield {

/// Cosine distance d = 1 - <s_pred, s_y> / (|s_pred| |s_y|), in [0, 2].
///
/// A zero `s_pred` carries no attribute evidence and scores 1. A zero `s_y`
/// cannot be a prototype and is rejected.
double semantic_distance(const SemanticVector& s_pred, const SemanticVector& s_y);

struct GroupPick {
  std::string group;
  std::string value;
  double weight = 0.0;
};

struct Explanation {
  std::vector<GroupPick> groups;  // KB order
  bool valid = false;             // binarised vector is some class prototype
  bool matches = false;           // ... and it is the predicted class's one
  long matched_class = -1;        // which prototype it equals, or -1

  /// "round, red, no, cars, none"
  std::string summary() const;
};

/// Per-group argmax (lowest index wins ties) as a one-hot-per-group vector.
SemanticVector binarize(const SemanticVector& s, const KnowledgeBase& kb);

/// Binarises `s_pred` and compares it against the prototype set.
Explanation detect_error(const SemanticVector& s_pred, std::size_t predicted, const KnowledgeBase& kb,
                         const PrototypeSet& protos);

/// 1 - max(probs); probs must be a probability simplex (sum within 1e-6).
double softmax_score(std::span<const double> probs);

inline constexpr std::size_t kDefaultNndK = 10;

/// Mean Euclidean distance from `feature` to its k nearest training rows.
double nnd_score(const Vector& feature, const Matrix& train_features, std::size_t k = kDefaultNndK);

/// Unbiased sample variance of the predicted class's probability over T
/// stochastic passes (rows of `samples`).
double mcd_score(const Matrix& samples, std::size_t predicted);

enum class Method { Semantic, Softmax, Nnd, Mcd };

std::string to_string(Method m);
Method parse_method(std::string_view name);

struct ScoreRecord {
  std::size_t example_id = 0;
  std::size_t predicted = 0;
  std::optional<std::size_t> truth;
  double score = 0.0;
  Method method = Method::Semantic;
};

/// Inputs shared by the scorers. Each method uses a subset; leave the rest
/// empty. Rows of every provided per-example input must align.
struct ScoringInputs {
  const ProjectionModel* model = nullptr;
  const KnowledgeBase* kb = nullptr;
  const PrototypeSet* protos = nullptr;
  const Matrix* features = nullptr;          // m x n
  std::span<const std::size_t> predictions;  // m
  std::span<const std::size_t> labels;       // m, or empty
  const Matrix* probs = nullptr;             // m x c
  const std::vector<Matrix>* mcd = nullptr;  // m entries of T x c
  const Matrix* train_features = nullptr;    // for NND
  std::size_t nnd_k = kDefaultNndK;
  unsigned threads = 1;
};

/// Names of the inputs `method` needs that are absent from `in`.
std::vector<std::string> missing_inputs(Method method, const ScoringInputs& in);

/// Number of examples implied by `in` (first non-empty per-example input).
std::size_t example_count(const ScoringInputs& in);

/// Scores every example with `method`. Output is ordered by example id
/// regardless of `threads`.
std::vector<ScoreRecord> score_batch(Method method, const ScoringInputs& in);

}  // namespace semshield
