#include "semshield/knowledge_base.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace semshield {

using nlohmann::json;

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw validation_error("unknown key \"" + key + "\" in " + where, where);
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw validation_error(std::string("missing \"") + key + "\" in " + where, where);
  return *it;
}

std::string require_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw validation_error("expected a string in " + where, where);
  auto s = j.get<std::string>();
  if (s.empty()) throw validation_error("empty name in " + where, where);
  return s;
}

}  // namespace

KnowledgeBase KnowledgeBase::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw validation_error(std::string("knowledge base is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw validation_error("knowledge base must be a JSON object");
  // "description" lets data files carry provenance notes.
  reject_unknown_keys(doc, {"groups", "classes", "description"}, "knowledge base");

  KnowledgeBase kb;
  const json& groups = require(doc, "groups", "knowledge base");
  if (!groups.is_array() || groups.empty()) throw validation_error("\"groups\" must be a non-empty array");

  std::unordered_map<std::string, std::size_t> group_pos;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::string where = "groups[" + std::to_string(g) + "]";
    const json& gj = groups[g];
    if (!gj.is_object()) throw validation_error(where + " must be an object", where);
    reject_unknown_keys(gj, {"name", "values"}, where);
    AttributeGroup group;
    group.name = require_string(require(gj, "name", where), where + ".name");
    const json& values = require(gj, "values", where);
    if (!values.is_array()) throw validation_error(where + ".values must be an array", group.name);
    std::set<std::string> seen;
    for (const auto& v : values) {
      auto name = require_string(v, "group " + group.name);
      if (!seen.insert(name).second) {
        throw validation_error("duplicate value \"" + name + "\" in group " + group.name, group.name);
      }
      group.values.push_back(std::move(name));
    }
    if (group.values.size() < 2) {
      throw validation_error("group " + group.name + " needs at least 2 values", group.name);
    }
    if (!group_pos.emplace(group.name, g).second) {
      throw validation_error("duplicate group name " + group.name, group.name);
    }
    kb.groups_.push_back(std::move(group));
  }

  const json& classes = require(doc, "classes", "knowledge base");
  if (!classes.is_array()) throw validation_error("\"classes\" must be an array");
  std::set<std::string> labels;
  for (std::size_t ci = 0; ci < classes.size(); ++ci) {
    std::string where = "classes[" + std::to_string(ci) + "]";
    const json& cj = classes[ci];
    if (!cj.is_object()) throw validation_error(where + " must be an object", where);
    reject_unknown_keys(cj, {"label", "attributes"}, where);
    ClassEntry entry;
    entry.label = require_string(require(cj, "label", where), where + ".label");
    where = "class " + entry.label;
    if (!labels.insert(entry.label).second) {
      throw validation_error("duplicate class label " + entry.label, entry.label);
    }
    const json& attrs = require(cj, "attributes", where);
    if (!attrs.is_object()) throw validation_error(where + ": attributes must be an object", entry.label);

    constexpr std::size_t unset = static_cast<std::size_t>(-1);
    entry.value_index.assign(kb.groups_.size(), unset);
    for (const auto& [gname, vj] : attrs.items()) {
      auto gp = group_pos.find(gname);
      if (gp == group_pos.end()) {
        throw validation_error(where + " names unknown group " + gname, entry.label + "/" + gname);
      }
      const auto value = require_string(vj, where + "/" + gname);
      const auto& vals = kb.groups_[gp->second].values;
      auto vit = std::find(vals.begin(), vals.end(), value);
      if (vit == vals.end()) {
        throw validation_error(where + ": unknown value \"" + value + "\" for group " + gname,
                               entry.label + "/" + gname);
      }
      entry.value_index[gp->second] = static_cast<std::size_t>(vit - vals.begin());
    }
    for (std::size_t g = 0; g < kb.groups_.size(); ++g) {
      if (entry.value_index[g] == unset) {
        throw validation_error(where + " has no value for group " + kb.groups_[g].name,
                               entry.label + "/" + kb.groups_[g].name);
      }
    }
    kb.classes_.push_back(std::move(entry));
  }
  if (kb.classes_.size() < 2) throw validation_error("knowledge base needs at least 2 classes");

  std::map<std::vector<std::size_t>, std::string> configs;
  for (const auto& c : kb.classes_) {
    auto [it, fresh] = configs.emplace(c.value_index, c.label);
    if (!fresh) {
      throw validation_error("classes " + it->second + " and " + c.label + " share the same attributes",
                             c.label);
    }
  }

  kb.finalize();
  return kb;
}

KnowledgeBase KnowledgeBase::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open knowledge base " + path.string(), path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void KnowledgeBase::finalize() {
  offsets_.clear();
  dim_ = 0;
  for (const auto& g : groups_) {
    offsets_.push_back(dim_);
    dim_ += g.values.size();
  }
  fingerprint_ = fnv1a_hex(to_json());
}

std::size_t KnowledgeBase::class_index(std::string_view label) const {
  for (std::size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i].label == label) return i;
  throw index_error("unknown class label " + std::string(label), std::string(label));
}

std::string KnowledgeBase::to_json() const {
  json doc;
  doc["groups"] = json::array();
  for (const auto& g : groups_) doc["groups"].push_back({{"name", g.name}, {"values", g.values}});
  doc["classes"] = json::array();
  for (const auto& c : classes_) {
    json attrs = json::object();
    for (std::size_t g = 0; g < groups_.size(); ++g) attrs[groups_[g].name] = groups_[g].values[c.value_index[g]];
    doc["classes"].push_back({{"label", c.label}, {"attributes", std::move(attrs)}});
  }
  return doc.dump();
}

SemanticVector encode_class(const KnowledgeBase& kb, std::size_t label) {
  if (label >= kb.num_classes()) {
    throw index_error("class index " + std::to_string(label) + " out of range [0, " +
                      std::to_string(kb.num_classes()) + ")");
  }
  SemanticVector v = SemanticVector::Zero(static_cast<Eigen::Index>(kb.dim()));
  const auto& entry = kb.classes()[label];
  for (std::size_t g = 0; g < kb.groups().size(); ++g) {
    v(static_cast<Eigen::Index>(kb.offset(g) + entry.value_index[g])) = 1.0;
  }
  return v;
}

Matrix annotate(const KnowledgeBase& kb, std::span<const std::size_t> labels) {
  Matrix s(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(kb.dim()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= kb.num_classes()) {
      throw index_error("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                            " out of range",
                        "row " + std::to_string(i));
    }
    s.row(static_cast<Eigen::Index>(i)) = encode_class(kb, labels[i]).transpose();
  }
  return s;
}

long PrototypeSet::find(const SemanticVector& v) const {
  if (v.size() != rows.cols()) return -1;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    if (rows.row(i).transpose() == v) return static_cast<long>(i);
  return -1;
}

PrototypeSet build_prototypes(const KnowledgeBase& kb) {
  std::vector<std::size_t> all(kb.num_classes());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return PrototypeSet{annotate(kb, all)};
}

}  // namespace semshield
