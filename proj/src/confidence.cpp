#include "semshield/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace semshield {

double semantic_distance(const SemanticVector& s_pred, const SemanticVector& s_y) {
  if (s_pred.size() != s_y.size()) {
    throw shape_error("semantic_distance: lengths differ (" + std::to_string(s_pred.size()) + " vs " +
                      std::to_string(s_y.size()) + ")");
  }
  const double ny = s_y.norm();
  if (!(ny > 0.0)) throw validation_error("semantic_distance: prototype vector is zero");
  const double np = s_pred.norm();
  if (np == 0.0) return 1.0;
  const double cosine = s_pred.dot(s_y) / (np * ny);
  return std::clamp(1.0 - cosine, 0.0, 2.0);
}

std::string Explanation::summary() const {
  std::string out;
  for (const auto& g : groups) {
    if (!out.empty()) out += ", ";
    out += g.value;
  }
  return out;
}

SemanticVector binarize(const SemanticVector& s, const KnowledgeBase& kb) {
  if (static_cast<std::size_t>(s.size()) != kb.dim()) {
    throw validation_error("semantic vector length " + std::to_string(s.size()) +
                           " does not match knowledge base dimension " + std::to_string(kb.dim()));
  }
  SemanticVector out = SemanticVector::Zero(s.size());
  for (std::size_t g = 0; g < kb.groups().size(); ++g) {
    const auto off = static_cast<Eigen::Index>(kb.offset(g));
    const auto len = static_cast<Eigen::Index>(kb.groups()[g].values.size());
    Eigen::Index best = 0;
    s.segment(off, len).maxCoeff(&best);  // first maximum wins
    out(off + best) = 1.0;
  }
  return out;
}

Explanation detect_error(const SemanticVector& s_pred, std::size_t predicted, const KnowledgeBase& kb,
                         const PrototypeSet& protos) {
  if (protos.rows.cols() != static_cast<Eigen::Index>(kb.dim()) || protos.count() != kb.num_classes()) {
    throw validation_error("detect_error: prototype set does not match the knowledge base layout");
  }
  if (predicted >= protos.count()) {
    throw index_error("detect_error: predicted class " + std::to_string(predicted) + " out of range");
  }
  const SemanticVector bin = binarize(s_pred, kb);

  Explanation ex;
  for (std::size_t g = 0; g < kb.groups().size(); ++g) {
    const auto& group = kb.groups()[g];
    const auto off = static_cast<Eigen::Index>(kb.offset(g));
    Eigen::Index best = 0;
    bin.segment(off, static_cast<Eigen::Index>(group.values.size())).maxCoeff(&best);
    ex.groups.push_back({group.name, group.values[static_cast<std::size_t>(best)], s_pred(off + best)});
  }
  ex.matched_class = protos.find(bin);
  ex.valid = ex.matched_class >= 0;
  ex.matches = ex.matched_class == static_cast<long>(predicted);
  return ex;
}

namespace {

void check_simplex(std::span<const double> probs, const std::string& where) {
  if (probs.empty()) throw validation_error(where + ": empty probability vector");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) throw validation_error(where + ": negative or non-finite probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw validation_error(where + ": probabilities do not sum to 1");
}

}  // namespace

double softmax_score(std::span<const double> probs) {
  check_simplex(probs, "softmax_score");
  return 1.0 - *std::max_element(probs.begin(), probs.end());
}

double nnd_score(const Vector& feature, const Matrix& train_features, std::size_t k) {
  if (train_features.rows() == 0) throw validation_error("nnd_score: empty training set");
  if (k < 1 || k > static_cast<std::size_t>(train_features.rows())) {
    throw validation_error("nnd_score: k=" + std::to_string(k) + " must lie in [1, " +
                           std::to_string(train_features.rows()) + "]");
  }
  if (feature.size() != train_features.cols()) {
    throw shape_error("nnd_score: feature length " + std::to_string(feature.size()) + ", training rows have " +
                      std::to_string(train_features.cols()));
  }
  std::vector<double> dist(static_cast<std::size_t>(train_features.rows()));
  for (Eigen::Index i = 0; i < train_features.rows(); ++i) {
    dist[static_cast<std::size_t>(i)] = (train_features.row(i).transpose() - feature).norm();
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += dist[i];
  return sum / static_cast<double>(k);
}

double mcd_score(const Matrix& samples, std::size_t predicted) {
  if (samples.rows() < 2) throw validation_error("mcd_score: need at least 2 passes");
  if (predicted >= static_cast<std::size_t>(samples.cols())) {
    throw index_error("mcd_score: predicted class " + std::to_string(predicted) + " out of range");
  }
  for (Eigen::Index t = 0; t < samples.rows(); ++t) {
    check_simplex({samples.row(t).data(), static_cast<std::size_t>(samples.cols())}, "mcd_score");
  }
  const auto col = samples.col(static_cast<Eigen::Index>(predicted));
  // Shifted by the first pass so identical samples give exactly zero.
  const Eigen::ArrayXd d = col.array() - col(0);
  const double t = static_cast<double>(samples.rows());
  const double var = (d.square().sum() - d.sum() * d.sum() / t) / (t - 1.0);
  return std::max(var, 0.0);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Semantic: return "semantic";
    case Method::Softmax: return "softmax";
    case Method::Nnd: return "nnd";
    case Method::Mcd: return "mcd";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "semantic") return Method::Semantic;
  if (name == "softmax") return Method::Softmax;
  if (name == "nnd") return Method::Nnd;
  if (name == "mcd") return Method::Mcd;
  throw configuration_error("unknown scoring method \"" + std::string(name) + "\"", std::string(name));
}

std::vector<std::string> missing_inputs(Method method, const ScoringInputs& in) {
  std::vector<std::string> missing;
  switch (method) {
    case Method::Semantic:
      if (!in.model) missing.emplace_back("model");
      if (!in.kb) missing.emplace_back("kb");
      if (!in.protos) missing.emplace_back("prototypes");
      if (!in.features) missing.emplace_back("features");
      if (in.predictions.empty() && (!in.features || in.features->rows() > 0))
        missing.emplace_back("predictions");
      break;
    case Method::Softmax:
      if (!in.probs) missing.emplace_back("probs");
      break;
    case Method::Nnd:
      if (!in.features) missing.emplace_back("features");
      if (!in.train_features) missing.emplace_back("train_features");
      break;
    case Method::Mcd:
      if (!in.mcd) missing.emplace_back("mcd");
      if (in.predictions.empty() && (!in.mcd || !in.mcd->empty())) missing.emplace_back("predictions");
      break;
  }
  return missing;
}

std::size_t example_count(const ScoringInputs& in) {
  if (in.features) return static_cast<std::size_t>(in.features->rows());
  if (in.probs) return static_cast<std::size_t>(in.probs->rows());
  if (in.mcd) return in.mcd->size();
  return in.predictions.size();
}

namespace {

void check_alignment(const ScoringInputs& in, std::size_t m) {
  auto check = [m](std::size_t got, const char* what) {
    if (got != m) {
      throw shape_error(std::string("row count mismatch: ") + what + " has " + std::to_string(got) +
                            " rows, expected " + std::to_string(m),
                        what);
    }
  };
  if (in.features) check(static_cast<std::size_t>(in.features->rows()), "features");
  if (!in.predictions.empty()) check(in.predictions.size(), "predictions");
  if (!in.labels.empty()) check(in.labels.size(), "labels");
  if (in.probs) check(static_cast<std::size_t>(in.probs->rows()), "probs");
  if (in.mcd) check(in.mcd->size(), "mcd");
}

double score_one(Method method, const ScoringInputs& in, std::size_t i) {
  const auto row = static_cast<Eigen::Index>(i);
  switch (method) {
    case Method::Semantic: {
      const SemanticVector s = project(*in.model, in.features->row(row).transpose());
      const std::size_t pred = in.predictions[i];
      if (pred >= in.protos->count()) {
        throw index_error("prediction " + std::to_string(pred) + " at row " + std::to_string(i) + " out of range");
      }
      return semantic_distance(s, (*in.protos)[pred]);
    }
    case Method::Softmax: {
      const auto& p = *in.probs;
      return softmax_score({p.row(row).data(), static_cast<std::size_t>(p.cols())});
    }
    case Method::Nnd:
      return nnd_score(in.features->row(row).transpose(), *in.train_features, in.nnd_k);
    case Method::Mcd:
      return mcd_score((*in.mcd)[i], in.predictions[i]);
  }
  return 0.0;
}

}  // namespace

std::vector<ScoreRecord> score_batch(Method method, const ScoringInputs& in) {
  if (auto missing = missing_inputs(method, in); !missing.empty()) {
    std::string list;
    for (const auto& s : missing) list += (list.empty() ? "" : ", ") + s;
    throw configuration_error("method " + to_string(method) + " requires: " + list, list);
  }
  if (method == Method::Semantic) {
    if (!in.model->kb_fingerprint.empty() && in.model->kb_fingerprint != in.kb->fingerprint()) {
      throw validation_error("model was fitted against a different knowledge base (fingerprint " +
                             in.model->kb_fingerprint + ", got " + in.kb->fingerprint() + ")");
    }
    if (in.model->semantic_dim() != static_cast<Eigen::Index>(in.kb->dim())) {
      throw shape_error("model semantic dimension does not match the knowledge base");
    }
  }
  const std::size_t m = example_count(in);
  check_alignment(in, m);

  std::vector<ScoreRecord> out(m);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ScoreRecord& r = out[i];
      r.example_id = i;
      r.method = method;
      r.predicted = in.predictions.empty() ? 0 : in.predictions[i];
      if (!in.labels.empty()) r.truth = in.labels[i];
      r.score = score_one(method, in, i);
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(in.threads, 1, std::max<std::size_t>(1, m));
  if (threads == 1) {
    work(0, m);
    return out;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (m + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk, end = std::min(m, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace semshield
