#include "semshield/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace semshield {

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::size_t CounterRng::below(std::size_t n) {
  if (n == 0) throw validation_error("CounterRng::below: empty range");
  // Rejection keeps the result unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

void SynthConfig::validate(const KnowledgeBase& kb) const {
  if (classes != kb.num_classes()) {
    throw validation_error("synthetic config: classes=" + std::to_string(classes) + " but the knowledge base has " +
                           std::to_string(kb.num_classes()));
  }
  if (feature_dim == 0) throw validation_error("synthetic config: feature_dim must be positive");
  if (train_per_class == 0 || test_per_class == 0) {
    throw validation_error("synthetic config: per-class example counts must be positive");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw validation_error("synthetic config: sigma must be > 0");
  if (!(misprediction_rate >= 0.0 && misprediction_rate <= 1.0)) {
    throw validation_error("synthetic config: misprediction_rate must lie in [0, 1]");
  }
  if (mcd_passes < 2) throw validation_error("synthetic config: mcd_passes must be >= 2");
  if (!(softmax_overconfident_fraction >= 0.0 && softmax_overconfident_fraction <= 1.0)) {
    throw validation_error("synthetic config: softmax_overconfident_fraction must lie in [0, 1]");
  }
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw validation_error("synthetic config must be a JSON object");
  static const char* known[] = {"seed",          "classes",           "feature_dim", "train_per_class",
                                "test_per_class", "sigma",            "misprediction_rate",
                                "mcd_passes",    "softmax_overconfident_fraction", "kb"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known)) {
      throw validation_error("synthetic config: unknown key \"" + key + "\"", key);
    }
  }
  SynthConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.classes = j.value("classes", c.classes);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.train_per_class = j.value("train_per_class", c.train_per_class);
    c.test_per_class = j.value("test_per_class", c.test_per_class);
    c.sigma = j.value("sigma", c.sigma);
    c.misprediction_rate = j.value("misprediction_rate", c.misprediction_rate);
    c.mcd_passes = j.value("mcd_passes", c.mcd_passes);
    c.softmax_overconfident_fraction = j.value("softmax_overconfident_fraction", c.softmax_overconfident_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("synthetic config: ") + e.what());
  }
  return c;
}

nlohmann::ordered_json SynthConfig::to_json() const {
  return {{"seed", seed},
          {"classes", classes},
          {"feature_dim", feature_dim},
          {"train_per_class", train_per_class},
          {"test_per_class", test_per_class},
          {"sigma", sigma},
          {"misprediction_rate", misprediction_rate},
          {"mcd_passes", mcd_passes},
          {"softmax_overconfident_fraction", softmax_overconfident_fraction}};
}

namespace {

enum Stream : std::uint64_t { kCentroids = 1, kTrainNoise, kTestNoise, kSelection, kBlend, kLogits, kDropout };

Vector softmax(const Vector& z) {
  const Vector e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

double min_pairwise_distance(const Matrix& c) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = i + 1; j < c.rows(); ++j) best = std::min(best, (c.row(i) - c.row(j)).norm());
  return best;
}

}  // namespace

SynthData generate(const SynthConfig& cfg, const KnowledgeBase& kb) {
  cfg.validate(kb);
  const CounterRng root(cfg.seed);
  const auto c = static_cast<Eigen::Index>(cfg.classes);
  const auto n = static_cast<Eigen::Index>(cfg.feature_dim);
  const auto k = static_cast<Eigen::Index>(kb.dim());

  SynthData out;

  // Centroid = attribute mixing (A p_y) + a class-specific offset.
  CounterRng rc = root.split(kCentroids);
  Matrix mixing(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) mixing(i, j) = rc.normal();
  const PrototypeSet protos = build_prototypes(kb);
  out.centroids.resize(c, n);
  for (Eigen::Index y = 0; y < c; ++y) {
    Vector offset(n);
    for (Eigen::Index i = 0; i < n; ++i) offset(i) = 0.5 * rc.normal();
    out.centroids.row(y) = (mixing * protos.rows.row(y).transpose() + offset).transpose();
  }
  // Keep clusters separated by at least 10 sigma.
  const double separation = min_pairwise_distance(out.centroids);
  double centroid_scale = 1.0;
  if (separation < 10.0 * cfg.sigma) {
    centroid_scale = 10.0 * cfg.sigma / separation * (1.0 + 1e-9);
    out.centroids *= centroid_scale;
  }

  CounterRng rtrain = root.split(kTrainNoise);
  const std::size_t m_train = cfg.classes * cfg.train_per_class;
  out.train_features.resize(static_cast<Eigen::Index>(m_train), n);
  out.train_labels.resize(m_train);
  for (std::size_t i = 0; i < m_train; ++i) {
    const std::size_t y = i % cfg.classes;
    out.train_labels[i] = y;
    for (Eigen::Index j = 0; j < n; ++j) {
      out.train_features(static_cast<Eigen::Index>(i), j) =
          out.centroids(static_cast<Eigen::Index>(y), j) + cfg.sigma * rtrain.normal();
    }
  }

  // Exactly round(rate * m) test examples are corrupted, chosen by a seeded
  // shuffle.
  const std::size_t m_test = cfg.classes * cfg.test_per_class;
  const auto n_bad = static_cast<std::size_t>(std::llround(cfg.misprediction_rate * static_cast<double>(m_test)));
  std::vector<std::size_t> order(m_test);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rsel = root.split(kSelection);
  for (std::size_t i = m_test; i > 1; --i) std::swap(order[i - 1], order[rsel.below(i)]);
  out.blended.assign(m_test, false);
  for (std::size_t i = 0; i < n_bad; ++i) out.blended[order[i]] = true;

  CounterRng rtest = root.split(kTestNoise);
  CounterRng rblend = root.split(kBlend);
  CounterRng rlogit = root.split(kLogits);
  CounterRng rdrop = root.split(kDropout);
  out.test_features.resize(static_cast<Eigen::Index>(m_test), n);
  out.test_labels.resize(m_test);
  out.predictions.resize(m_test);
  out.probs.resize(static_cast<Eigen::Index>(m_test), c);
  out.mcd.reserve(m_test);

  for (std::size_t i = 0; i < m_test; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const std::size_t y = i % cfg.classes;
    out.test_labels[i] = y;
    Vector f = out.centroids.row(static_cast<Eigen::Index>(y)).transpose();
    std::size_t pred = y;
    bool overconfident = false;
    if (out.blended[i]) {
      // Ambiguous input: mostly the true class, partly another one, which the
      // classifier picks.
      pred = (y + 1 + rblend.below(cfg.classes - 1)) % cfg.classes;
      const double alpha = rblend.uniform(0.5, 0.75);
      f = alpha * f + (1.0 - alpha) * out.centroids.row(static_cast<Eigen::Index>(pred)).transpose();
      overconfident = rblend.uniform() < cfg.softmax_overconfident_fraction;
    }
    for (Eigen::Index j = 0; j < n; ++j) f(j) += cfg.sigma * rtest.normal();
    out.test_features.row(row) = f.transpose();
    out.predictions[i] = pred;

    Vector logits(c);
    for (Eigen::Index j = 0; j < c; ++j) logits(j) = rlogit.normal();
    const bool peaked = !out.blended[i] || overconfident;
    const double margin = peaked ? rlogit.uniform(6.0, 12.0) : rlogit.uniform(2.0, 6.0);
    logits(static_cast<Eigen::Index>(pred)) = margin;
    if (out.blended[i] && !overconfident) logits(static_cast<Eigen::Index>(y)) = margin - rlogit.uniform(0.5, 2.0);
    out.probs.row(row) = softmax(logits).transpose();

    const double dispersion = out.blended[i] ? 2.0 : 0.5;
    Matrix passes(static_cast<Eigen::Index>(cfg.mcd_passes), c);
    for (Eigen::Index t = 0; t < passes.rows(); ++t) {
      Vector z = logits;
      for (Eigen::Index j = 0; j < c; ++j) z(j) += dispersion * rdrop.normal();
      passes.row(t) = softmax(z).transpose();
    }
    out.mcd.push_back(std::move(passes));
  }

  out.meta = {{"generator", "semshield-synthetic"},
              {"rng", {{"algorithm", CounterRng::kAlgorithm},
                       {"gamma", "0x9E3779B97F4A7C15"},
                       {"normal", "box-muller"},
                       {"seed", cfg.seed}}},
              {"config", cfg.to_json()},
              {"kb_fingerprint", kb.fingerprint()},
              {"centroid_scale", centroid_scale},
              {"train_examples", m_train},
              {"test_examples", m_test},
              {"mispredictions", n_bad}};
  return out;
}

}  // namespace semshield
