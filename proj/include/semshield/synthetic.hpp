#pragma once

// Seeded stand-in for a trained classifier: class-clustered features whose
// centroids are driven by the knowledge-base attributes, plus predictions,
// softmax outputs and Monte-Carlo dropout samples with a fixed number of
// mispredictions.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "semshield/knowledge_base.hpp"

namespace semshield {

/// Counter-based generator: the i-th draw of stream `key` is
/// splitmix64(key + i * golden_gamma). Streams are split by hashing an id into
/// the key, so each purpose gets an independent, reproducible sequence.
class CounterRng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64-counter";
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z);

  CounterRng split(std::uint64_t stream_id) const { return CounterRng(mix(key_ ^ mix(stream_id + kGamma))); }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  /// Standard normal via Box-Muller (both outputs used).
  double normal();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t classes = 0;  // must equal the knowledge base's class count
  std::size_t feature_dim = 64;
  std::size_t train_per_class = 50;
  std::size_t test_per_class = 20;
  double sigma = 0.5;
  double misprediction_rate = 0.05;
  std::size_t mcd_passes = 100;
  // Share of blended (mispredicted) examples whose softmax is as peaked as a
  // clean example's, emulating softmax overconfidence.
  double softmax_overconfident_fraction = 0.2;

  void validate(const KnowledgeBase& kb) const;
  static SynthConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

struct SynthData {
  Matrix train_features;
  std::vector<std::size_t> train_labels;
  Matrix test_features;
  std::vector<std::size_t> test_labels;
  std::vector<std::size_t> predictions;
  Matrix probs;
  std::vector<Matrix> mcd;    // one T x c block per test example
  std::vector<bool> blended;  // test examples built from two centroids
  Matrix centroids;           // c x n
  nlohmann::ordered_json meta;
};

SynthData generate(const SynthConfig& cfg, const KnowledgeBase& kb);

}  // namespace semshield
