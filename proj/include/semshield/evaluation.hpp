#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semshield/confidence.hpp"

namespace semshield {

// Selective classification framed as error detection: a misprediction is a
// positive, and an example is flagged when its score exceeds the threshold.

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf for the first point, -inf for the last
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// ROC over `scores` with `is_error[i]` marking positives. Thresholds sweep
/// +inf, every distinct score but the largest (which would repeat the origin),
/// then -inf. Needs at least one positive and one negative.
RocCurve roc(std::span<const double> scores, std::span<const bool> is_error);

/// ROC from scored records; every record must carry its true class.
RocCurve roc(std::span<const ScoreRecord> records);

/// Trapezoidal area under an arbitrary point sequence.
double trapezoid_auc(std::span<const RocPoint> points);

struct SelectiveResult {
  double coverage = 0.0;
  std::optional<double> accuracy;  // absent when nothing is retained
};

/// Keeps examples with score <= epsilon; reports the retained fraction and
/// their accuracy.
SelectiveResult selective_accuracy(std::span<const ScoreRecord> records, double epsilon);

struct BenchCounts {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t mispredicted = 0;
};

struct BenchReport {
  std::vector<std::pair<Method, RocCurve>> methods;  // in requested order
  BenchCounts counts;
  std::string model_fingerprint;
  std::string kb_fingerprint;
  std::string timestamp;  // ISO-8601 UTC; empty to omit
};

/// Scores the same example set with each requested method and builds one ROC
/// per method. `in.labels` must be present.
BenchReport bench(const ScoringInputs& in, std::span<const Method> methods);

/// {"methods": {name: {"auc", "points"}}, "counts": {...}, "meta": {...}}
std::string report_to_json(const BenchReport& report);

/// method,fpr,tpr,threshold rows with a header line.
std::string report_to_csv(const BenchReport& report);

}  // namespace semshield
