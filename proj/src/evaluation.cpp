#include "semshield/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <memory>
#include <numeric>

#include <json.hpp>

#include "semshield/io.hpp"

namespace semshield {

RocCurve roc(std::span<const double> scores, std::span<const bool> is_error) {
  if (scores.size() != is_error.size()) throw shape_error("roc: scores and outcomes differ in length");
  std::int64_t positives = 0;
  for (bool e : is_error) positives += e ? 1 : 0;
  const auto negatives = static_cast<std::int64_t>(scores.size()) - positives;
  if (positives == 0 || negatives == 0) {
    throw validation_error("roc: need at least one misprediction and one correct prediction");
  }
  for (double s : scores)
    if (!std::isfinite(s)) throw validation_error("roc: non-finite score");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  constexpr double inf = std::numeric_limits<double>::infinity();
  RocCurve curve;
  curve.points.push_back({0.0, 0.0, inf});
  std::int64_t tp = 0, fp = 0, prev_tp = 0, prev_fp = 0;
  // Twice the area in units of (1/P)(1/N); exact in integers.
  std::int64_t area2 = 0;
  const double p = static_cast<double>(positives), n = static_cast<double>(negatives);

  std::size_t i = 0;
  while (i < order.size()) {
    const double v = scores[order[i]];
    while (i < order.size() && scores[order[i]] == v) {
      (is_error[order[i]] ? tp : fp) += 1;
      ++i;
    }
    const double next = i < order.size() ? scores[order[i]] : -inf;
    curve.points.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p, next});
    area2 += (fp - prev_fp) * (tp + prev_tp);
    prev_tp = tp;
    prev_fp = fp;
  }
  curve.auc = static_cast<double>(area2) / (2.0 * p * n);
  return curve;
}

RocCurve roc(std::span<const ScoreRecord> records) {
  std::vector<double> scores;
  scores.reserve(records.size());
  // std::vector<bool> is not contiguous, so it cannot back a span.
  auto errors = std::make_unique<bool[]>(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.truth) throw validation_error("roc: record " + std::to_string(r.example_id) + " has no true class");
    scores.push_back(r.score);
    errors[i] = *r.truth != r.predicted;
  }
  return roc(scores, std::span<const bool>(errors.get(), records.size()));
}

double trapezoid_auc(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  return area;
}

SelectiveResult selective_accuracy(std::span<const ScoreRecord> records, double epsilon) {
  SelectiveResult out;
  if (records.empty()) return out;
  std::size_t kept = 0, kept_correct = 0;
  for (const auto& r : records) {
    if (!r.truth) throw validation_error("selective_accuracy: record without true class");
    if (r.score <= epsilon) {
      ++kept;
      if (*r.truth == r.predicted) ++kept_correct;
    }
  }
  out.coverage = static_cast<double>(kept) / static_cast<double>(records.size());
  if (kept > 0) out.accuracy = static_cast<double>(kept_correct) / static_cast<double>(kept);
  return out;
}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

BenchReport bench(const ScoringInputs& in, std::span<const Method> methods) {
  if (methods.empty()) throw configuration_error("bench: no methods requested");
  if (in.labels.empty()) throw configuration_error("bench: true labels are required", "labels");

  // Report every missing artifact at once rather than failing per method.
  std::string missing;
  for (Method m : methods) {
    for (const auto& what : missing_inputs(m, in)) {
      missing += (missing.empty() ? "" : ", ") + to_string(m) + ":" + what;
    }
  }
  if (!missing.empty()) throw configuration_error("bench: missing inputs " + missing, missing);

  BenchReport report;
  for (Method m : methods) {
    auto it = std::find_if(report.methods.begin(), report.methods.end(),
                           [m](const auto& entry) { return entry.first == m; });
    if (it != report.methods.end()) continue;
    const auto records = score_batch(m, in);
    report.methods.emplace_back(m, roc(records));
  }

  report.counts.total = in.labels.size();
  const auto preds = in.predictions;
  if (preds.size() != in.labels.size()) throw shape_error("bench: row count mismatch between labels and predictions");
  for (std::size_t i = 0; i < preds.size(); ++i) report.counts.correct += preds[i] == in.labels[i] ? 1 : 0;
  report.counts.mispredicted = report.counts.total - report.counts.correct;

  if (in.model) report.model_fingerprint = model_fingerprint(*in.model);
  if (in.kb) report.kb_fingerprint = in.kb->fingerprint();
  report.timestamp = utc_timestamp();
  return report;
}

namespace {

nlohmann::ordered_json threshold_json(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  return t;
}

}  // namespace

std::string report_to_json(const BenchReport& report) {
  nlohmann::ordered_json doc;
  doc["methods"] = nlohmann::ordered_json::object();
  for (const auto& [method, curve] : report.methods) {
    auto points = nlohmann::ordered_json::array();
    for (const auto& p : curve.points) points.push_back({p.fpr, p.tpr, threshold_json(p.threshold)});
    doc["methods"][to_string(method)] = {{"auc", curve.auc}, {"points", std::move(points)}};
  }
  doc["counts"] = {{"total", report.counts.total},
                   {"correct", report.counts.correct},
                   {"mispredicted", report.counts.mispredicted}};
  nlohmann::ordered_json meta;
  meta["positive_class"] = "misprediction";
  meta["flag_rule"] = "score > threshold";
  meta["model_fingerprint"] = report.model_fingerprint;
  meta["kb_fingerprint"] = report.kb_fingerprint;
  if (!report.timestamp.empty()) meta["timestamp"] = report.timestamp;
  doc["meta"] = std::move(meta);
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const BenchReport& report) {
  std::string out = "method,fpr,tpr,threshold\n";
  for (const auto& [method, curve] : report.methods) {
    for (const auto& p : curve.points) {
      out += to_string(method) + "," + format_double(p.fpr) + "," + format_double(p.tpr) + "," +
             format_double(p.threshold) + "\n";
    }
  }
  return out;
}

}  // namespace semshield
