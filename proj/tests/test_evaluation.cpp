#include <doctest.h>

#include <json.hpp>
#include <random>

#include "oracles.hpp"
#include "semshield/evaluation.hpp"

using namespace semshield;

namespace {

RocCurve roc_of(const std::vector<double>& scores, const std::vector<bool>& err) {
  auto flags = std::make_unique<bool[]>(err.size());
  std::copy(err.begin(), err.end(), flags.get());
  return roc(scores, std::span<const bool>(flags.get(), err.size()));
}

std::vector<ScoreRecord> records_of(const std::vector<double>& scores, const std::vector<bool>& err) {
  std::vector<ScoreRecord> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    ScoreRecord r;
    r.example_id = i;
    r.predicted = 1;
    r.truth = err[i] ? 0 : 1;
    r.score = scores[i];
    out.push_back(r);
  }
  return out;
}

void check_curve_shape(const RocCurve& c) {
  REQUIRE(c.points.size() >= 2);
  CHECK(c.points.front().fpr == 0.0);
  CHECK(c.points.front().tpr == 0.0);
  CHECK(c.points.back().fpr == 1.0);
  CHECK(c.points.back().tpr == 1.0);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    CHECK(c.points[i].fpr >= c.points[i - 1].fpr);
    CHECK(c.points[i].tpr >= c.points[i - 1].tpr);
  }
  CHECK(c.auc >= 0.0);
  CHECK(c.auc <= 1.0);
  CHECK(std::abs(trapezoid_auc(c.points) - c.auc) <= 1e-12);
}

}  // namespace

TEST_CASE("roc: perfect separation") {
  const auto c = roc_of({0.1, 0.2, 0.9, 0.8}, {false, false, true, true});
  check_curve_shape(c);
  CHECK(c.auc == 1.0);
}

TEST_CASE("roc: identical scores give the diagonal") {
  const auto c = roc_of({0.4, 0.4, 0.4}, {true, false, false});
  REQUIRE(c.points.size() == 2);
  CHECK(c.points[0].fpr == 0.0);
  CHECK(c.points[1].tpr == 1.0);
  CHECK(c.auc == 0.5);
}

TEST_CASE("roc: hand case with interleaved scores") {
  const std::vector<double> scores{0.1, 0.2, 0.15, 0.3};
  const std::vector<bool> err{false, false, true, true};
  const auto c = roc_of(scores, err);
  check_curve_shape(c);
  CHECK(oracle::rank_auc(scores, err) == doctest::Approx(0.75));
  CHECK(c.auc == doctest::Approx(0.75).epsilon(1e-12));
  // Every point matches direct counting at its threshold.
  for (const auto& p : c.points) {
    const auto [fpr, tpr] = oracle::rates_at(scores, err, p.threshold);
    CHECK(p.fpr == fpr);
    CHECK(p.tpr == tpr);
  }
}

TEST_CASE("roc: trapezoid equals the rank statistic on tie-heavy sets") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(rng() % 60);
    const int levels = 1 + static_cast<int>(rng() % 6);
    std::vector<double> scores(n);
    std::vector<bool> err(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % static_cast<unsigned>(levels)) * 0.1;
      err[i] = rng() % 3 == 0;
    }
    err[0] = true;
    err[1] = false;
    const auto c = roc_of(scores, err);
    check_curve_shape(c);
    CHECK(std::abs(c.auc - oracle::rank_auc(scores, err)) <= 1e-12);
  }
}

TEST_CASE("roc: invariant under strictly increasing transforms") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> s(40), t(40);
  std::vector<bool> err(40);
  for (std::size_t i = 0; i < 40; ++i) {
    s[i] = std::round(u(rng) * 10) / 10;
    t[i] = std::exp(3 * s[i]) + 5;
    err[i] = i % 4 == 0;
  }
  const auto a = roc_of(s, err), b = roc_of(t, err);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].fpr == b.points[i].fpr);
    CHECK(a.points[i].tpr == b.points[i].tpr);
  }
  CHECK(a.auc == b.auc);
}

TEST_CASE("roc: removing a correct example leaves TPR per threshold unchanged") {
  const std::vector<double> s{0.9, 0.5, 0.7, 0.2, 0.6, 0.3};
  const std::vector<bool> err{true, false, true, false, false, true};
  std::vector<double> s2 = s;
  std::vector<bool> e2 = err;
  s2.erase(s2.begin() + 4);
  e2.erase(e2.begin() + 4);
  for (double eps : {-1.0, 0.2, 0.3, 0.5, 0.6, 0.7, 0.9, 2.0}) {
    CHECK(oracle::rates_at(s, err, eps).second == oracle::rates_at(s2, e2, eps).second);
  }
  for (const auto& p : roc_of(s2, e2).points) CHECK(p.tpr == oracle::rates_at(s, err, p.threshold).second);
}

TEST_CASE("roc: needs both outcomes") {
  CHECK_THROWS_AS(roc_of({0.1, 0.2}, {true, true}), Error);
  CHECK_THROWS_AS(roc_of({0.1, 0.2}, {false, false}), Error);
  std::vector<ScoreRecord> recs = records_of({0.1, 0.2}, {true, false});
  recs[0].truth.reset();
  CHECK_THROWS_AS(roc(recs), Error);
}

TEST_CASE("selective_accuracy") {
  // correct, correct, wrong, correct
  const auto recs = records_of({0.1, 0.4, 0.3, 0.8}, {false, false, true, false});
  const auto all = selective_accuracy(recs, std::numeric_limits<double>::infinity());
  CHECK(all.coverage == 1.0);
  CHECK(*all.accuracy == doctest::Approx(0.75));
  const auto none = selective_accuracy(recs, 0.05);
  CHECK(none.coverage == 0.0);
  CHECK_FALSE(none.accuracy.has_value());
  CHECK_FALSE(selective_accuracy(recs, -std::numeric_limits<double>::infinity()).accuracy.has_value());
  // eps = 0.3 keeps 0.1, 0.3 (<=) -> 1 of 2 correct.
  const auto mid = selective_accuracy(recs, 0.3);
  CHECK(mid.coverage == 0.5);
  CHECK(*mid.accuracy == 0.5);
  const auto most = selective_accuracy(recs, 0.5);
  CHECK(most.coverage == 0.75);
  CHECK(*most.accuracy == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("bench: curves per method, counts, determinism, serialisation") {
  std::vector<std::size_t> preds{0, 1, 1, 0, 1, 0}, labels{0, 1, 0, 0, 0, 0};
  Matrix probs(6, 2);
  probs << 0.9, 0.1, 0.2, 0.8, 0.45, 0.55, 0.6, 0.4, 0.3, 0.7, 0.99, 0.01;
  std::vector<Matrix> mcd;
  for (int i = 0; i < 6; ++i) {
    Matrix m(2, 2);
    const double d = 0.05 * i;
    m << 0.5 + d, 0.5 - d, 0.5 - d, 0.5 + d;
    mcd.push_back(m);
  }
  ScoringInputs in;
  in.predictions = preds;
  in.labels = labels;
  in.probs = &probs;
  in.mcd = &mcd;
  const std::vector<Method> methods{Method::Softmax, Method::Mcd};
  auto a = bench(in, methods), b = bench(in, methods);
  REQUIRE(a.methods.size() == 2);
  CHECK(a.counts.total == 6);
  CHECK(a.counts.mispredicted == 2);
  CHECK(a.counts.correct + a.counts.mispredicted == a.counts.total);
  for (const auto& [m, c] : a.methods) check_curve_shape(c);

  a.timestamp.clear();
  b.timestamp.clear();
  CHECK(report_to_json(a) == report_to_json(b));

  const auto doc = nlohmann::json::parse(report_to_json(a));
  CHECK(doc["methods"]["softmax"]["auc"].get<double>() == a.methods[0].second.auc);
  CHECK(doc["methods"]["mcd"]["points"][0][2] == "inf");
  CHECK(doc["counts"]["mispredicted"] == 2);
  CHECK(doc["meta"]["positive_class"] == "misprediction");

  const auto csv = report_to_csv(a);
  CHECK(csv.rfind("method,fpr,tpr,threshold\n", 0) == 0);
  CHECK(csv.find("softmax,0,0,inf\n") != std::string::npos);

  const std::vector<Method> with_nnd{Method::Softmax, Method::Nnd, Method::Semantic};
  try {
    bench(in, with_nnd);
    FAIL("expected configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
    CHECK(std::string(e.what()).find("train_features") != std::string::npos);
    CHECK(std::string(e.what()).find("semantic:model") != std::string::npos);
  }
}
