#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "semshield/embedding.hpp"
#include "semshield/knowledge_base.hpp"
#include "semshield/synthetic.hpp"

using namespace semshield;

namespace {

const KnowledgeBase& traffic_kb() {
  static const KnowledgeBase kb = KnowledgeBase::from_file(SEMSHIELD_DATA_DIR "/traffic_signs_kb.json");
  return kb;
}

}  // namespace

TEST_CASE("fit: identity task recovers W = I") {
  // Orthonormal rows make S^T S = F^T F = S^T F = I, so I solves the system.
  std::mt19937_64 rng(3);
  const Matrix g = oracle::random_matrix<Matrix>(6, 6, rng);
  const Matrix q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd(g)).householderQ();
  FitOptions opts;
  opts.lambda = 1.0;
  const auto model = fit(q, q, opts);
  CHECK((model.w - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit: single example is singular unless a ridge is given") {
  Matrix f(1, 3), s(1, 2);
  f << 1, 2, 3;
  s << 1, 0;
  try {
    fit(f, s);
    FAIL("expected singularity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Singularity);
    CHECK(std::string(e.what()).find("lambda") != std::string::npos);
  }
  FitOptions opts;
  opts.solver.ridge = 1e-3;
  const auto model = fit(f, s, opts);
  CHECK(model.w.rows() == 2);
  CHECK(model.w.cols() == 3);
  CHECK(model.w.allFinite());
}

TEST_CASE("fit: contract violations") {
  Matrix f = Matrix::Ones(4, 3), s = Matrix::Ones(5, 2);
  CHECK_THROWS_AS(fit(f, s), Error);
  Matrix s4 = Matrix::Ones(4, 2);
  FitOptions zero;
  zero.lambda = 0.0;
  try {
    fit(f, s4, zero);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
  }
  CHECK_THROWS_AS(fit(Matrix(0, 3), Matrix(0, 2)), Error);
  f(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit(f, s4), Error);
}

TEST_CASE("fit: training rows land nearest their own prototype") {
  SynthConfig cfg;
  cfg.classes = traffic_kb().num_classes();
  cfg.test_per_class = 1;
  cfg.mcd_passes = 2;
  const auto data = generate(cfg, traffic_kb());
  const Matrix s = annotate(traffic_kb(), data.train_labels);
  const auto model = fit(data.train_features, s);
  const Matrix proj = project_batch(model, data.train_features);
  const auto protos = build_prototypes(traffic_kb());

  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < proj.rows(); ++i) {
    Eigen::Index best = 0;
    (protos.rows.rowwise() - proj.row(i)).rowwise().squaredNorm().minCoeff(&best);
    hits += static_cast<std::size_t>(best) == data.train_labels[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(proj.rows()) >= 0.99);
}

TEST_CASE("fit: stationarity of the tied-weights objective") {
  std::mt19937_64 rng(17);
  const Matrix f = oracle::random_matrix<Matrix>(40, 6, rng);
  const Matrix s = oracle::random_matrix<Matrix>(40, 4, rng);
  const double lambda = 0.1;
  FitOptions opts;
  opts.lambda = lambda;
  const auto model = fit(f, s, opts);
  CHECK(fit_residual(f, s, model) < 1e-12);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < model.w.rows(); ++i)
    for (Eigen::Index j = 0; j < model.w.cols(); ++j)
      worst = std::max(worst, std::abs(oracle::sae_partial(f, s, model.w, lambda, i, j)));
  CHECK(worst <= 1e-4);

  // A perturbed W is not stationary, so the check has teeth.
  Matrix off = model.w;
  off(1, 2) += 0.1;
  CHECK(std::abs(oracle::sae_partial(f, s, off, lambda, 1, 2)) > 1e-2);
}

TEST_CASE("fit: deterministic and invariant to consistent row permutation") {
  std::mt19937_64 rng(23);
  const Matrix f = oracle::random_matrix<Matrix>(30, 5, rng);
  const Matrix s = oracle::random_matrix<Matrix>(30, 3, rng);
  const auto a = fit(f, s), b = fit(f, s);
  CHECK(std::memcmp(a.w.data(), b.w.data(), sizeof(double) * static_cast<std::size_t>(a.w.size())) == 0);

  Eigen::PermutationMatrix<Eigen::Dynamic> perm(30);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 30, rng);
  const Matrix fp = perm * f, sp = perm * s;
  const auto c = fit(fp, sp);
  CHECK((c.w - a.w).norm() <= 1e-10 * a.w.norm());
}

TEST_CASE("project: linearity, identity and shape") {
  std::mt19937_64 rng(31);
  ProjectionModel model;
  model.lambda = 0.1;
  model.w = oracle::random_matrix<Matrix>(4, 6, rng);
  const Vector f = oracle::random_matrix<Matrix>(6, 1, rng);
  CHECK(project(model, Vector::Zero(6)).isZero(0.0));
  CHECK((project(model, (2.0 * f).eval()) - 2.0 * project(model, f)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(project(model, Vector::Zero(5)), Error);

  ProjectionModel ident;
  ident.lambda = 1;
  ident.w = Matrix::Identity(6, 6);
  CHECK(project(ident, f) == f);
}

TEST_CASE("project_batch agrees with per-row project") {
  std::mt19937_64 rng(37);
  ProjectionModel model;
  model.lambda = 0.1;
  model.w = oracle::random_matrix<Matrix>(4, 6, rng);
  const Matrix batch = oracle::random_matrix<Matrix>(25, 6, rng);
  const Matrix out = project_batch(model, batch);
  double worst = 0;
  for (Eigen::Index i = 0; i < batch.rows(); ++i)
    worst = std::max(worst, (out.row(i).transpose() - project(model, batch.row(i).transpose())).cwiseAbs().maxCoeff());
  CHECK(worst < 1e-12);

  const Matrix one = project_batch(model, batch.topRows(1));
  CHECK(one.row(0).transpose() == project(model, batch.row(0).transpose()));
  const Matrix none = project_batch(model, Matrix(0, 6));
  CHECK(none.rows() == 0);
  CHECK(none.cols() == 4);
}

TEST_CASE("fit with standardisation") {
  std::mt19937_64 rng(41);
  Matrix f = oracle::random_matrix<Matrix>(50, 4, rng);
  f.col(0) = f.col(0) * 100.0 + Vector::Constant(50, 7.0);
  const Matrix s = oracle::random_matrix<Matrix>(50, 3, rng);
  FitOptions opts;
  opts.standardize = true;
  const auto model = fit(f, s, opts);
  REQUIRE(model.standardized());
  CHECK(model.feature_mean(0) == doctest::Approx(f.col(0).mean()));
  CHECK(fit_residual(f, s, model) < 1e-12);
  // Projection applies the same affine map as the fit.
  const Vector x = f.row(3).transpose();
  const Vector z = ((x - model.feature_mean).array() / model.feature_scale.array()).matrix();
  CHECK((project(model, x) - model.w * z).cwiseAbs().maxCoeff() < 1e-12);
}
