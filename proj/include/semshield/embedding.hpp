#pragma once

// Semantic autoencoder projection: a linear map W (k x n) from classifier
// features into attribute space, fitted with tied encoder/decoder weights.
//
// Examples are stored as rows (features F is m x n, annotations S is m x k).
// Minimising ||F^T - W^T S^T||^2 + lambda ||W F^T - S^T||^2 over W gives
//
//     (S^T S) W + W (lambda F^T F) = (1 + lambda) S^T F,
//
// a Sylvester equation with symmetric PSD coefficients.

#include <optional>
#include <string>

#include "semshield/matrix_core.hpp"

namespace semshield {

inline constexpr double kDefaultLambda = 0.1;

template <typename Scalar>
struct BasicProjectionModel {
  DenseMatrix<Scalar> w;  // k x n
  Scalar lambda{};
  std::string kb_fingerprint;
  // Per-feature standardisation applied before projection; empty when off.
  DenseVector<Scalar> feature_mean;
  DenseVector<Scalar> feature_scale;

  Eigen::Index feature_dim() const { return w.cols(); }
  Eigen::Index semantic_dim() const { return w.rows(); }
  bool standardized() const { return feature_mean.size() != 0; }
};

using ProjectionModel = BasicProjectionModel<double>;

struct FitOptions {
  double lambda = kDefaultLambda;
  bool standardize = false;
  SylvesterOptions solver{};
  std::string kb_fingerprint;
};

/// Relative residual ||A W + W B - C||_F / max(1, ||C||_F) of the fit system.
template <typename DF, typename DS, typename Scalar>
Scalar fit_residual(const Eigen::MatrixBase<DF>& features, const Eigen::MatrixBase<DS>& annotations,
                    const BasicProjectionModel<Scalar>& model) {
  DenseMatrix<Scalar> f = features;
  if (model.standardized()) {
    f = ((f.rowwise() - model.feature_mean.transpose()).array().rowwise() /
         model.feature_scale.transpose().array())
            .matrix();
  }
  const DenseMatrix<Scalar> a = annotations.transpose() * annotations;
  const DenseMatrix<Scalar> b = model.lambda * (f.transpose() * f);
  const DenseMatrix<Scalar> c = (Scalar(1) + model.lambda) * (annotations.transpose() * f);
  return sylvester_residual(a, b, c, model.w) / std::max(Scalar(1), c.norm());
}

template <typename DF, typename DS>
BasicProjectionModel<typename DF::Scalar> fit(const Eigen::MatrixBase<DF>& features,
                                              const Eigen::MatrixBase<DS>& annotations,
                                              const FitOptions& opts = {}) {
  using Scalar = typename DF::Scalar;
  if (features.rows() < 1) throw validation_error("fit: need at least one example");
  if (features.rows() != annotations.rows()) {
    throw shape_error("fit: row count mismatch (" + std::to_string(features.rows()) + " features vs " +
                      std::to_string(annotations.rows()) + " annotations)");
  }
  if (!(opts.lambda > 0.0) || !std::isfinite(opts.lambda)) {
    throw validation_error("fit: lambda must be > 0");
  }
  require_finite(features, "features");
  require_finite(annotations, "annotations");

  BasicProjectionModel<Scalar> model;
  model.lambda = Scalar(opts.lambda);
  model.kb_fingerprint = opts.kb_fingerprint;

  DenseMatrix<Scalar> f = features;
  if (opts.standardize) {
    model.feature_mean = f.colwise().mean().transpose();
    f.rowwise() -= model.feature_mean.transpose();
    model.feature_scale = (f.colwise().squaredNorm() / Scalar(f.rows())).cwiseSqrt().transpose();
    for (Eigen::Index j = 0; j < model.feature_scale.size(); ++j)
      if (!(model.feature_scale(j) > Scalar(0))) model.feature_scale(j) = Scalar(1);
    f = (f.array().rowwise() / model.feature_scale.transpose().array()).matrix();
  }

  const DenseMatrix<Scalar> s = annotations;
  DenseMatrix<Scalar> a = s.transpose() * s;
  DenseMatrix<Scalar> b = model.lambda * (f.transpose() * f);
  a = (a + a.transpose().eval()) / Scalar(2);
  b = (b + b.transpose().eval()) / Scalar(2);
  const DenseMatrix<Scalar> c = (Scalar(1) + model.lambda) * (s.transpose() * f);

  try {
    model.w = sylvester_solve(a, b, c, opts.solver);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Singularity) throw;
    throw Error(ErrorKind::Singularity,
                std::string(e.what()) + " (try a larger lambda or a nonzero ridge)", e.context());
  }
  return model;
}

/// s = W f (after standardisation, when the model carries it).
template <typename Scalar, typename DF>
DenseVector<Scalar> project(const BasicProjectionModel<Scalar>& model, const Eigen::MatrixBase<DF>& feature) {
  if (feature.size() != model.feature_dim()) {
    throw shape_error("project: feature length " + std::to_string(feature.size()) + ", model expects " +
                      std::to_string(model.feature_dim()));
  }
  DenseVector<Scalar> f = feature.derived().reshaped();
  if (model.standardized()) {
    f = ((f - model.feature_mean).array() / model.feature_scale.array()).matrix();
  }
  return model.w * f;
}

/// Row-wise project: returns m x k.
template <typename Scalar, typename DF>
DenseMatrix<Scalar> project_batch(const BasicProjectionModel<Scalar>& model,
                                  const Eigen::MatrixBase<DF>& features) {
  if (features.rows() > 0 && features.cols() != model.feature_dim()) {
    throw shape_error("project_batch: features have " + std::to_string(features.cols()) +
                      " columns, model expects " + std::to_string(model.feature_dim()));
  }
  DenseMatrix<Scalar> out(features.rows(), model.semantic_dim());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.row(i) = project(model, features.row(i).transpose()).transpose();
  }
  return out;
}

}  // namespace semshield
