#pragma once

// Dense linear algebra used by the projection fit: shape-checked products,
// a cyclic Jacobi symmetric eigensolver and a Sylvester solver specialised to
// symmetric positive semidefinite coefficient matrices.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "semshield/errors.hpp"

namespace semshield {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = DenseMatrix<double>;
using Vector = DenseVector<double>;

namespace detail {

inline std::string shape_str(Eigen::Index r, Eigen::Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

}  // namespace detail

/// Throws a validation error if any entry is NaN or infinite.
template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const std::string& what) {
  if (!m.derived().allFinite()) {
    throw validation_error(what + " contains non-finite entries", what);
  }
}

/// Matrix product with an explicit shape check.
template <typename DerivedA, typename DerivedB>
DenseMatrix<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a,
                                              const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.rows()) {
    throw shape_error("matmul: inner dimensions differ (" + detail::shape_str(a.rows(), a.cols()) +
                      " x " + detail::shape_str(b.rows(), b.cols()) + ")");
  }
  DenseMatrix<typename DerivedA::Scalar> out = a * b;
  return out;
}

/// Max-abs deviation from symmetry, relative to max(1, max|a_ij|).
template <typename Derived>
typename Derived::Scalar relative_asymmetry(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.size() == 0) return Scalar(0);
  const Scalar scale = std::max(Scalar(1), a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

template <typename Scalar>
struct SymEigen {
  DenseVector<Scalar> eigenvalues;   // ascending
  DenseMatrix<Scalar> eigenvectors;  // column j pairs with eigenvalues[j]
  int sweeps = 0;
};

struct JacobiOptions {
  double tolerance = 1e-11;  // off-diagonal Frobenius norm relative to ||A||_F
  int max_sweeps = 100;
  double symmetry_tolerance = 1e-10;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps over all (p, q) pairs, annihilating each off-diagonal entry with a
/// plane rotation, until the off-diagonal Frobenius norm falls below
/// `tolerance * ||A||_F`. Eigenvalues are returned in ascending order.
template <typename Derived>
SymEigen<typename Derived::Scalar> sym_eigen(const Eigen::MatrixBase<Derived>& input,
                                             const JacobiOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::sqrt;

  if (input.rows() != input.cols()) {
    throw validation_error("sym_eigen: matrix must be square, got " +
                           detail::shape_str(input.rows(), input.cols()));
  }
  require_finite(input, "sym_eigen input");
  if (relative_asymmetry(input) > Scalar(opts.symmetry_tolerance)) {
    throw validation_error("sym_eigen: matrix is not symmetric");
  }

  const Eigen::Index n = input.rows();
  // Column-major working copy: rotations touch whole rows and columns.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a =
      (input + input.transpose()) / Scalar(2);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> v =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(n, n);

  const Scalar norm = a.norm();
  const Scalar threshold = Scalar(opts.tolerance) * norm;

  auto off_norm = [&]() {
    Scalar s(0);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return sqrt(s);
  };

  int sweep = 0;
  Scalar off = off_norm();
  while (off > threshold) {
    if (sweep == opts.max_sweeps) {
      std::ostringstream os;
      os << "sym_eigen: no convergence after " << opts.max_sweeps
         << " sweeps, off-diagonal residual " << off;
      throw Error(ErrorKind::Convergence, os.str());
    }
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        Scalar t = Scalar(1) / (abs(theta) + sqrt(theta * theta + Scalar(1)));
        if (theta < Scalar(0)) t = -t;
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;

        // A <- A P, then A <- P^T A, with P the (p, q) plane rotation.
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = Scalar(0);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    ++sweep;
    off = off_norm();
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  SymEigen<Scalar> out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.eigenvalues(j) = a(src, src);
    out.eigenvectors.col(j) = v.col(src);
  }
  out.sweeps = sweep;
  return out;
}

struct SylvesterOptions {
  double ridge = 0.0;
  // Eigenvalue-pair sums below this (relative to max(1, |largest pair sum|))
  // count as singular.
  double singular_threshold = 1e-8;
  // Eigenvalues below -psd_tolerance * scale reject the input as indefinite.
  double psd_tolerance = 1e-8;
  JacobiOptions jacobi{};
};

/// Solves A W + W B = C for symmetric positive semidefinite A (k x k) and
/// B (n x n) by diagonalising both: with A = U L U^T and B = V M V^T,
/// W = U [ (U^T C V)_ij / (l_i + m_j) ] V^T.
///
/// When some l_i + m_j is numerically zero the system is singular; a nonzero
/// `ridge` shifts every pair sum by that amount, otherwise a singularity error
/// is raised.
template <typename DerivedA, typename DerivedB, typename DerivedC>
DenseMatrix<typename DerivedA::Scalar> sylvester_solve(const Eigen::MatrixBase<DerivedA>& a,
                                                       const Eigen::MatrixBase<DerivedB>& b,
                                                       const Eigen::MatrixBase<DerivedC>& c,
                                                       const SylvesterOptions& opts = {}) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != a.cols() || b.rows() != b.cols()) {
    throw shape_error("sylvester_solve: coefficient matrices must be square");
  }
  if (c.rows() != a.rows() || c.cols() != b.rows()) {
    throw shape_error("sylvester_solve: right-hand side is " + detail::shape_str(c.rows(), c.cols()) +
                      ", expected " + detail::shape_str(a.rows(), b.rows()));
  }
  if (opts.ridge < 0.0) throw validation_error("sylvester_solve: ridge must be >= 0");
  require_finite(c, "sylvester_solve right-hand side");

  const auto ea = sym_eigen(a, opts.jacobi);
  const auto eb = sym_eigen(b, opts.jacobi);
  const Eigen::Index k = a.rows(), n = b.rows();
  if (k == 0 || n == 0) return DenseMatrix<Scalar>::Zero(k, n);

  const Scalar scale = std::max<Scalar>(
      Scalar(1), std::max(std::abs(ea.eigenvalues(k - 1)), std::abs(ea.eigenvalues(0))) +
                     std::max(std::abs(eb.eigenvalues(n - 1)), std::abs(eb.eigenvalues(0))));
  const Scalar psd_floor = -Scalar(opts.psd_tolerance) * scale;
  if (ea.eigenvalues(0) < psd_floor || eb.eigenvalues(0) < psd_floor) {
    throw validation_error("sylvester_solve: coefficient matrix is not positive semidefinite");
  }

  const Scalar min_pair = ea.eigenvalues(0) + eb.eigenvalues(0);
  const bool singular = min_pair < Scalar(opts.singular_threshold) * scale;
  if (singular && opts.ridge == 0.0) {
    std::ostringstream os;
    os << "sylvester_solve: singular system (smallest eigenvalue-pair sum " << min_pair
       << "); increase the ridge";
    throw Error(ErrorKind::Singularity, os.str());
  }
  const Scalar shift = singular ? Scalar(opts.ridge) : Scalar(0);

  DenseMatrix<Scalar> rotated = ea.eigenvectors.transpose() * c * eb.eigenvectors;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      rotated(i, j) /= ea.eigenvalues(i) + eb.eigenvalues(j) + shift;
    }
  }
  DenseMatrix<Scalar> w = ea.eigenvectors * rotated * eb.eigenvectors.transpose();
  return w;
}

/// ||A W + W B - C||_F
template <typename DA, typename DB, typename DC, typename DW>
typename DA::Scalar sylvester_residual(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b,
                                       const Eigen::MatrixBase<DC>& c, const Eigen::MatrixBase<DW>& w) {
  return (a * w + w * b - c).norm();
}

}  // namespace semshield
