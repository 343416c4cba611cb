#pragma once
// Dense symmetric-matrix utilities: eigendecomposition-based matrix powers,
// guarded inversion, diagonal powers, and covariance-to-correlation scaling.
// These are the primitives behind every closed-form expression in the
// predictor and transform modules.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fsk/errors.hpp"

namespace fsk {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::Index;

// Relative eigenvalue guard used throughout when none is given explicitly.
inline constexpr double kDefaultEps = 1e-10;

// Largest asymmetry absorbed silently when constructing a SymMatrix.
inline constexpr double kSymmetryTol = 1e-9;

// A dense real symmetric matrix. Construction symmetrizes via (m + m')/2
// when the asymmetry is below tol and rejects otherwise, so floating-point
// noise from products is absorbed while genuine caller bugs still surface.
// The stored matrix satisfies m(i,j) == m(j,i) exactly.
template <class Scalar>
class SymMatrix {
 public:
  using Dense = Matrix<Scalar>;

  SymMatrix() = default;

  explicit SymMatrix(const Dense& m, Scalar tol = Scalar(kSymmetryTol)) {
    if (m.rows() != m.cols()) {
      throw NotSymmetric("SymMatrix: matrix is not square (" +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ")");
    }
    if (m.size() > 0) {
      const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
      if (!(asym <= tol)) {  // catches NaN as well
        throw NotSymmetric("SymMatrix: asymmetry " + std::to_string(double(asym)) +
                           " exceeds tolerance");
      }
    }
    m_ = ((m + m.transpose()) / Scalar(2)).eval();
  }

  static SymMatrix identity(Index n) { return SymMatrix(Dense::Identity(n, n)); }

  static SymMatrix from_diagonal(const Vector<Scalar>& d) {
    return SymMatrix(Dense(d.asDiagonal()));
  }

  Index dim() const { return m_.rows(); }
  const Dense& m() const { return m_; }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Dense m_;
};

using SymMatrixd = SymMatrix<double>;

namespace detail {

template <class Scalar>
Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eigensolve(
    const SymMatrix<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(m.m());
  if (es.info() != Eigen::Success) {
    throw NumericalIntegrity("symmetric eigensolver failed to converge");
  }
  return es;
}

template <class Scalar>
bool is_fractional(Scalar e) {
  return e != std::floor(e);
}

}  // namespace detail

// m raised to `exponent` through its eigendecomposition: V diag(l^e) V'.
// Eigenvalues within eps*max|l| of zero are clamped to 0 for nonnegative
// exponents; anything below -eps*max|l| rejects the input as indefinite.
template <class Scalar>
SymMatrix<Scalar> sym_power(const SymMatrix<Scalar>& m, Scalar exponent,
                            Scalar eps = Scalar(kDefaultEps)) {
  const auto es = detail::eigensolve(m);
  Vector<Scalar> lam = es.eigenvalues();
  const Scalar scale = m.dim() > 0 ? lam.cwiseAbs().maxCoeff() : Scalar(0);
  const Scalar guard = eps * scale;

  for (Index i = 0; i < lam.size(); ++i) {
    if (lam[i] < -guard) {
      throw NotPositiveSemiDefinite(
          "sym_power: eigenvalue " + std::to_string(double(lam[i])) +
          " below tolerance " + std::to_string(double(-guard)));
    }
    if (exponent < Scalar(0)) {
      if (lam[i] <= guard) {
        throw Singular("sym_power: eigenvalue " + std::to_string(double(lam[i])) +
                       " too small for negative exponent");
      }
    } else if (lam[i] <= guard) {
      lam[i] = Scalar(0);
    }
    lam[i] = std::pow(lam[i], exponent);
  }
  return SymMatrix<Scalar>(
      es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose(),
      std::numeric_limits<Scalar>::infinity());
}

// Guarded inverse. Rejects when the smallest eigenvalue is at or below
// eps times the largest, which also rejects indefinite input.
template <class Scalar>
SymMatrix<Scalar> safe_inverse(const SymMatrix<Scalar>& m,
                               Scalar eps = Scalar(kDefaultEps)) {
  const auto es = detail::eigensolve(m);
  const Vector<Scalar>& lam = es.eigenvalues();
  if (m.dim() == 0) return m;
  const Scalar lo = lam.minCoeff();
  const Scalar hi = lam.maxCoeff();
  if (lo <= eps * hi) {
    throw Singular("safe_inverse: eigenvalue ratio " + std::to_string(double(lo)) +
                   " / " + std::to_string(double(hi)) + " below tolerance");
  }
  return SymMatrix<Scalar>(es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
                               es.eigenvectors().transpose(),
                           std::numeric_limits<Scalar>::infinity());
}

// Diagonal matrix holding diag(m) raised elementwise to `exponent`. On
// diagonal matrices this coincides with sym_power, which is what makes
// the matrix square-root and the elementwise square-root interchangeable
// there.
template <class Scalar>
SymMatrix<Scalar> diag_power(const SymMatrix<Scalar>& m, Scalar exponent) {
  Vector<Scalar> d = m.m().diagonal();
  const bool needs_positive =
      exponent < Scalar(0) || detail::is_fractional(exponent);
  for (Index i = 0; i < d.size(); ++i) {
    if (needs_positive && d[i] <= Scalar(0)) {
      throw NonPositiveDiagonal("diag_power: diagonal entry " +
                                std::to_string(double(d[i])) +
                                " requires a positive value");
    }
    d[i] = std::pow(d[i], exponent);
  }
  return SymMatrix<Scalar>::from_diagonal(d);
}

// Largest |m(i,j)| over i != j; 0 for matrices of dimension <= 1.
template <class Scalar>
Scalar offdiag_max(const SymMatrix<Scalar>& m) {
  Scalar best(0);
  for (Index j = 0; j < m.dim(); ++j)
    for (Index i = 0; i < j; ++i) best = std::max(best, std::abs(m(i, j)));
  return best;
}

template <class Scalar>
Scalar offdiag_max(const Matrix<Scalar>& m) {
  Scalar best(0);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j) best = std::max(best, std::abs(m(i, j)));
  return best;
}

// D^{-1/2} c D^{-1/2} with D = diag(c). The unit diagonal is set exactly.
template <class Scalar>
SymMatrix<Scalar> corr_from_cov(const SymMatrix<Scalar>& c) {
  Vector<Scalar> d = c.m().diagonal();
  for (Index i = 0; i < d.size(); ++i) {
    if (d[i] <= Scalar(0)) {
      throw NonPositiveDiagonal("corr_from_cov: variance " +
                                std::to_string(double(d[i])) + " at index " +
                                std::to_string(i) + " is not positive");
    }
  }
  const Vector<Scalar> s = d.cwiseSqrt().cwiseInverse();
  Matrix<Scalar> r = s.asDiagonal() * c.m() * s.asDiagonal();
  r.diagonal().setOnes();
  return SymMatrix<Scalar>(std::move(r),
                           std::numeric_limits<Scalar>::infinity());
}

// Max-abs difference, the residual metric used by every invariant in this
// library.
template <class DerivedA, class DerivedB>
typename DerivedA::Scalar max_abs_diff(const Eigen::MatrixBase<DerivedA>& a,
                                       const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != b.rows() || a.cols() != b.cols())
    return std::numeric_limits<Scalar>::infinity();
  if (a.size() == 0) return Scalar(0);
  return (a.derived() - b.derived()).cwiseAbs().maxCoeff();
}

}  // namespace fsk
