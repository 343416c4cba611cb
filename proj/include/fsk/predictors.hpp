#pragma once
// The three classical factor score predictors, expressed as p x q weight
// matrices W with predictor scores W'x:
//
//   BL     - best linear (regression) predictor,  W' = Phi Lambda' Sigma^{-1}
//   BLCU   - best linear conditionally unbiased,  W' = (Lambda' Sigma^{-1} Lambda)^{-1} Lambda' Sigma^{-1}
//   DBLCP  - determinant best linear correlation-preserving,
//            W' = Phi^{1/2} (Phi^{1/2} Lambda' Sigma^{-1} Lambda Phi^{1/2})^{-1/2} Phi^{1/2} Lambda' Sigma^{-1}
//
// Cross-predictor covariances and correlations are computed generically as
// W_a' Sigma W_b; the closed forms those products reduce to serve as test
// oracles, not as the implementation.

#include <Eigen/Dense>

#include <string>

#include "fsk/errors.hpp"
#include "fsk/matalg.hpp"
#include "fsk/model.hpp"

namespace fsk {

enum class PredictorKind { BL, BLCU, DBLCP };

inline constexpr PredictorKind kAllPredictorKinds[] = {
    PredictorKind::BL, PredictorKind::BLCU, PredictorKind::DBLCP};

inline const char* to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::BL: return "bl";
    case PredictorKind::BLCU: return "blcu";
    case PredictorKind::DBLCP: return "dblcp";
  }
  return "?";
}

template <class Scalar = double>
struct WeightMatrix {
  PredictorKind kind;
  Matrix<Scalar> w;  // p x q; scores are w' x
};

// Weights from an explicit (Lambda, Phi, Sigma) triple. This form exists so
// the Schmid-Leiman pipeline can score orthogonalized primary loadings
// against the original observed covariance.
template <class Scalar>
WeightMatrix<Scalar> weights(const Matrix<Scalar>& lambda,
                             const SymMatrix<Scalar>& phi,
                             const SymMatrix<Scalar>& sigma,
                             PredictorKind kind,
                             Scalar eps = Scalar(kDefaultEps)) {
  const SymMatrix<Scalar> sigma_inv = safe_inverse(sigma, eps);
  const Matrix<Scalar> siglam = sigma_inv.m() * lambda;  // Sigma^{-1} Lambda

  switch (kind) {
    case PredictorKind::BL:
      return {kind, siglam * phi.m()};
    case PredictorKind::BLCU: {
      const SymMatrix<Scalar> g(lambda.transpose() * siglam);
      return {kind, siglam * safe_inverse(g, eps).m()};
    }
    case PredictorKind::DBLCP: {
      const SymMatrix<Scalar> g(lambda.transpose() * siglam);
      const SymMatrix<Scalar> phi_half = sym_power(phi, Scalar(0.5), eps);
      const SymMatrix<Scalar> inner(phi_half.m() * g.m() * phi_half.m());
      const SymMatrix<Scalar> inner_inv_half =
          sym_power(inner, Scalar(-0.5), eps);
      return {kind, siglam * phi_half.m() * inner_inv_half.m() * phi_half.m()};
    }
  }
  throw Error("weights: unknown predictor kind");
}

template <class Scalar>
WeightMatrix<Scalar> weights(const FactorModel<Scalar>& m, PredictorKind kind,
                             Scalar eps = Scalar(kDefaultEps)) {
  return weights(m.lambda, m.phi, sigma_from_model(m), kind, eps);
}

// W' Sigma W. Reduces to Phi Lambda' Sigma^{-1} Lambda Phi for BL, to
// (Lambda' Sigma^{-1} Lambda)^{-1} for BLCU, and to Phi itself for DBLCP
// (the correlation-preservation property).
template <class Scalar>
SymMatrix<Scalar> predictor_covariance(const Matrix<Scalar>& lambda,
                                       const SymMatrix<Scalar>& phi,
                                       const SymMatrix<Scalar>& sigma,
                                       PredictorKind kind,
                                       Scalar eps = Scalar(kDefaultEps)) {
  const Matrix<Scalar> w = weights(lambda, phi, sigma, kind, eps).w;
  return SymMatrix<Scalar>(w.transpose() * sigma.m() * w);
}

template <class Scalar>
SymMatrix<Scalar> predictor_covariance(const FactorModel<Scalar>& m,
                                       PredictorKind kind,
                                       Scalar eps = Scalar(kDefaultEps)) {
  return predictor_covariance(m.lambda, m.phi, sigma_from_model(m), kind, eps);
}

// W_a' Sigma W_b, rows indexing predictor a, columns predictor b. All three
// pairings reduce to symmetric closed forms, so the result is returned as a
// SymMatrix.
template <class Scalar>
SymMatrix<Scalar> cross_covariance(const Matrix<Scalar>& lambda,
                                   const SymMatrix<Scalar>& phi,
                                   const SymMatrix<Scalar>& sigma,
                                   PredictorKind a, PredictorKind b,
                                   Scalar eps = Scalar(kDefaultEps)) {
  const Matrix<Scalar> wa = weights(lambda, phi, sigma, a, eps).w;
  const Matrix<Scalar> wb = weights(lambda, phi, sigma, b, eps).w;
  return SymMatrix<Scalar>(wa.transpose() * sigma.m() * wb);
}

template <class Scalar>
SymMatrix<Scalar> cross_covariance(const FactorModel<Scalar>& m,
                                   PredictorKind a, PredictorKind b,
                                   Scalar eps = Scalar(kDefaultEps)) {
  return cross_covariance(m.lambda, m.phi, sigma_from_model(m), a, b, eps);
}

namespace detail {

// Entries of a correlation matrix may exceed [-1, 1] only by honest
// rounding; anything worse means an upstream defect and must not be
// silently clamped.
template <class Scalar>
void check_correlation_range(const Matrix<Scalar>& r, const char* where) {
  if (r.size() == 0) return;
  const Scalar worst = r.cwiseAbs().maxCoeff();
  if (worst > Scalar(1) + Scalar(1e-10)) {
    throw NumericalIntegrity(std::string(where) + ": correlation magnitude " +
                             std::to_string(double(worst)) + " exceeds 1");
  }
}

}  // namespace detail

// Cross-correlation: rows are normalized by predictor a's standard
// deviations and columns by predictor b's, so the result is generally not
// symmetric even though the underlying cross-covariance is.
template <class Scalar>
Matrix<Scalar> cross_correlation(const Matrix<Scalar>& lambda,
                                 const SymMatrix<Scalar>& phi,
                                 const SymMatrix<Scalar>& sigma,
                                 PredictorKind a, PredictorKind b,
                                 Scalar eps = Scalar(kDefaultEps)) {
  const SymMatrix<Scalar> cov_a =
      predictor_covariance(lambda, phi, sigma, a, eps);
  const SymMatrix<Scalar> cov_b =
      predictor_covariance(lambda, phi, sigma, b, eps);
  const SymMatrix<Scalar> c = cross_covariance(lambda, phi, sigma, a, b, eps);
  Matrix<Scalar> r = diag_power(cov_a, Scalar(-0.5)).m() * c.m() *
                     diag_power(cov_b, Scalar(-0.5)).m();
  detail::check_correlation_range(r, "cross_correlation");
  return r;
}

template <class Scalar>
Matrix<Scalar> cross_correlation(const FactorModel<Scalar>& m, PredictorKind a,
                                 PredictorKind b,
                                 Scalar eps = Scalar(kDefaultEps)) {
  return cross_correlation(m.lambda, m.phi, sigma_from_model(m), a, b, eps);
}

// Per-factor correlation of the predictor with its own factor (the validity
// or determinacy coefficient). Factor variances are one, so only the
// predictor's standard deviation normalizes.
template <class Scalar>
Vector<Scalar> factor_validity(const Matrix<Scalar>& lambda,
                               const SymMatrix<Scalar>& phi,
                               const SymMatrix<Scalar>& sigma,
                               PredictorKind kind,
                               Scalar eps = Scalar(kDefaultEps)) {
  const Matrix<Scalar> w = weights(lambda, phi, sigma, kind, eps).w;
  const Vector<Scalar> cov_with_factor =
      (w.transpose() * lambda * phi.m()).diagonal();
  const Vector<Scalar> var = (w.transpose() * sigma.m() * w).diagonal();
  Vector<Scalar> v(var.size());
  for (Index i = 0; i < var.size(); ++i) {
    if (var[i] <= Scalar(0)) {
      throw NonPositiveDiagonal("factor_validity: predictor variance " +
                                std::to_string(double(var[i])) +
                                " is not positive");
    }
    v[i] = cov_with_factor[i] / std::sqrt(var[i]);
  }
  return v;
}

template <class Scalar>
Vector<Scalar> factor_validity(const FactorModel<Scalar>& m,
                               PredictorKind kind,
                               Scalar eps = Scalar(kDefaultEps)) {
  return factor_validity(m.lambda, m.phi, sigma_from_model(m), kind, eps);
}

}  // namespace fsk
