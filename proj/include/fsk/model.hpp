#pragma once
// The common factor model: p observed variables generated by q latent
// factors through x = Lambda f + e, with factor correlations Phi and
// strictly positive unique variances Psi^2 (diagonal, stored as a vector).
// The implied covariance is Sigma = Lambda Phi Lambda' + Psi^2.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "fsk/errors.hpp"
#include "fsk/matalg.hpp"
#include "fsk/rng.hpp"

namespace fsk {

template <class Scalar = double>
struct FactorModel {
  Matrix<Scalar> lambda;   // p x q loading matrix
  SymMatrix<Scalar> phi;   // q x q factor correlation matrix
  Vector<Scalar> psi2;     // length-p unique variances (diagonal of Psi^2)

  Index p() const { return lambda.rows(); }
  Index q() const { return lambda.cols(); }
};

using FactorModeld = FactorModel<double>;

// Numeric health summary produced by validate() for every valid model.
template <class Scalar = double>
struct ModelDiagnostics {
  Scalar sigma_condition_number = Scalar(0);
  Scalar min_psi2 = Scalar(0);
  Scalar min_phi_eigenvalue = Scalar(0);
  std::vector<std::string> flags;
};

// Sigma condition numbers above this get flagged NEAR_SINGULAR_SIGMA.
inline constexpr double kConditionWarnThreshold = 1e8;

// Model-implied covariance Lambda Phi Lambda' + Psi^2.
template <class Scalar>
SymMatrix<Scalar> sigma_from_model(const FactorModel<Scalar>& m) {
  Matrix<Scalar> sigma = m.lambda * m.phi.m() * m.lambda.transpose();
  sigma.diagonal() += m.psi2;
  return SymMatrix<Scalar>(std::move(sigma));
}

// Checks every structural invariant, throwing InvalidModel on the first
// violation, and returns diagnostics for models that pass. Near-singular
// Sigma is flagged, not rejected.
template <class Scalar>
ModelDiagnostics<Scalar> validate(const FactorModel<Scalar>& m,
                                  Scalar eps = Scalar(kDefaultEps)) {
  const Index p = m.p();
  const Index q = m.q();
  if (q < 1 || q >= p) {
    throw InvalidModel("factor count must satisfy 1 <= q < p (got q=" +
                       std::to_string(q) + ", p=" + std::to_string(p) + ")");
  }
  if (m.phi.dim() != q) {
    throw InvalidModel("phi must be q x q");
  }
  if (m.psi2.size() != p) {
    throw InvalidModel("psi2 must have length p");
  }
  for (Index i = 0; i < q; ++i) {
    if (std::abs(m.phi(i, i) - Scalar(1)) > Scalar(1e-8)) {
      throw InvalidModel("phi must have unit diagonal");
    }
  }
  if (m.psi2.minCoeff() <= Scalar(0)) {
    throw InvalidModel("psi2 must be strictly positive");
  }
  for (Index j = 0; j < q; ++j) {
    if (m.lambda.col(j).cwiseAbs().maxCoeff() == Scalar(0)) {
      throw InvalidModel("lambda column " + std::to_string(j) +
                         " is all zero: every factor must load somewhere");
    }
  }

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> phi_es(m.phi.m());
  const Scalar phi_min = phi_es.eigenvalues().minCoeff();
  const Scalar phi_max = phi_es.eigenvalues().maxCoeff();
  if (phi_min < -eps * std::max(phi_max, Scalar(1))) {
    throw InvalidModel("phi not PSD");
  }

  const SymMatrix<Scalar> sigma = sigma_from_model(m);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> sig_es(sigma.m());
  const Scalar sig_min = sig_es.eigenvalues().minCoeff();
  const Scalar sig_max = sig_es.eigenvalues().maxCoeff();
  if (sig_min <= eps * std::max(sig_max, Scalar(0))) {
    throw InvalidModel("model-implied sigma not positive definite");
  }

  ModelDiagnostics<Scalar> d;
  d.sigma_condition_number = sig_max / sig_min;
  d.min_psi2 = m.psi2.minCoeff();
  d.min_phi_eigenvalue = phi_min;
  if (d.sigma_condition_number > Scalar(kConditionWarnThreshold)) {
    d.flags.push_back("NEAR_SINGULAR_SIGMA");
  }
  return d;
}

// Rescales factors to unit variance: lambda <- lambda D^{1/2},
// phi <- D^{-1/2} phi D^{-1/2} with D = diag(phi). The implied Sigma is
// unchanged, which is what makes this safe to apply after a loading
// transformation that disturbs the factor variances.
template <class Scalar>
FactorModel<Scalar> standardize(const FactorModel<Scalar>& m) {
  const Vector<Scalar> d = m.phi.m().diagonal();
  for (Index i = 0; i < d.size(); ++i) {
    if (d[i] <= Scalar(0)) {
      throw NonPositiveDiagonal("standardize: factor variance " +
                                std::to_string(double(d[i])) +
                                " is not positive");
    }
  }
  FactorModel<Scalar> out;
  out.lambda = m.lambda * d.cwiseSqrt().asDiagonal();
  out.phi = corr_from_cov(m.phi);
  out.psi2 = m.psi2;
  return out;
}

namespace detail {

// Nearest-PSD repair for a candidate correlation matrix: clip eigenvalues
// from below at 1e-6, reconstruct, rescale to unit diagonal.
template <class Scalar>
SymMatrix<Scalar> project_to_psd_correlation(const SymMatrix<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(a.m());
  Vector<Scalar> lam = es.eigenvalues().cwiseMax(Scalar(1e-6));
  SymMatrix<Scalar> repaired(
      Matrix<Scalar>(es.eigenvectors() * lam.asDiagonal() *
                     es.eigenvectors().transpose()),
      std::numeric_limits<Scalar>::infinity());
  return corr_from_cov(repaired);
}

}  // namespace detail

// Deterministic synthetic model with simple structure: contiguous blocks of
// primary loadings in [0.4, 0.9], cross-loadings in [0, 0.3] carried by one
// or two hub variables that load on every non-primary factor, and oblique
// factor correlations in [0, 0.5] drawn from a one-general-factor family
// (pairwise products of per-factor gammas plus noise) and repaired to PSD
// when needed. Hub-structured cross-loadings and hierarchical correlations
// keep the transformed factor correlations consistent with a single general
// dimension, which is the regime the Schmid-Leiman step is meant for;
// independent off-diagonal draws instead make the one-factor solution a
// Heywood case for a sizable share of q = 3 models. Unique variances
// complete the diagonal to 1; draws are retried until all of them clear
// 0.05 so generated models stay away from Heywood territory.
template <class Scalar = double>
FactorModel<Scalar> random_model(Index p, Index q, bool oblique,
                                 std::uint64_t seed) {
  if (p < 3 || q < 1 || q >= p) {
    throw GenerationFailed("random_model requires p >= 3 and 1 <= q < p");
  }
  constexpr int kMaxAttempts = 100;
  SplitMix64 rng(seed);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Matrix<Scalar> lambda = Matrix<Scalar>::Zero(p, q);
    for (Index i = 0; i < p; ++i) {
      const Index primary = std::min<Index>(i * q / p, q - 1);
      lambda(i, primary) = Scalar(rng.uniform(0.4, 0.9));
    }
    const int n_hubs = p > 8 ? 2 : 1;
    for (int k = 0; k < n_hubs; ++k) {
      const Index hub = Index(rng.uniform() * double(p));
      const Index primary = std::min<Index>(hub * q / p, q - 1);
      for (Index j = 0; j < q; ++j) {
        if (j != primary) lambda(hub, j) = Scalar(rng.uniform(0.0, 0.3));
      }
    }

    SymMatrix<Scalar> phi = SymMatrix<Scalar>::identity(q);
    if (oblique && q > 1) {
      Vector<Scalar> gamma(q);
      for (Index j = 0; j < q; ++j) gamma[j] = Scalar(rng.uniform(0.35, 0.7));
      Matrix<Scalar> a = Matrix<Scalar>::Identity(q, q);
      for (Index i = 0; i < q; ++i)
        for (Index j = i + 1; j < q; ++j) {
          const Scalar r = std::clamp(
              gamma[i] * gamma[j] + Scalar(rng.uniform(-0.06, 0.06)),
              Scalar(0), Scalar(0.5));
          a(i, j) = a(j, i) = r;
        }
      phi = detail::project_to_psd_correlation(SymMatrix<Scalar>(a));
    }

    const Vector<Scalar> communality =
        (lambda * phi.m() * lambda.transpose()).diagonal();
    const Vector<Scalar> psi2 = Vector<Scalar>::Ones(p) - communality;
    if (psi2.minCoeff() <= Scalar(0.05)) continue;

    FactorModel<Scalar> m{std::move(lambda), std::move(phi), psi2};
    validate(m);  // generator contract: outputs always validate
    return m;
  }
  throw GenerationFailed("random_model: no admissible model in " +
                         std::to_string(kMaxAttempts) + " attempts (p=" +
                         std::to_string(p) + ", q=" + std::to_string(q) + ")");
}

}  // namespace fsk
