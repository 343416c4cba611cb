#pragma once
// Loading transformation and Schmid-Leiman pipeline.
//
// transform_loadings rotates Lambda by T = G^{-1/2} diag(G)^{1/2} with
// G = Lambda' Sigma^{-1} Lambda, which makes Lambda*' Sigma^{-1} Lambda*
// diagonal while preserving the implied covariance. The transformed factor
// correlations Phi* are generally not the identity, so a single general
// factor is extracted from Phi* and a Schmid-Leiman step orthogonalizes the
// primaries. The resulting primary loadings satisfy the diagonality
// condition with orthogonal factors, which is exactly the condition under
// which the BL, BLCU and DBLCP score predictors correlate perfectly for
// corresponding factors.

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "fsk/errors.hpp"
#include "fsk/matalg.hpp"
#include "fsk/model.hpp"
#include "fsk/predictors.hpp"

namespace fsk {

// Smallest admissible second-order uniqueness; loadings implying less are a
// Heywood case.
inline constexpr double kHeywoodFloor = 1e-6;

// Iteration defaults for the second-order principal-axis fit.
inline constexpr double kExtractTol = 1e-12;
inline constexpr int kExtractMaxIter = 500;

template <class Scalar = double>
struct TransformedModel {
  FactorModel<Scalar> original;
  Matrix<Scalar> lambda_star;      // Lambda* with unit-variance factors
  SymMatrix<Scalar> phi_star;      // transformed factor correlations, unit diagonal
  Matrix<Scalar> t;                // composed right transform: lambda_star = lambda * t
  Matrix<Scalar> lambda_star_raw;  // Lambda* before factor variances are rescaled;
                                   // Lambda*_raw' Sigma^{-1} Lambda*_raw has the same
                                   // diagonal as Lambda' Sigma^{-1} Lambda
};

template <class Scalar = double>
struct SecondOrderSolution {
  Vector<Scalar> lambda2;   // general-factor loadings of the q primaries
  Vector<Scalar> psi2_2;    // second-order uniquenesses, 1 - lambda2^2
  Scalar fit_residual;      // max-abs off-diagonal of phi_star - lambda2 lambda2'
  int iterations;
  bool converged;
};

template <class Scalar = double>
struct SchmidLeimanSolution {
  Matrix<Scalar> lambda_sl;   // p x (q+1); column 0 is the general factor
  Matrix<Scalar> lambda_slp;  // p x q orthogonalized primaries (columns 1..q)
  Matrix<Scalar> p_matrix;    // q x (q+1) transform [lambda2 | diag(sqrt(psi2_2))]
};

template <class Scalar = double>
struct PipelineReport {
  Index q = 0;
  Scalar eq13_residual = Scalar(0);   // offdiag of Lambda*' Sigma^{-1} Lambda*
  Scalar eq21_residual = Scalar(0);   // offdiag of Lambda_SLP*' Sigma^{-1} Lambda_SLP*
  Scalar sl_fit_residual = Scalar(0);
  Scalar sigma_reconstruction_residual = Scalar(0);  // Lambda_SL* Lambda_SL*' + Psi^2 vs Sigma
  Matrix<Scalar> r_blcu_bl;
  Matrix<Scalar> r_dblcp_bl;
  Matrix<Scalar> r_blcu_dblcp;
  Scalar max_deviation_from_identity = Scalar(0);
  std::vector<std::string> warnings;

  std::optional<TransformedModel<Scalar>> transformed;
  std::optional<SecondOrderSolution<Scalar>> second_order;
  std::optional<SchmidLeimanSolution<Scalar>> schmid_leiman;
};

// Lambda* = Lambda G^{-1/2} diag(G)^{1/2}, followed by rescaling to unit
// factor variances. Phi* is computed exactly as
// diag(G)^{-1/2} G^{1/2} Phi G^{1/2} diag(G)^{-1/2} (the inverse transform
// applied to Phi on both sides), so the implied covariance is untouched.
template <class Scalar>
TransformedModel<Scalar> transform_loadings(const FactorModel<Scalar>& m,
                                            Scalar eps = Scalar(kDefaultEps)) {
  const SymMatrix<Scalar> sigma = sigma_from_model(m);
  const SymMatrix<Scalar> sigma_inv = safe_inverse(sigma, eps);
  const SymMatrix<Scalar> g(m.lambda.transpose() * sigma_inv.m() * m.lambda);

  const SymMatrix<Scalar> g_inv_half = sym_power(g, Scalar(-0.5), eps);
  const SymMatrix<Scalar> g_half = sym_power(g, Scalar(0.5), eps);
  const SymMatrix<Scalar> d_half = diag_power(g, Scalar(0.5));
  const SymMatrix<Scalar> d_inv_half = diag_power(g, Scalar(-0.5));

  TransformedModel<Scalar> out;
  out.original = m;

  const Matrix<Scalar> t_raw = g_inv_half.m() * d_half.m();
  out.lambda_star_raw = m.lambda * t_raw;

  // T^{-1} = diag(G)^{-1/2} G^{1/2}, so Phi*_raw = T^{-1} Phi T^{-T} built
  // from symmetric factors only.
  const SymMatrix<Scalar> phi_star_raw(d_inv_half.m() * g_half.m() * m.phi.m() *
                                       g_half.m() * d_inv_half.m());

  const Vector<Scalar> dstar = phi_star_raw.m().diagonal();
  for (Index i = 0; i < dstar.size(); ++i) {
    if (dstar[i] <= Scalar(0)) {
      throw NonPositiveDiagonal(
          "transform_loadings: transformed factor variance " +
          std::to_string(double(dstar[i])) + " is not positive");
    }
  }
  out.lambda_star = out.lambda_star_raw * dstar.cwiseSqrt().asDiagonal();
  out.phi_star = corr_from_cov(phi_star_raw);
  out.t = t_raw * dstar.cwiseSqrt().asDiagonal();
  return out;
}

namespace detail {

// Unweighted least-squares misfit over the off-diagonal:
// F(l) = sum_{i<j} (phi_ij - l_i l_j)^2.
template <class Scalar>
Scalar one_factor_misfit(const Matrix<Scalar>& off, const Vector<Scalar>& lam) {
  Scalar f(0);
  for (Index j = 0; j < lam.size(); ++j)
    for (Index i = 0; i < j; ++i) {
      const Scalar r = off(i, j) - lam[i] * lam[j];
      f += r * r;
    }
  return f;
}

// grad F = -2 (off(phi) l - l .* (||l||^2 - l.^2)); zero exactly at the
// principal-axis fixed points.
template <class Scalar>
Vector<Scalar> one_factor_gradient(const Matrix<Scalar>& off,
                                   const Vector<Scalar>& lam) {
  const Scalar s = lam.squaredNorm();
  return Scalar(-2) *
         (off * lam -
          lam.cwiseProduct(Vector<Scalar>::Constant(lam.size(), s) -
                           lam.cwiseAbs2()));
}

}  // namespace detail

// One-factor decomposition of a correlation matrix. Communalities start at
// the max absolute off-diagonal per row and a few principal-axis sweeps
// (diagonal replaced by communalities, leading eigenpair re-extracted) set
// the direction; a damped Newton iteration on the least-squares misfit then
// drives the same fixed point to tolerance. Plain principal-axis sweeps
// alone converge only linearly, with rates approaching one whenever the
// general structure in phi_star is weak, so the Newton stage is what keeps
// batch runs inside their iteration budget. The overall sign is fixed so
// the loadings sum to >= 0; a solution with any loading^2 >= 1 - 1e-6 is a
// Heywood case.
template <class Scalar>
SecondOrderSolution<Scalar> extract_general_factor(
    const SymMatrix<Scalar>& phi_star, Scalar tol = Scalar(kExtractTol),
    int max_iter = kExtractMaxIter) {
  const Index q = phi_star.dim();
  if (q < 2) {
    throw std::invalid_argument(
        "extract_general_factor: need at least two factors");
  }
  for (Index i = 0; i < q; ++i) {
    if (std::abs(phi_star(i, i) - Scalar(1)) > Scalar(1e-8)) {
      throw std::invalid_argument(
          "extract_general_factor: input must be a correlation matrix");
    }
  }

  Vector<Scalar> h(q);  // working communalities
  for (Index i = 0; i < q; ++i) {
    Scalar best(0);
    for (Index j = 0; j < q; ++j)
      if (j != i) best = std::max(best, std::abs(phi_star(i, j)));
    h[i] = best;
  }

  Matrix<Scalar> off = phi_star.m();
  off.diagonal().setZero();
  Matrix<Scalar> reduced = phi_star.m();
  Vector<Scalar> lam = Vector<Scalar>::Zero(q);
  constexpr int kWarmupSweeps = 4;
  int it = 0;
  bool converged = false;

  while (it < max_iter) {
    ++it;
    Vector<Scalar> lam_new;
    if (it <= kWarmupSweeps) {
      reduced.diagonal() = h;
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(reduced);
      const Scalar top = std::max(es.eigenvalues()[q - 1], Scalar(0));
      lam_new = std::sqrt(top) * es.eigenvectors().col(q - 1);
    } else {
      const Vector<Scalar> g = detail::one_factor_gradient(off, lam);
      Matrix<Scalar> hess = Scalar(4) * lam * lam.transpose() - Scalar(2) * off;
      const Scalar s = lam.squaredNorm();
      for (Index i = 0; i < q; ++i) hess(i, i) = Scalar(2) * (s - lam[i] * lam[i]);

      // Levenberg shift until the solve yields a descent direction.
      const Scalar hscale = hess.cwiseAbs().maxCoeff() + Scalar(1e-12);
      Scalar mu(0);
      Vector<Scalar> step = -g;
      for (int tries = 0; tries < 60; ++tries) {
        Matrix<Scalar> hm = hess;
        hm.diagonal().array() += mu;
        Eigen::LDLT<Matrix<Scalar>> ldlt(hm);
        if (ldlt.info() == Eigen::Success) {
          step = ldlt.solve(-g);
          if (g.dot(step) < Scalar(0)) break;
        }
        mu = (mu == Scalar(0)) ? Scalar(1e-8) * hscale : Scalar(10) * mu;
      }

      const Scalar f0 = detail::one_factor_misfit(off, lam);
      const Scalar slope = g.dot(step);
      Scalar alpha(1);
      lam_new = lam + step;
      for (int ls = 0; ls < 60; ++ls) {
        if (detail::one_factor_misfit(off, lam_new) <=
            f0 + Scalar(1e-4) * alpha * slope)
          break;
        alpha /= Scalar(2);
        lam_new = lam + alpha * step;
      }
    }
    if (lam_new.sum() < Scalar(0)) lam_new = -lam_new;

    const Vector<Scalar> h_new = lam_new.cwiseAbs2();
    const Scalar change = (h_new - h).cwiseAbs().maxCoeff();
    const Scalar grad_norm =
        detail::one_factor_gradient(off, lam_new).cwiseAbs().maxCoeff();
    h = h_new;
    lam = lam_new;

    if (h.maxCoeff() >= Scalar(1.5)) {
      // Runaway iterate: the least-squares solution lies far outside the
      // admissible box.
      throw HeywoodCase("extract_general_factor: loading " +
                        std::to_string(double(lam.cwiseAbs().maxCoeff())) +
                        " implies non-positive uniqueness");
    }
    if (change < tol &&
        (it <= kWarmupSweeps || grad_norm < Scalar(1e3) * tol)) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NotConverged("extract_general_factor: no convergence in " +
                       std::to_string(max_iter) + " iterations");
  }
  if (h.maxCoeff() >= Scalar(1) - Scalar(kHeywoodFloor)) {
    throw HeywoodCase("extract_general_factor: loading " +
                      std::to_string(double(lam.cwiseAbs().maxCoeff())) +
                      " implies non-positive uniqueness");
  }

  SecondOrderSolution<Scalar> out;
  out.lambda2 = lam;
  out.psi2_2 = Vector<Scalar>::Ones(q) - h;
  out.fit_residual =
      offdiag_max(Matrix<Scalar>(phi_star.m() - lam * lam.transpose()));
  out.iterations = it;
  out.converged = true;
  return out;
}

// Schmid-Leiman step: P = [lambda2 | diag(sqrt(psi2_2))] maps the q oblique
// transformed factors onto one general factor plus q orthogonalized
// primaries, Lambda_SL* = Lambda* P. The primary block equals
// Lambda* diag(sqrt(psi2_2)) by construction; both routes are computed and
// compared as a consistency check.
template <class Scalar>
SchmidLeimanSolution<Scalar> schmid_leiman(
    const TransformedModel<Scalar>& tm, const SecondOrderSolution<Scalar>& so) {
  const Index q = tm.lambda_star.cols();
  if (so.lambda2.size() != q) {
    throw std::invalid_argument(
        "schmid_leiman: second-order solution does not match the model");
  }
  if (so.psi2_2.minCoeff() <= Scalar(0)) {
    throw HeywoodCase("schmid_leiman: non-positive second-order uniqueness");
  }

  SchmidLeimanSolution<Scalar> out;
  out.p_matrix = Matrix<Scalar>::Zero(q, q + 1);
  out.p_matrix.col(0) = so.lambda2;
  out.p_matrix.rightCols(q).diagonal() = so.psi2_2.cwiseSqrt();

  out.lambda_sl = tm.lambda_star * out.p_matrix;
  out.lambda_slp = out.lambda_sl.rightCols(q);

  const Matrix<Scalar> direct =
      tm.lambda_star * so.psi2_2.cwiseSqrt().asDiagonal();
  if (max_abs_diff(direct, out.lambda_slp) > Scalar(1e-12)) {
    throw NumericalIntegrity(
        "schmid_leiman: primary-block routes disagree beyond 1e-12");
  }
  return out;
}

namespace detail {

template <class Scalar>
void fill_pairwise_correlations(PipelineReport<Scalar>& report,
                                const Matrix<Scalar>& lambda,
                                const SymMatrix<Scalar>& phi,
                                const SymMatrix<Scalar>& sigma, Scalar eps) {
  using PK = PredictorKind;
  report.r_blcu_bl = cross_correlation(lambda, phi, sigma, PK::BLCU, PK::BL, eps);
  report.r_dblcp_bl =
      cross_correlation(lambda, phi, sigma, PK::DBLCP, PK::BL, eps);
  report.r_blcu_dblcp =
      cross_correlation(lambda, phi, sigma, PK::BLCU, PK::DBLCP, eps);
  const Index q = lambda.cols();
  const Matrix<Scalar> eye = Matrix<Scalar>::Identity(q, q);
  report.max_deviation_from_identity =
      std::max({max_abs_diff(report.r_blcu_bl, eye),
                max_abs_diff(report.r_dblcp_bl, eye),
                max_abs_diff(report.r_blcu_dblcp, eye)});
}

}  // namespace detail

// Full chain: transform -> second-order general factor -> Schmid-Leiman ->
// predictor correlations for the orthogonalized primaries, evaluated with
// Phi = I against the original observed covariance. Models with q = 1 are
// the Spearman case: the condition is vacuous, so the pipeline evaluates
// the predictors on the model as given and flags the bypass. Heywood and
// non-convergence in the second-order fit are reported as warnings rather
// than thrown, so batch runs can inspect partial results.
template <class Scalar>
PipelineReport<Scalar> run_pipeline(const FactorModel<Scalar>& m,
                                    Scalar eps = Scalar(kDefaultEps),
                                    Scalar extract_tol = Scalar(kExtractTol),
                                    int extract_max_iter = kExtractMaxIter) {
  validate(m, eps);
  PipelineReport<Scalar> report;
  report.q = m.q();
  const SymMatrix<Scalar> sigma = sigma_from_model(m);

  if (m.q() == 1) {
    report.warnings.push_back("Q1_BYPASS");
    detail::fill_pairwise_correlations(report, m.lambda, m.phi, sigma, eps);
    return report;
  }

  TransformedModel<Scalar> tm = transform_loadings(m, eps);
  const SymMatrix<Scalar> sigma_inv = safe_inverse(sigma, eps);
  report.eq13_residual = offdiag_max(Matrix<Scalar>(
      tm.lambda_star.transpose() * sigma_inv.m() * tm.lambda_star));

  if (m.q() == 2) report.warnings.push_back("Q2_INDETERMINATE");

  SecondOrderSolution<Scalar> so;
  try {
    so = extract_general_factor(tm.phi_star, extract_tol, extract_max_iter);
  } catch (const HeywoodCase&) {
    report.warnings.push_back("HEYWOOD");
    report.transformed = std::move(tm);
    return report;
  } catch (const NotConverged&) {
    report.warnings.push_back("NOT_CONVERGED");
    report.transformed = std::move(tm);
    return report;
  }

  SchmidLeimanSolution<Scalar> sl = schmid_leiman(tm, so);
  report.sl_fit_residual = so.fit_residual;
  report.eq21_residual = offdiag_max(Matrix<Scalar>(
      sl.lambda_slp.transpose() * sigma_inv.m() * sl.lambda_slp));

  Matrix<Scalar> reconstructed = sl.lambda_sl * sl.lambda_sl.transpose();
  reconstructed.diagonal() += m.psi2;
  report.sigma_reconstruction_residual = max_abs_diff(reconstructed, sigma.m());

  detail::fill_pairwise_correlations(
      report, sl.lambda_slp, SymMatrix<Scalar>::identity(m.q()), sigma, eps);

  report.transformed = std::move(tm);
  report.second_order = std::move(so);
  report.schmid_leiman = std::move(sl);
  return report;
}

}  // namespace fsk
