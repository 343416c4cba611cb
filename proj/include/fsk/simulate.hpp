#pragma once
// Generative sampling from the factor model and empirical verification of
// the closed-form predictor correlations.
//
// Factors and errors are drawn as Gaussians (the model is moment-based, so
// any distribution matching the assumed first two moments would do, and the
// Gaussian is the simplest such choice). Every variate is addressed by
// (seed, stream, row, column) through the counter-based generator, so a
// SampleSet is reproducible bit-for-bit regardless of how many threads
// fill it.

#include <Eigen/Dense>

#include <cstdint>
#include <thread>
#include <vector>

#include "fsk/matalg.hpp"
#include "fsk/model.hpp"
#include "fsk/predictors.hpp"
#include "fsk/rng.hpp"

namespace fsk {

template <class Scalar = double>
struct SampleSet {
  Index n = 0;
  Matrix<Scalar> x;  // n x p observed scores
  Matrix<Scalar> f;  // n x q true factor scores
  std::uint64_t seed = 0;
};

namespace detail {

inline int resolve_threads(int requested, Index rows) {
  int t = requested;
  if (t <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    t = hw == 0 ? 1 : static_cast<int>(hw);
  }
  t = std::min<int>(t, 8);
  t = std::min<long>(t, std::max<long>(rows, 1));
  return t;
}

// Runs fn(row_begin, row_end) over [0, rows) split across `threads`.
template <class Fn>
void parallel_rows(Index rows, int threads, Fn&& fn) {
  if (threads <= 1) {
    fn(Index(0), rows);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const Index chunk = (rows + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const Index lo = std::min<Index>(Index(t) * chunk, rows);
    const Index hi = std::min<Index>(lo + chunk, rows);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Draws n observations of x = f Lambda' + e with f ~ N(0, Phi) (through the
// symmetric square root of Phi) and e ~ N(0, Psi^2). `threads` <= 0 picks a
// hardware-based count; the result does not depend on it.
template <class Scalar>
SampleSet<Scalar> sample(const FactorModel<Scalar>& m, Index n,
                         std::uint64_t seed, int threads = 0,
                         Scalar eps = Scalar(kDefaultEps)) {
  if (n < 2) throw Error("sample: need at least two observations");
  const Index p = m.p();
  const Index q = m.q();
  const SymMatrix<Scalar> phi_half = sym_power(m.phi, Scalar(0.5), eps);
  const Vector<Scalar> psi = m.psi2.cwiseSqrt();

  SampleSet<Scalar> s;
  s.n = n;
  s.seed = seed;
  s.f.resize(n, q);
  s.x.resize(n, p);

  detail::parallel_rows(n, detail::resolve_threads(threads, n),
                        [&](Index lo, Index hi) {
    Vector<Scalar> z(q);
    for (Index i = lo; i < hi; ++i) {
      for (Index j = 0; j < q; ++j) {
        z[j] = Scalar(counter_normal(seed, 0, std::uint64_t(i) * q + j));
      }
      s.f.row(i) = z.transpose() * phi_half.m();  // Cov = Phi
      for (Index j = 0; j < p; ++j) {
        s.x(i, j) =
            Scalar(counter_normal(seed, 1, std::uint64_t(i) * p + j)) * psi[j];
      }
      s.x.row(i) += s.f.row(i) * m.lambda.transpose();
    }
  });
  return s;
}

// Sample Pearson cross-correlations between the column scores of a and b.
template <class Scalar>
Matrix<Scalar> sample_cross_correlation(const Matrix<Scalar>& a,
                                        const Matrix<Scalar>& b) {
  if (a.rows() != b.rows() || a.rows() < 2) {
    throw Error("sample_cross_correlation: need matching n >= 2");
  }
  const Matrix<Scalar> ac = a.rowwise() - a.colwise().mean();
  const Matrix<Scalar> bc = b.rowwise() - b.colwise().mean();
  const Vector<Scalar> sa = ac.colwise().norm().transpose();
  const Vector<Scalar> sb = bc.colwise().norm().transpose();
  for (Index j = 0; j < sa.size(); ++j)
    if (sa[j] <= Scalar(0))
      throw NonPositiveDiagonal("sample_cross_correlation: degenerate column");
  for (Index j = 0; j < sb.size(); ++j)
    if (sb[j] <= Scalar(0))
      throw NonPositiveDiagonal("sample_cross_correlation: degenerate column");
  Matrix<Scalar> r = ac.transpose() * bc;
  r.array().colwise() /= sa.array();
  r.array().rowwise() /= sb.transpose().array();
  return r;
}

// Empirical cross-correlation matrix between two predictors, scoring the
// samples with the model's population weights.
template <class Scalar>
Matrix<Scalar> empirical_predictor_correlations(
    const SampleSet<Scalar>& s, const FactorModel<Scalar>& m, PredictorKind a,
    PredictorKind b, Scalar eps = Scalar(kDefaultEps)) {
  const Matrix<Scalar> scores_a = s.x * weights(m, a, eps).w;
  const Matrix<Scalar> scores_b = s.x * weights(m, b, eps).w;
  return sample_cross_correlation(scores_a, scores_b);
}

// Per-factor sample correlation between predictor scores and the true
// factor scores retained in the SampleSet.
template <class Scalar>
Vector<Scalar> empirical_validity(const SampleSet<Scalar>& s,
                                  const FactorModel<Scalar>& m,
                                  PredictorKind kind,
                                  Scalar eps = Scalar(kDefaultEps)) {
  const Matrix<Scalar> scores = s.x * weights(m, kind, eps).w;
  const Matrix<Scalar> r = sample_cross_correlation(scores, s.f);
  return r.diagonal();
}

}  // namespace fsk
