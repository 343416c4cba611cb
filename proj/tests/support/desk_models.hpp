#pragma once
// Small hand-specified models shared across the test suites.
//
//   model_a   - p=6, q=2 block structure, orthogonal factors. Its
//               Lambda' Sigma^{-1} Lambda is already diagonal, so the
//               loading transformation must be an exact fixed point.
//   model_b   - model_a plus two cross-loadings (variable 3 on factor 2,
//               variable 4 on factor 1, both 0.3). The off-diagonal
//               coupling makes the transformation non-trivial.
//   spearman  - p=3, q=1; the one-factor case where all predictors are
//               perfectly correlated by construction.

#include "fsk/model.hpp"

namespace fsk::testing {

inline FactorModeld model_a() {
  FactorModeld m;
  m.lambda.setZero(6, 2);
  m.lambda.col(0).head(3) << 0.8, 0.7, 0.6;
  m.lambda.col(1).tail(3) << 0.8, 0.7, 0.6;
  m.phi = SymMatrixd::identity(2);
  m.psi2.resize(6);
  m.psi2 << 0.36, 0.51, 0.64, 0.36, 0.51, 0.64;
  return m;
}

inline FactorModeld model_b() {
  FactorModeld m = model_a();
  m.lambda(2, 1) = 0.3;
  m.lambda(3, 0) = 0.3;
  m.psi2[2] = 0.55;  // 1 - (0.6^2 + 0.3^2)
  m.psi2[3] = 0.27;  // 1 - (0.3^2 + 0.8^2)
  return m;
}

inline FactorModeld spearman() {
  FactorModeld m;
  m.lambda.resize(3, 1);
  m.lambda << 0.8, 0.7, 0.6;
  m.phi = SymMatrixd::identity(1);
  m.psi2.resize(3);
  m.psi2 << 0.36, 0.51, 0.64;
  return m;
}

}  // namespace fsk::testing
