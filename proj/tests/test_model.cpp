#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "fsk/model.hpp"
#include "support/desk_models.hpp"

using namespace fsk;
using Md = Matrix<double>;
using Vd = Vector<double>;

TEST_CASE("sigma_from_model: one-factor products") {
  const auto m = testing::spearman();
  const SymMatrixd sigma = sigma_from_model(m);
  CHECK(sigma(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sigma(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sigma(2, 2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sigma(0, 1) == doctest::Approx(0.56).epsilon(1e-14));
  CHECK(sigma(0, 2) == doctest::Approx(0.48).epsilon(1e-14));
  CHECK(sigma(1, 2) == doctest::Approx(0.42).epsilon(1e-14));
}

TEST_CASE("sigma_from_model: scaling lambda by 0.5 scales the common part by 0.25") {
  auto m = testing::model_b();
  const SymMatrixd before = sigma_from_model(m);
  auto scaled = m;
  scaled.lambda *= 0.5;
  const SymMatrixd after = sigma_from_model(scaled);
  for (Index i = 0; i < m.p(); ++i)
    for (Index j = 0; j < i; ++j)
      CHECK(after(i, j) == doctest::Approx(0.25 * before(i, j)).epsilon(1e-12));
}

TEST_CASE("sigma_from_model: desk model B is positive definite with unit diagonal") {
  const auto m = testing::model_b();
  const SymMatrixd sigma = sigma_from_model(m);
  Eigen::SelfAdjointEigenSolver<Md> es(sigma.m());
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  for (Index i = 0; i < 6; ++i)
    CHECK(sigma(i, i) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sigma diagonal dominates psi2 and orthogonal models split cleanly") {
  for (std::uint64_t seed : {3u, 7u, 11u}) {
    const auto m = random_model(8, 3, false, seed);
    const SymMatrixd sigma = sigma_from_model(m);
    for (Index i = 0; i < m.p(); ++i) CHECK(sigma(i, i) >= m.psi2[i]);
    // Phi = I: sigma - diag(psi2) equals lambda lambda'
    Md common = sigma.m();
    common.diagonal() -= m.psi2;
    CHECK(max_abs_diff(common, Md(m.lambda * m.lambda.transpose())) < 1e-12);
  }
}

TEST_CASE("validate: desk model B has no flags") {
  const auto d = validate(testing::model_b());
  CHECK(d.flags.empty());
  CHECK(d.min_psi2 == doctest::Approx(0.27));
  CHECK(d.sigma_condition_number > 1.0);
  CHECK(d.min_phi_eigenvalue == doctest::Approx(1.0));
}

TEST_CASE("validate: zero psi2 entry names the invariant") {
  auto m = testing::spearman();
  m.psi2[1] = 0.0;
  CHECK_THROWS_WITH_AS(validate(m), "psi2 must be strictly positive",
                       InvalidModel);
}

TEST_CASE("validate: indefinite phi is rejected") {
  FactorModeld m;
  m.lambda.setZero(3, 2);
  m.lambda(0, 0) = 0.7;
  m.lambda(1, 1) = 0.7;
  m.lambda(2, 1) = 0.5;
  Md phi(2, 2);
  phi << 1.0, 1.01, 1.01, 1.0;  // eigenvalues -0.01 and 2.01
  m.phi = SymMatrixd(phi);
  m.psi2 = Vd::Constant(3, 0.5);
  CHECK_THROWS_WITH_AS(validate(m), "phi not PSD", InvalidModel);
}

TEST_CASE("validate: structural violations") {
  auto m = testing::model_b();
  SUBCASE("factor count bounds") {
    m.lambda.resize(2, 2);
    m.psi2.resize(2);
    m.psi2 << 0.5, 0.5;
    CHECK_THROWS_AS(validate(m), InvalidModel);
  }
  SUBCASE("all-zero loading column") {
    m.lambda.col(1).setZero();
    CHECK_THROWS_AS(validate(m), InvalidModel);
  }
  SUBCASE("phi diagonal must be one") {
    Md phi(2, 2);
    phi << 1.2, 0.0, 0.0, 1.0;
    m.phi = SymMatrixd(phi);
    CHECK_THROWS_AS(validate(m), InvalidModel);
  }
  SUBCASE("psi2 length mismatch") {
    m.psi2.resize(5);
    m.psi2.setConstant(0.5);
    CHECK_THROWS_AS(validate(m), InvalidModel);
  }
}

TEST_CASE("validate: near-singular sigma is flagged, not rejected") {
  FactorModeld m;
  m.lambda.resize(3, 1);
  m.lambda << 0.9, 0.9, 0.9;
  m.phi = SymMatrixd::identity(1);
  m.psi2 = Vd::Constant(3, 1e-9);
  const auto d = validate(m);
  CHECK(d.sigma_condition_number > 1e8);
  REQUIRE(d.flags.size() == 1);
  CHECK(d.flags[0] == "NEAR_SINGULAR_SIGMA");
}

TEST_CASE("random_model: deterministic per seed") {
  const auto a = random_model(6, 2, false, 42);
  const auto b = random_model(6, 2, false, 42);
  CHECK(max_abs_diff(a.lambda, b.lambda) == 0.0);
  CHECK(max_abs_diff(a.phi.m(), b.phi.m()) == 0.0);
  CHECK(max_abs_diff(a.psi2, b.psi2) == 0.0);
  const auto c = random_model(6, 2, false, 43);
  CHECK(max_abs_diff(a.lambda, c.lambda) > 0.0);
}

TEST_CASE("random_model: every output validates (1000 seeds)") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Index p = Index(6 + 3 * (seed % 3));
    const Index q = Index(1 + seed % 4);
    const auto m = random_model(p, q, seed % 2 == 0, seed);
    CHECK_NOTHROW(validate(m));
    CHECK(m.psi2.minCoeff() > 0.05);
  }
}

TEST_CASE("random_model: oblique correlations live in [0, 0.5]") {
  const auto m = random_model(6, 2, true, 7);
  CHECK(m.phi(0, 1) >= 0.0);
  CHECK(m.phi(0, 1) <= 0.5);
  CHECK(m.phi(0, 1) > 0.0);  // oblique draw should not degenerate here
}

TEST_CASE("random_model: rejects inadmissible shapes") {
  CHECK_THROWS_AS(random_model(2, 1, false, 0), GenerationFailed);
  CHECK_THROWS_AS(random_model(6, 6, false, 0), GenerationFailed);
}

TEST_CASE("standardize: identity phi is a no-op") {
  const auto m = testing::model_b();
  const auto s = standardize(m);
  CHECK(max_abs_diff(s.lambda, m.lambda) < 1e-15);
  CHECK(max_abs_diff(s.phi.m(), m.phi.m()) == 0.0);
}

TEST_CASE("standardize: rescales factor variances and preserves sigma") {
  FactorModeld m;
  m.lambda.resize(3, 2);
  m.lambda << 0.4, 0.1, 0.3, 0.5, 0.2, 0.4;
  Md phi(2, 2);
  phi << 4.0, 1.0, 1.0, 1.0;
  m.phi = SymMatrixd(phi);
  m.psi2 = Vd::Constant(3, 0.3);

  const auto s = standardize(m);
  CHECK(s.phi(0, 0) == 1.0);
  CHECK(s.phi(1, 1) == 1.0);
  CHECK(s.phi(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(max_abs_diff(Vd(s.lambda.col(0)), Vd(2.0 * m.lambda.col(0))) < 1e-14);
  CHECK(max_abs_diff(sigma_from_model(s).m(), sigma_from_model(m).m()) <
        1e-12);

  // idempotence
  const auto s2 = standardize(s);
  CHECK(max_abs_diff(s2.lambda, s.lambda) < 1e-12);
  CHECK(max_abs_diff(s2.phi.m(), s.phi.m()) < 1e-12);
}

TEST_CASE("standardize: non-positive factor variance is rejected") {
  FactorModeld m = testing::model_b();
  Md phi(2, 2);
  phi << 0.0, 0.0, 0.0, 1.0;
  m.phi = SymMatrixd(phi);
  CHECK_THROWS_AS(standardize(m), NonPositiveDiagonal);
}
