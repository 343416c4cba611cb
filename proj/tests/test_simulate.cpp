#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fsk/simulate.hpp"
#include "fsk/transform.hpp"
#include "support/desk_models.hpp"

using namespace fsk;
using PK = PredictorKind;
using Md = Matrix<double>;
using Vd = Vector<double>;

TEST_CASE("sample: bit-identical per seed and across thread counts") {
  const auto m = testing::model_b();
  const auto a = sample(m, 500, 42, 1);
  const auto b = sample(m, 500, 42, 1);
  CHECK(a.x == b.x);
  CHECK(a.f == b.f);

  const auto c = sample(m, 500, 42, 4);
  CHECK(a.x == c.x);
  CHECK(a.f == c.f);

  const auto d = sample(m, 500, 43, 1);
  CHECK(a.x != d.x);
}

TEST_CASE("sample: factor variance converges at n = 1e6") {
  const auto m = testing::spearman();
  const auto s = sample(m, 1000000, 7);
  const Vd centered = s.f.col(0).array() - s.f.col(0).mean();
  const double var = centered.squaredNorm() / double(s.n - 1);
  CHECK(var > 0.99);
  CHECK(var < 1.01);
}

TEST_CASE("sample: empirical covariance approaches the model covariance") {
  const auto m = testing::model_b();
  const Index n = 200000;
  const auto s = sample(m, n, 0);
  const Md centered = s.x.rowwise() - s.x.colwise().mean();
  const Md emp = centered.transpose() * centered / double(n - 1);
  CHECK(max_abs_diff(emp, sigma_from_model(m).m()) < 0.02);
}

TEST_CASE("sample: oblique factor correlations are reproduced") {
  const auto m = random_model(6, 2, true, 11);
  const auto s = sample(m, 200000, 3);
  const Md r = sample_cross_correlation(s.f, s.f);
  CHECK(max_abs_diff(r, m.phi.m()) < 0.02);
}

TEST_CASE("sample: input contract") {
  CHECK_THROWS_AS(sample(testing::model_b(), 1, 0), Error);
}

TEST_CASE("empirical self-correlation has an exact unit diagonal") {
  const auto m = testing::model_b();
  const auto s = sample(m, 5000, 5);
  const Md r = empirical_predictor_correlations(s, m, PK::BL, PK::BL);
  for (Index j = 0; j < 2; ++j)
    CHECK(r(j, j) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("empirical cross-correlations track the closed forms") {
  const auto m = testing::model_b();
  const auto s = sample(m, 200000, 0);
  const PK pairs[][2] = {{PK::BLCU, PK::BL}, {PK::DBLCP, PK::BL},
                         {PK::BLCU, PK::DBLCP}};
  for (const auto& pr : pairs) {
    const Md emp = empirical_predictor_correlations(s, m, pr[0], pr[1]);
    const Md closed = cross_correlation(m, pr[0], pr[1]);
    CHECK(max_abs_diff(emp, closed) < 0.01);
  }
}

TEST_CASE("empirical validities track the closed-form validities") {
  const auto m = testing::model_b();
  const auto s = sample(m, 200000, 1);
  for (PK k : kAllPredictorKinds) {
    const Vd emp = empirical_validity(s, m, k);
    const Vd closed = factor_validity(m, k);
    CHECK(max_abs_diff(emp, closed) < 0.01);
  }
  // noisy version of BL optimality
  const Vd bl = empirical_validity(s, m, PK::BL);
  const Vd blcu = empirical_validity(s, m, PK::BLCU);
  for (Index j = 0; j < 2; ++j) CHECK(bl[j] >= blcu[j] - 0.01);
}

TEST_CASE("empirical validity in the near-deterministic limit") {
  FactorModeld m;
  m.lambda.resize(3, 1);
  m.lambda << 0.8, 0.7, 0.6;
  m.phi = SymMatrixd::identity(1);
  m.psi2 = Vd::Constant(3, 1e-6);
  const auto s = sample(m, 20000, 9);
  CHECK(empirical_validity(s, m, PK::BL)[0] > 0.999);
}

TEST_CASE("transformed primaries: sampled correlations approach identity") {
  const auto m = testing::model_b();
  const auto report = run_pipeline(m);
  REQUIRE(report.schmid_leiman.has_value());
  const Md& slp = report.schmid_leiman->lambda_slp;
  const SymMatrixd sigma = sigma_from_model(m);
  const SymMatrixd eye = SymMatrixd::identity(2);

  const auto s = sample(m, 200000, 0);
  const PK pairs[][2] = {{PK::BLCU, PK::BL}, {PK::DBLCP, PK::BL},
                         {PK::BLCU, PK::DBLCP}};
  for (const auto& pr : pairs) {
    const Md wa = weights(slp, eye, sigma, pr[0]).w;
    const Md wb = weights(slp, eye, sigma, pr[1]).w;
    const Md emp = sample_cross_correlation(Md(s.x * wa), Md(s.x * wb));
    CHECK(max_abs_diff(emp, Md::Identity(2, 2)) < 0.01);
  }
}

TEST_CASE("counter RNG: moments of the normal stream") {
  double sum = 0, sum2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = counter_normal(123, 0, std::uint64_t(i));
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}
