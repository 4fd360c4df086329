#include <cmath>

#include "../oracles/oracles.hpp"
#include "recipcal/zfbf.hpp"
#include "test_util.hpp"

using namespace recipcal;

TEST_CASE("zf_precoder examples") {
  const auto eye = zf_precoder(CMatrix::Identity(2, 2));
  CHECK(testing::max_abs_diff(eye.w, CMatrix::Identity(2, 2)) < 1e-15);
  const auto two = zf_precoder(2.0 * CMatrix::Identity(2, 2));
  CHECK(testing::max_abs_diff(two.w_unnormalized, 0.5 * CMatrix::Identity(2, 2)) < 1e-15);
  CHECK(testing::max_abs_diff(two.w, CMatrix::Identity(2, 2)) < 1e-15);

  Rng rng(1);
  const CMatrix h = testing::random_matrix(8, 2, rng);
  const auto zf = zf_precoder(h);
  CHECK(testing::max_abs_diff(h.transpose() * zf.w_unnormalized, CMatrix::Identity(2, 2)) < 1e-10);
  for (int u = 0; u < 2; ++u) {
    CHECK(std::abs(zf.w.col(u).norm() - 1.0) < 1e-12);
    CHECK(zf.w(0, u).imag() == 0.0);
    CHECK(zf.w(0, u).real() >= 0.0);
  }
}

TEST_CASE("zf_precoder rank deficiency") {
  CMatrix h = CMatrix::Ones(4, 2);
  CHECK_THROWS_AS(zf_precoder(h), RankDeficiencyError);
  CHECK_THROWS_AS(zf_precoder(CMatrix::Ones(1, 2)), RankDeficiencyError);
}

TEST_CASE("sinr_per_user examples") {
  const PrecodingSetup s{CMatrix::Identity(2, 2), RVector::Ones(2), 1.0};
  const RVector sinr = sinr_per_user(CMatrix::Identity(2, 2), s);
  CHECK(sinr(0) == doctest::Approx(1.0));
  CHECK(sinr(1) == doctest::Approx(1.0));

  CMatrix h(2, 1);
  h << 1.0, 0.0;
  CMatrix w(2, 1);
  w << 0.0, 1.0;
  CHECK(sinr_per_user(h, {w, RVector::Ones(1), 1.0})(0) == 0.0);
  CHECK_THROWS_AS(sinr_per_user(h, {CMatrix::Identity(2, 2), RVector::Ones(2), 1.0}), DimensionError);
}

TEST_CASE("sinr_per_user matches the brute-force oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix h = testing::random_matrix(8, 3, rng);
    const CMatrix w = testing::random_matrix(8, 3, rng).colwise().normalized();
    RVector p(3);
    p << 0.2, 0.5, 0.3;
    const RVector a = sinr_per_user(h, {w, p, 0.1});
    const RVector b = oracle::brute_force_sinr(h, w, p, 0.1);
    CHECK((a - b).norm() <= 1e-10 * b.norm());
  }
}

TEST_CASE("zero forcing from the true channel removes interference") {
  Rng rng(2);
  const CMatrix h = testing::random_matrix(16, 4, rng);
  const auto zf = zf_precoder(h);
  const CMatrix g = h.transpose() * zf.w;
  for (int u = 0; u < 4; ++u)
    for (int v = 0; v < 4; ++v)
      if (u != v) CHECK(std::norm(g(u, v)) <= 1e-20 * std::norm(g(u, u)));
}

TEST_CASE("sum_rate examples") {
  CHECK(sum_rate(RVector::Ones(1)) == doctest::Approx(1.0));
  CHECK(sum_rate(RVector::Constant(2, 3.0)) == doctest::Approx(4.0));
  CHECK(sum_rate(RVector::Zero(2)) == 0.0);
  CHECK_THROWS(sum_rate(RVector::Constant(1, -0.5)));
}

TEST_CASE("global scale immunity") {
  Rng rng(5);
  const CMatrix h = testing::random_matrix(8, 2, rng);
  const CMatrix h_hat = h + 0.1 * testing::random_matrix(8, 2, rng);
  const auto a = zf_precoder(h_hat);
  const auto b = zf_precoder(cd{-0.7, 3.1} * h_hat);
  CHECK(testing::max_abs_diff(a.w, b.w) < 1e-12);
  const RVector p = equal_power(2, 1.0);
  CHECK(sum_rate(sinr_per_user(h, {a.w, p, 0.01})) ==
        doctest::Approx(sum_rate(sinr_per_user(h, {b.w, p, 0.01}))).epsilon(1e-12));
}

TEST_CASE("perfect CSI dominates on average") {
  Rng rng(11);
  double perfect = 0.0, mismatched = 0.0;
  const RVector p = equal_power(2, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const CMatrix h = testing::random_matrix(8, 2, rng);
    const CMatrix h_hat = h + 0.3 * testing::random_matrix(8, 2, rng);
    perfect += sum_rate(sinr_per_user(h, {zf_precoder(h).w, p, 0.01}));
    mismatched += sum_rate(sinr_per_user(h, {zf_precoder(h_hat).w, p, 0.01}));
  }
  CHECK(perfect >= mismatched);
}

TEST_CASE("equal_power") {
  const RVector p = equal_power(4, 2.0);
  CHECK(p.size() == 4);
  CHECK(p.sum() == doctest::Approx(2.0));
}
