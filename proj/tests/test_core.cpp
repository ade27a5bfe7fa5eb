#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "stein/core.hpp"
#include "stein/stats.hpp"

using namespace stein;

TEST_CASE("philox known-answer vector") {
  // Reference output of Philox4x64-10 for zero counter and zero key.
  const auto out = RngStream::philox({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x16554d9eca36314cULL);
  CHECK(out[1] == 0xdb20fe9d672d0fdcULL);
  CHECK(out[2] == 0xd7e772cee186176bULL);
  CHECK(out[3] == 0x7e68b68aec7ba23bULL);
}

TEST_CASE("streams reproduce and separate") {
  RngStream a(1, 0), b(1, 0), c(1, 1), d(2, 0);
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    CHECK(va == b());
    CHECK(va != c());
    CHECK(va != d());
  }
  RngStream root(7, 3);
  RngStream s0 = root.substream(0), s0b = root.substream(0), s1 = root.substream(1);
  CHECK(s0() == s0b());
  CHECK(s0() != s1());
  CHECK(root.substream(0).substream(5)() == root.substream(0).substream(5)());
  CHECK_THROWS(root.substream(0).substream(0).substream(0));
}

TEST_CASE("uniforms stay inside the open unit interval") {
  RngStream s(3, 9);
  double lo = 1, hi = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
}

TEST_CASE("sample_gaussian_vector determinism and moments") {
  RngStream s1(1, 0), s2(1, 0);
  CHECK(sample_gaussian_vector(s1, 3, 1.0) == sample_gaussian_vector(s2, 3, 1.0));

  RngStream s(11, 0);
  const Vec x = sample_gaussian_vector(s, 100000, 2.0);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / (x.size() - 1);
  CHECK(std::abs(mean) <= 4.0 * 2.0 / std::sqrt(1e5));
  CHECK(std::abs(var - 4.0) <= 0.05 * 4.0);

  // Fourth moment of a standard normal is 3.
  RngStream t(12, 0);
  const Vec z = sample_gaussian_vector(t, 200000, 1.0);
  const double m4 = z.array().pow(4).mean();
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / 200000.0));
  CHECK_THROWS(sample_gaussian_vector(t, 0, 1.0));
}

TEST_CASE("chi-square quantile closed forms") {
  CHECK(chi_square_quantile(2, 1.0 - std::exp(-1.0)) == doctest::Approx(2.0).epsilon(1e-12));
  const double z975 = boost::math::quantile(boost::math::normal(), 0.975);
  CHECK(chi_square_quantile(1, 0.95) == doctest::Approx(z975 * z975).epsilon(1e-10));
  CHECK(chi_square_quantile(1, 0.95) == doctest::Approx(3.841459).epsilon(1e-6));
  CHECK_THROWS(chi_square_quantile(3, 0.0));
  CHECK_THROWS(chi_square_quantile(3, 1.0));
}

TEST_CASE("chi-square quantile agrees with an independent implementation") {
  RngStream s(5, 5);
  for (int k = 0; k < 100; ++k) {
    const int df = 1 + static_cast<int>(s() % 2000);
    const double prob = 0.001 + 0.998 * s.uniform();
    const double q = chi_square_quantile(df, prob);
    CHECK(chi_square_cdf(df, q) == doctest::Approx(prob).epsilon(1e-8));
    const double ref = boost::math::quantile(boost::math::chi_squared(df), prob);
    CHECK(q == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("chi-square cdf at very large df") {
  const double df = 1e6;
  for (double x : {df - 3000.0, df, df + 2500.0}) {
    const double ref = boost::math::cdf(boost::math::chi_squared(df), x);
    CHECK(chi_square_cdf(df, x) == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
}

TEST_CASE("gaussian_design covariance") {
  RngStream s(21, 0);
  const Mat X = gaussian_design(s, 100000, 2, Mat::Identity(2, 2));
  const Mat C = X.transpose() * X / 100000.0;
  CHECK((C - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 0.02);

  RngStream t(22, 0);
  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 4;
  D(1, 1) = 1;
  const Mat Y = gaussian_design(t, 100000, 2, D);
  CHECK(std::abs(Y.col(0).squaredNorm() / 1e5 - 4.0) <= 0.2);

  RngStream a(3, 1), b(3, 1);
  Mat S(3, 3);
  S << 2, 0.5, 0.1, 0.5, 1, 0.2, 0.1, 0.2, 1.5;
  CHECK(gaussian_design(a, 5, 3, S) == gaussian_design(b, 5, 3, S));

  Mat bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(gaussian_design(a, 5, 2, bad), std::invalid_argument);
}

TEST_CASE("gaussian_design converges at the root-n rate") {
  Mat S(3, 3);
  S << 1.0, 0.4, 0.2, 0.4, 2.0, -0.3, 0.2, -0.3, 0.5;
  RngStream s(23, 0);
  const Index n = 40000;
  const Mat X = gaussian_design(s, n, 3, S);
  const Mat C = X.transpose() * X / static_cast<double>(n);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) {
      // Var of x_i x_j is S_ii S_jj + S_ij^2.
      const double sd = std::sqrt((S(i, i) * S(j, j) + S(i, j) * S(i, j)) / n);
      CHECK(std::abs(C(i, j) - S(i, j)) <= 4.0 * sd);
    }
}

TEST_CASE("regression problem invariants") {
  Problem prob;
  prob.X = Mat::Ones(4, 3);
  prob.y = Vec::Zero(4);
  Vec beta(3);
  beta << 0.0, 1.5, -2.0;
  prob.beta = beta;
  prob.sigma = 1.0;
  CHECK(prob.s0() == 2);
  CHECK_NOTHROW(prob.validate());
  prob.sigma = 0.0;
  CHECK_THROWS(prob.validate());
  prob.sigma = 1.0;
  prob.y = Vec::Zero(3);
  CHECK_THROWS(prob.validate());

  SequenceModel<double> seq{Vec::Zero(3), 1.0, Vec::Zero(2)};
  CHECK_THROWS(seq.validate());
}

TEST_CASE("summaries and parallel loop") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v) == 500500.0);
  const Summary s = summarize(v);
  CHECK(s.mean == doctest::Approx(500.5));
  CHECK(s.var == doctest::Approx(1000.0 * 1001.0 / 12.0));

  std::vector<double> out1(257), out4(257);
  parallel_for(out1.size(), [&](std::size_t i) { out1[i] = RngStream(9, i).uniform(); }, 1);
  parallel_for(out4.size(), [&](std::size_t i) { out4[i] = RngStream(9, i).uniform(); }, 4);
  CHECK(out1 == out4);
  CHECK_THROWS(parallel_for(10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }, 3));
}
