#include <cmath>
#include <numbers>

#include "doctest.h"
#include "stein/selection.hpp"

using namespace stein;

TEST_CASE("sure_tune argmin and tie-break") {
  Vec a(2), b(2);
  a << 5, 3;
  b << 3, 3;
  CHECK(sure_tune(a) == 1);
  CHECK(sure_tune(b) == 0);
  CHECK_THROWS(sure_tune(Vec()));
}

TEST_CASE("sure_tune matches an exhaustive scan over a lambda grid") {
  RngStream s(1, 0);
  const Mat X = gaussian_design(s, 40, 60, Mat::Identity(60, 60));
  Vec beta = Vec::Zero(60);
  beta.head(4).setConstant(1.0);
  const Vec y = X * beta + sample_gaussian_vector(s, 40, 1.0);
  std::vector<Fit> fits;
  for (double lambda : {0.05, 0.1, 0.15, 0.2, 0.3, 0.5}) fits.push_back(fit_lasso<double>(X, y, lambda));
  const CandidateSet set = make_candidates(fits, y, 1.0);
  double best = INFINITY;
  Index arg = -1;
  for (std::size_t k = 0; k < set.fits.size(); ++k) {
    const double v = (y - set.fits[k].mu_hat).squaredNorm() + 2 * set.fits[k].df_hat - 40;
    CHECK(set.sure_values(static_cast<Index>(k)) == doctest::Approx(v).epsilon(1e-12));
    if (v < best) best = v, arg = static_cast<Index>(k);
  }
  CHECK(sure_tune(set) == arg);

  // A common shift of every SURE value leaves the choice unchanged.
  CHECK(sure_tune(Vec(set.sure_values.array() + 17.5)) == arg);
}

TEST_CASE("oracle gap bounds") {
  CHECK(oracle_gap_bound(1, 0.5, 1.0, 0.0, 1.0) == doctest::Approx(std::sqrt(16 * (std::numbers::sqrt2 + 1))));
  CHECK(oracle_gap_bound(1, 0.5, 1.0, 0.0, 2.5) == doctest::Approx(2.5 * std::sqrt(16 * (std::numbers::sqrt2 + 1))));

  // Branch check with s* = 4 L^2 n.
  for (Index n : {1, 10, 100, 10000}) {
    const double L = 1.0, alpha = 0.1, sstar = 4 * L * L * n;
    const Index m = 3;
    const double quartic = std::pow(8 * sstar * m / alpha, 0.25);
    const double square = std::sqrt(8 * m * (std::numbers::sqrt2 * L + 1) / alpha);
    const double bound = oracle_gap_bound(m, alpha, L, sstar, 1.0);
    const bool quartic_dominates = std::sqrt(8 * sstar * m / alpha) >= 8 * m * (std::numbers::sqrt2 * L + 1) / alpha;
    CHECK(bound == doctest::Approx(quartic_dominates ? quartic : square));
  }

  for (double sstar : {0.0, 1.0, 1e3, 1e6}) {
    const double b1 = oracle_gap_bound(5, 0.2, 1.0, sstar, 1.0);
    const double b2 = oracle_gap_bound(5, 0.1, 1.0, sstar, 1.0);
    CHECK(b2 / b1 <= std::sqrt(2.0) + 1e-12);
    CHECK(b2 / b1 >= std::pow(2.0, 0.25) - 1e-12);
  }
  CHECK_THROWS(oracle_gap_bound(1, 1.5, 1, 0, 1));

  CHECK(subgaussian_gap_bound(1.0, 2.0, 10, 0.1) == doctest::Approx(4 * std::sqrt(2 * std::log(100.0))));
  CHECK(squared_risk_gap_bound(1.0, 2.0, 50, 2) == doctest::Approx(4 * std::sqrt(32.0 * 100)));
}

TEST_CASE("triangle wave construction") {
  const TriangleWave g(0.5, 2);
  CHECK(g.peak() == 2.0);
  CHECK(g.period() == 4.0);
  CHECK(g(0.0) == 0.0);
  CHECK(g(1.0) == 1.0);
  CHECK(g(2.0) == 2.0);
  CHECK(g(3.0) == 1.0);
  CHECK(g(4.0) == 0.0);
  CHECK(g(5.5) == 1.5);

  RngStream s(2, 0);
  for (int k = 0; k < 1000; ++k) {
    const double u = 20 * (s.uniform() - 0.5), v = u + 3 * (s.uniform() - 0.5);
    CHECK(g(-u) == g(u));
    CHECK(std::abs(g(u) - g(v)) <= std::abs(u - v) + 1e-12);
    const double h = 1e-7;
    CHECK(std::abs((g(u + h) - g(u - h)) / (2 * h) - g.slope(u)) <= 1e-6);
  }

  const TriangleWave tiny(1.0, -20);
  CHECK(tiny.period() == std::ldexp(1.0, -19));
}

TEST_CASE("adversarial pair") {
  const Index n = 16;
  const double sigma = 1.5;
  const AdversarialPair pair = adversarial_pair(n, sigma, -3);
  const auto& tri = dynamic_cast<const TriangleEstimator&>(*pair.triangle);
  CHECK(tri.offset().squaredNorm() == doctest::Approx(sigma * sigma * std::sqrt(16.0)));
  CHECK(default_period_exponent(5) == 5);
  CHECK(default_period_exponent(1000) == 20);

  RngStream s(3, 0);
  for (int k = 0; k < 50; ++k) {
    const Vec y1 = sample_gaussian_vector(s, n, sigma);
    const Vec y2 = y1 + 0.3 * sample_gaussian_vector(s, n, 1.0);
    CHECK(pair.zero->value(y1).isZero(0));
    CHECK((pair.triangle->value(y1) - pair.triangle->value(y2)).norm() <= (y1 - y2).norm() + 1e-12);
    const FieldValue v = pair.triangle->evaluate(y1);
    CHECK(v.divergence == doctest::Approx(pair.triangle->jacobian(y1).trace()));
    CHECK(v.trace_jac_sq == static_cast<double>(n));
    CHECK(std::abs(v.divergence) <= static_cast<double>(n));
  }
  CHECK_THROWS(adversarial_pair(0, 1.0, 1));
}
