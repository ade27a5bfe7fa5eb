#include <cmath>

#include "doctest.h"
#include "stein/divergence_mc.hpp"

using namespace stein;

TEST_CASE("constant map has zero divergence") {
  Vec c(4);
  c << 1, 2, 3, 4;
  auto f = [&](const Vec&) { return c; };
  for (Index m : {1, 7, 100}) {
    const DivergenceEstimate e = mc_divergence(f, Vec(Vec::Ones(4)), m, RngStream(1, 0));
    CHECK(e.value == 0.0);
    CHECK_FALSE(e.dbar.has_value());
    CHECK(e.se_bound == doctest::Approx(2 * std::sqrt(4.0 / m)));
  }
}

TEST_CASE("identity map") {
  const Index n = 10, m = 10000;
  auto f = [](const Vec& y) { return y; };
  const DivergenceEstimate e = mc_divergence(f, Vec(Vec::Zero(n)), m, RngStream(2, 0));
  CHECK(std::abs(e.value - n) <= 4 * std::sqrt(2.0 * n / m));
  CHECK(e.a == doctest::Approx(1e-4));
}

TEST_CASE("diagonal linear map") {
  const Index m = 100000;
  Vec d(3);
  d << 1, 2, 3;
  auto f = [&](const Vec& y) { return Vec(d.cwiseProduct(y)); };
  McOptions opts;
  opts.a = 1e-4;
  Vec y(3);
  y << 0.3, -1.0, 2.0;
  const DivergenceEstimate e = mc_divergence(f, y, m, RngStream(3, 0), opts);
  // Var(z^T A z) = ||A||_F^2 + trace(A^2) for symmetric A.
  const double sd = std::sqrt(2 * d.squaredNorm() / m);
  CHECK(std::abs(e.value - 6.0) <= 4 * sd);
  CHECK(e.empirical_se == doctest::Approx(sd).epsilon(0.05));

  opts.two_sided = true;
  const DivergenceEstimate t = mc_divergence(f, y, m, RngStream(3, 0), opts);
  CHECK(std::abs(t.value - e.value) <= 1e-6);
}

TEST_CASE("determinism and thread independence") {
  auto f = [](const Vec& y) { return Vec(y.array().tanh()); };
  RngStream s(4, 0);
  const Vec y = sample_gaussian_vector(s, 20, 1.0);
  McOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const auto a = mc_divergence(f, y, 500, RngStream(4, 1), one);
  const auto b = mc_divergence(f, y, 500, RngStream(4, 1), many);
  CHECK(a.value == b.value);
  CHECK(mc_divergence(f, y, 500, RngStream(4, 2), one).value != a.value);
}

TEST_CASE("errors carry the perturbation index") {
  auto f = [](const Vec& y) -> Vec {
    if (y(0) > 1e-4) throw std::runtime_error("boom");
    return y;
  };
  try {
    mc_divergence(f, Vec(Vec::Zero(3)), 50, RngStream(5, 0), McOptions{1.0, false, 1});
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("perturbation") != std::string::npos);
  }
}

TEST_CASE("lasso map is exactly affine near a strict KKT point") {
  RngStream s(6, 0);
  const Index n = 60, p = 90;
  auto X = std::make_shared<const Mat>(gaussian_design(s, n, p, Mat::Identity(p, p)));
  Vec beta = Vec::Zero(p);
  beta.head(5).setConstant(1.0);
  const Vec y = *X * beta + sample_gaussian_vector(s, n, 1.0);
  const double lambda = 0.2, a = 1e-4;
  const PenalizedFitMap f(X, lambda);
  const Fit fit = f.fit(y);
  const double op = Eigen::JacobiSVD<Mat>(*X).singularValues()(0);
  const KktReport kkt = check_kkt<double>(*X, y, lambda, fit.beta_hat, 10 * a * op / std::sqrt(double(n)));
  REQUIRE(kkt.strict);
  const Index m = 200;
  McOptions opts;
  opts.a = a;
  const DivergenceEstimate e = mc_divergence(f, y, m, RngStream(6, 1), opts);
  const double df = static_cast<double>(fit.support.size());
  CHECK(std::abs(e.value - df) <= 4 * std::sqrt(4.0 * n / m));
  REQUIRE(e.dbar.has_value());
  CHECK(*e.dbar == df);
}

TEST_CASE("lasso map squared errors satisfy the Markov check") {
  RngStream s(7, 0);
  const Index n = 40, p = 60, m = 50;
  auto X = std::make_shared<const Mat>(gaussian_design(s, n, p, Mat::Identity(p, p)));
  Vec beta = Vec::Zero(p);
  beta.head(3).setConstant(1.5);
  const PenalizedFitMap f(X, 0.25);
  int ok = 0;
  for (int k = 0; k < 20; ++k) {
    const Vec y = *X * beta + sample_gaussian_vector(s, n, 1.0);
    const DivergenceEstimate e = mc_divergence(f, y, m, RngStream(7, 1 + k));
    const double err = e.value - f.fit(y).df_hat;
    ok += err * err <= 4.0 * n / m * 10;
  }
  CHECK(ok >= 19);
}

TEST_CASE("elastic net and svt maps report exact divergences") {
  RngStream s(8, 0);
  auto X = std::make_shared<const Mat>(gaussian_design(s, 30, 20, Mat::Identity(20, 20)));
  const Vec y = sample_gaussian_vector(s, 30, 2.0);
  const PenalizedFitMap en(X, 0.1, 3.0);
  const Fit fit = en.fit(y);
  CHECK(*en.evaluate(y).divergence == fit.df_hat);
  const DivergenceEstimate e = mc_divergence(en, y, 4000, RngStream(8, 1), McOptions{1e-3, false, 0});
  CHECK(std::abs(e.value - fit.df_hat) <= 4 * e.empirical_se + 1e-3);

  const SvtMap sv(6, 5, 1.0);
  const Vec v = sample_gaussian_vector(s, 30, 1.0);
  const DivergenceEstimate d = mc_divergence(sv, v, 4000, RngStream(8, 2));
  const double exact = *sv.evaluate(v).divergence;
  CHECK(std::abs(d.value - exact) <= 4 * d.empirical_se + 1e-3);
  CHECK(std::abs(*d.dbar - exact) <= 1e-3 * exact);
  CHECK_THROWS(sv(Vec(Vec::Zero(29))));
}

TEST_CASE("df table scaling on a small svt problem") {
  RngStream s(9, 0);
  const Index q = 12, n = 10;
  const Vec y = 2.0 * sample_gaussian_vector(s, q * n, 1.0);
  const SvtMap f(q, n, 3.0);
  const std::vector<Index> grid{10, 40, 160};
  const DfTable t = df_table(f, y, *f.evaluate(y).divergence, grid, 40, RngStream(9, 1), McOptions{1e-4, false, 0});
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].values.size() == 40);
  const auto ratios = t.sd_ratios();
  REQUIRE(ratios.size() == 2);
  for (const auto& [m, r] : ratios) CHECK((r >= 1.4 && r <= 2.8));
  CHECK(std::abs(t.rows[2].mean - t.df_exact) <= 4 * t.rows[2].sd / std::sqrt(40.0));

  const DfTable again =
      df_table(f, y, *f.evaluate(y).divergence, grid, 40, RngStream(9, 1), McOptions{1e-4, false, 3});
  CHECK(again.rows[1].values == t.rows[1].values);
}
