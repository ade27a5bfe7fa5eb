#include "stein/core.hpp"

#include <cmath>
#include <numbers>

namespace stein {

Vec sample_gaussian_vector(RngStream& stream, Index n, double sigma) {
  if (n < 1) throw std::invalid_argument("sample_gaussian_vector: n must be >= 1");
  if (!(sigma > 0)) throw std::invalid_argument("sample_gaussian_vector: sigma must be positive");
  Vec out(n);
  for (Index i = 0; i < n; ++i) out(i) = sigma * stream.gaussian();
  return out;
}

Mat gaussian_design(RngStream& stream, Index n, Index p, const Mat& Sigma) {
  if (n < 1 || p < 1) throw std::invalid_argument("gaussian_design: n and p must be >= 1");
  if (Sigma.rows() != p || Sigma.cols() != p)
    throw std::invalid_argument("gaussian_design: Sigma must be p x p");
  if (!Sigma.isApprox(Sigma.transpose(), 1e-12))
    throw std::invalid_argument("gaussian_design: Sigma must be symmetric");
  Eigen::LLT<Mat> llt(Sigma);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("gaussian_design: Sigma is not positive definite");
  Mat Z(n, p);
  // Row-major fill so that row i depends only on the first (i+1)p draws.
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) Z(i, j) = stream.gaussian();
  return Z * llt.matrixL().transpose();
}

namespace {

// log(1 + d) - d, accurate for small |d|.
double log1pmx(double d) {
  if (std::abs(d) > 0.25) return std::log1p(d) - d;
  double term = d;
  double sum = 0.0;
  for (int k = 2; k < 60; ++k) {
    term *= -d;
    const double add = term / k;
    sum += add;
    if (std::abs(add) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

// lgamma(a) - Stirling approximation.
double stirling_error(double a) {
  if (a < 15.0) {
    return std::lgamma(a) - ((a - 0.5) * std::log(a) - a + 0.5 * std::log(2.0 * std::numbers::pi));
  }
  const double a2 = a * a;
  return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * a2)) / a2) / a2) / a;
}

// log(x^a e^{-x} / Gamma(a)), with the large cancellation removed.
double log_gamma_prefactor(double a, double x) {
  const double d = (x - a) / a;
  return a * log1pmx(d) + 0.5 * std::log(a / (2.0 * std::numbers::pi)) - stirling_error(a);
}

constexpr int kGammaIterations = 100000;

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0)) throw std::invalid_argument("regularized_gamma_p: a must be positive");
  if (x <= 0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double log_pre = log_gamma_prefactor(a, x);
  if (x < a + 1.0) {
    // P = pre/a * sum_k x^k / ((a+1)...(a+k))
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < kGammaIterations; ++k) {
      term *= x / (a + k);
      sum += term;
      if (term < sum * 1e-17) return std::min(1.0, std::exp(log_pre) * sum / a);
    }
    throw NumericError("regularized_gamma_p: series did not converge");
  }
  // Q = pre * CF, modified Lentz.
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kGammaIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) return std::max(0.0, 1.0 - std::exp(log_pre) * h);
  }
  throw NumericError("regularized_gamma_p: continued fraction did not converge");
}

double chi_square_cdf(double df, double x) { return regularized_gamma_p(0.5 * df, 0.5 * x); }

double chi_square_quantile(double df, double prob) {
  if (!(df > 0)) throw std::invalid_argument("chi_square_quantile: df must be positive");
  if (!(prob > 0 && prob < 1)) throw std::invalid_argument("chi_square_quantile: prob must lie in (0, 1)");
  double lo = 0.0;
  double hi = df + 20.0 * std::sqrt(2.0 * df) + 40.0;
  if (chi_square_cdf(df, hi) < prob) throw NumericError("chi_square_quantile: bracket does not contain quantile");
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = chi_square_cdf(df, mid);
    if (cdf < prob) lo = mid; else hi = mid;
    if (hi - lo <= 1e-15 * hi) return 0.5 * (lo + hi);
  }
  throw NumericError("chi_square_quantile: bisection did not converge");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace stein
