#include "stein/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stein {

double divergence_variance_bound(double trace_grad_sq, double grad_times_z_sq_norm, double sigma, Index n) {
  if (trace_grad_sq < 0 || grad_times_z_sq_norm < 0)
    throw std::invalid_argument("divergence_variance_bound: inputs must be nonnegative");
  if (!(sigma > 0)) throw std::invalid_argument("divergence_variance_bound: sigma must be positive");
  return std::min(trace_grad_sq + grad_times_z_sq_norm / (sigma * sigma), 2.0 * static_cast<double>(n));
}

double model_size_variance_bound(double expected_size, Index p) {
  if (p < 1) throw std::invalid_argument("model_size_variance_bound: p must be positive");
  if (expected_size < 0 || expected_size > static_cast<double>(p))
    throw std::invalid_argument("model_size_variance_bound: expected size must lie in [0, p]");
  const double E = expected_size;
  return 3.0 * E + 4.0 * E * std::log(std::numbers::e * static_cast<double>(p) / std::max(E, 1.0));
}

namespace {

// Bisection for a root of a monotone function on [lo, hi], where sign(f(lo)) != sign(f(hi)).
template <typename F>
double bisect(F f, double lo, double hi) {
  const bool lo_negative = f(lo) < 0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) < 0) == lo_negative) lo = mid; else hi = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ConfidenceInterval model_size_ci(Index observed_size, Index p, double alpha) {
  if (observed_size < 0 || observed_size > p) throw std::invalid_argument("model_size_ci: size must lie in [0, p]");
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("model_size_ci: alpha must lie in (0, 1)");
  const double S = static_cast<double>(observed_size);
  const double denom = std::max(S, 1.0);
  const double r = (3.0 + 4.0 * std::log(std::numbers::e * static_cast<double>(p))) / (alpha * denom);
  ConfidenceInterval ci;
  ci.kind = IntervalKind::model_size_mean;
  ci.nominal_level = 1.0 - alpha;
  if (observed_size == 0) {
    ci.lower = 0.0;
    ci.upper = 2.0 + r;
    return ci;
  }
  // Deviance S/E + E/S - 2 is convex in E with its zero at E = S.
  auto excess = [&](double E) { return S / E + E / denom - 2.0 - r; };
  ci.lower = bisect(excess, S / (r + 2.0), S);
  ci.upper = bisect(excess, S, S * (r + 2.0));
  return ci;
}

double chi_square_two_sided_deviation(Index n, double alpha) {
  if (n < 1) throw std::invalid_argument("chi_square_two_sided_deviation: n must be >= 1");
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("chi_square_two_sided_deviation: alpha in (0, 1)");
  const double df = static_cast<double>(n);
  const double scale = std::sqrt(2.0 * df);
  auto outside = [&](double v) {
    const double inside = chi_square_cdf(df, df + v * scale) - chi_square_cdf(df, std::max(0.0, df - v * scale));
    return (1.0 - inside) - alpha;
  };
  double hi = 1.0;
  while (outside(hi) > 0) {
    hi *= 2.0;
    if (hi > 1e6) throw NumericError("chi_square_two_sided_deviation: bracket search failed");
  }
  return bisect(outside, 0.0, hi);
}

double chi_square_lower_deviation(Index n, double alpha) {
  if (n < 1) throw std::invalid_argument("chi_square_lower_deviation: n must be >= 1");
  const double df = static_cast<double>(n);
  return (df - chi_square_quantile(df, alpha)) / std::sqrt(2.0 * df);
}

LossRegions loss_confidence_region(double sure_value, double sigma, Index n, double alpha, double eps_star) {
  if (!(sigma > 0)) throw std::invalid_argument("loss_confidence_region: sigma must be positive");
  const double v0 = eps_star > 0 ? std::pow(eps_star, 0.25) : 0.0;
  const double level_loss = eps_star > 0 ? std::sqrt(eps_star) : 0.0;
  const double scale = sigma * sigma * std::sqrt(2.0 * static_cast<double>(n));
  LossRegions out;
  const double half = (chi_square_two_sided_deviation(n, alpha) + v0) * scale;
  out.two_sided.kind = IntervalKind::two_sided_loss;
  out.two_sided.nominal_level = 1.0 - alpha - level_loss;
  out.two_sided.lower = std::max(0.0, sure_value - half);
  out.two_sided.upper = std::max(out.two_sided.lower, sure_value + half);
  out.upper.kind = IntervalKind::upper_loss;
  out.upper.nominal_level = 1.0 - alpha - level_loss;
  out.upper.lower = 0.0;
  out.upper.upper = std::max(0.0, sure_value + (chi_square_lower_deviation(n, alpha) + v0) * scale);
  return out;
}

double data_driven_gamma(double sure_value, double df_hat, double sigma, Index n) {
  const double nn = static_cast<double>(n);
  return 4.0 * std::max(0.0, sure_value / (nn * sigma * sigma) + df_hat / nn);
}

double data_driven_kappa(Index n, double beta2) {
  const double bn = beta2 * static_cast<double>(n);
  return 2.0 * std::pow(6.0 / bn, 0.25) + 4.0 / std::sqrt(bn);
}

ConfidenceInterval data_driven_confidence(double sure_value, double df_hat, double sigma, Index n, double alpha,
                                          double beta1, double beta2) {
  if (!(alpha > 0 && beta1 > 0 && beta2 > 0 && alpha + beta1 + beta2 < 1))
    throw std::invalid_argument("data_driven_confidence: need positive alpha, beta1, beta2 summing below 1");
  const double gamma_hat = data_driven_gamma(sure_value, df_hat, sigma, n);
  const double kappa = data_driven_kappa(n, beta2);
  const double half = sigma * sigma * std::sqrt(2.0 * static_cast<double>(n)) *
                      (chi_square_two_sided_deviation(n, alpha) + (std::sqrt(gamma_hat) + kappa) / std::sqrt(2.0 * beta1));
  ConfidenceInterval ci;
  ci.kind = IntervalKind::data_driven_mean_loss;
  ci.nominal_level = 1.0 - (alpha + beta1 + beta2);
  ci.lower = std::max(0.0, sure_value - half);
  ci.upper = std::max(ci.lower, sure_value + half);
  return ci;
}

}  // namespace stein
