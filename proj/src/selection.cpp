#include "stein/selection.hpp"

#include <cmath>
#include <numbers>

namespace stein {

CandidateSet make_candidates(std::vector<Fit> fits, const Vec& y, double sigma, double L) {
  if (fits.empty()) throw std::invalid_argument("make_candidates: need at least one fit");
  CandidateSet set;
  set.L = L;
  set.sure_values.resize(static_cast<Index>(fits.size()));
  for (std::size_t k = 0; k < fits.size(); ++k) {
    if (fits[k].mu_hat.size() != y.size()) throw std::invalid_argument("make_candidates: fits must share y");
    set.sure_values(static_cast<Index>(k)) = sure(fits[k].mu_hat, y, fits[k].df_hat, sigma);
  }
  set.fits = std::move(fits);
  return set;
}

Index sure_tune(const Vec& sure_values) {
  if (sure_values.size() < 1) throw std::invalid_argument("sure_tune: no candidates");
  Index best = 0;
  for (Index k = 1; k < sure_values.size(); ++k)
    if (sure_values(k) < sure_values(best)) best = k;
  return best;
}

double oracle_gap_bound(Index m, double alpha, double L, double s_star, double sigma) {
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("oracle_gap_bound: alpha must lie in (0, 1)");
  const double mm = static_cast<double>(m);
  const double quartic = std::pow(8.0 * s_star * mm / alpha, 0.25);
  const double square = std::sqrt(8.0 * mm * (std::numbers::sqrt2 * L + 1.0) / alpha);
  return sigma * std::max(quartic, square);
}

double subgaussian_gap_bound(double L, double sigma, Index m, double delta) {
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("subgaussian_gap_bound: delta must lie in (0, 1)");
  return 2.0 * L * sigma * std::sqrt(2.0 * std::log(static_cast<double>(m) / delta));
}

double squared_risk_gap_bound(double L, double sigma, Index n, Index m) {
  return L * sigma * sigma * std::sqrt(32.0 * static_cast<double>(n) * static_cast<double>(m));
}

TriangleWave::TriangleWave(double sigma, int period_exponent) : peak_(std::ldexp(sigma, period_exponent)) {
  if (!(sigma > 0)) throw std::invalid_argument("TriangleWave: sigma must be positive");
}

double TriangleWave::operator()(double u) const {
  const double w = std::fmod(std::abs(u), period());
  return w <= peak_ ? w : period() - w;
}

double TriangleWave::slope(double u) const {
  const double w = std::fmod(std::abs(u), period());
  const double rising = w < peak_ ? 1.0 : -1.0;
  return u < 0 ? -rising : rising;
}

TriangleEstimator::TriangleEstimator(Index n, double sigma, int period_exponent)
    : VectorField(n), wave_(sigma, period_exponent) {
  // Constant direction with ||v||^2 = sigma^2 sqrt(n).
  v_ = Vec::Constant(n, sigma * std::pow(static_cast<double>(n), -0.25));
}

Vec TriangleEstimator::value(const Vec& y) const {
  Vec out(y.size());
  for (Index i = 0; i < y.size(); ++i) out(i) = v_(i) + wave_(y(i));
  return out;
}

Mat TriangleEstimator::jacobian(const Vec& y) const {
  Vec d(y.size());
  for (Index i = 0; i < y.size(); ++i) d(i) = wave_.slope(y(i));
  return d.asDiagonal();
}

FieldValue TriangleEstimator::evaluate(const Vec& y) const {
  double div = 0.0;
  for (Index i = 0; i < y.size(); ++i) div += wave_.slope(y(i));
  return {value(y), div, static_cast<double>(y.size())};
}

AdversarialPair adversarial_pair(Index n, double sigma, int period_exponent) {
  if (n < 1) throw std::invalid_argument("adversarial_pair: n must be >= 1");
  AdversarialPair pair;
  pair.zero = std::make_shared<ConstantField>(Vec::Zero(n));
  pair.triangle = std::make_shared<TriangleEstimator>(n, sigma, period_exponent);
  return pair;
}

}  // namespace stein
