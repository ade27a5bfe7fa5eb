#include "stein/identities.hpp"

#include <cmath>
#include <tuple>
#include <vector>

#include "stein/stats.hpp"

namespace stein {

namespace {

void check_args(const VectorField& f, double sigma, Index reps) {
  if (reps < 2) throw std::invalid_argument("identity check: reps must be >= 2");
  if (!(sigma > 0)) throw std::invalid_argument("identity check: sigma must be positive");
  if (f.dim() < 1) throw std::invalid_argument("identity check: field dimension must be >= 1");
}

}  // namespace

IdentityReport compare_paired(std::span<const double> lhs, std::span<const double> rhs) {
  if (lhs.size() != rhs.size() || lhs.size() < 2) throw std::invalid_argument("compare_paired: bad sizes");
  std::vector<double> diff(lhs.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) diff[i] = lhs[i] - rhs[i];
  const Summary l = summarize(lhs);
  const Summary r = summarize(rhs);
  const Summary d = summarize(diff);
  IdentityReport rep;
  rep.lhs_mean = l.mean;
  rep.rhs_mean = r.mean;
  rep.lhs_se = l.se;
  rep.rhs_se = r.se;
  rep.reps = static_cast<Index>(lhs.size());
  rep.z_score = d.se > 0 ? std::abs(d.mean) / d.se : (d.mean == 0 ? 0.0 : INFINITY);
  return rep;
}

std::pair<double, double> sos_draw(const VectorField& f, double sigma, RngStream& rng) {
  const double s2 = sigma * sigma;
  const Vec z = sample_gaussian_vector(rng, f.dim(), sigma);
  const FieldValue v = f.evaluate(z);
  const double t = z.dot(v.f) - s2 * v.divergence;
  return {t * t, s2 * v.f.squaredNorm() + s2 * s2 * v.trace_jac_sq};
}

IdentityReport verify_sos_identity(const VectorField& f, double sigma, Index reps, const RngStream& stream,
                                   unsigned threads) {
  check_args(f, sigma, reps);
  std::vector<double> lhs(static_cast<std::size_t>(reps)), rhs(lhs.size());
  parallel_for(lhs.size(), [&](std::size_t i) {
    RngStream rng = stream.substream(i);
    std::tie(lhs[i], rhs[i]) = sos_draw(f, sigma, rng);
  }, threads);
  return compare_paired(lhs, rhs);
}

IdentityReport verify_sos_inner_product(const VectorField& f, const VectorField& h, double sigma, Index reps,
                                        const RngStream& stream, unsigned threads) {
  check_args(f, sigma, reps);
  if (h.dim() != f.dim()) throw std::invalid_argument("verify_sos_inner_product: dimension mismatch");
  const double s2 = sigma * sigma;
  std::vector<double> lhs(static_cast<std::size_t>(reps)), rhs(lhs.size());
  parallel_for(lhs.size(), [&](std::size_t i) {
    RngStream rng = stream.substream(i);
    const Vec z = sample_gaussian_vector(rng, f.dim(), sigma);
    const Vec fv = f.value(z);
    const Vec hv = h.value(z);
    const Mat Jf = f.jacobian(z);
    const Mat Jh = h.jacobian(z);
    lhs[i] = (z.dot(fv) - s2 * Jf.trace()) * (z.dot(hv) - s2 * Jh.trace());
    rhs[i] = s2 * fv.dot(hv) + s2 * s2 * (Jf * Jh).trace();
  }, threads);
  return compare_paired(lhs, rhs);
}

IdentityReport verify_variance_identity(const VectorField& f, const ScalarField& g, double sigma, Index reps,
                                        const RngStream& stream, unsigned threads) {
  check_args(f, sigma, reps);
  const double s2 = sigma * sigma;
  const std::size_t R = static_cast<std::size_t>(reps);
  std::vector<double> x(R), gval(R), base(R);
  parallel_for(R, [&](std::size_t i) {
    RngStream rng = stream.substream(i);
    const Vec z = sample_gaussian_vector(rng, f.dim(), sigma);
    const FieldValue v = f.evaluate(z);
    const double gz = g.value(z);
    const Vec grad = g.gradient(z);
    x[i] = z.dot(v.f) - s2 * v.divergence - gz;
    gval[i] = gz;
    base[i] = s2 * (v.f - grad).squaredNorm() + s2 * s2 * v.trace_jac_sq - s2 * grad.squaredNorm();
  }, threads);
  // Per-draw terms: (x_i - xbar)^2 against base_i + (g_i - gbar)^2, rescaled
  // so their means are the unbiased variances.
  const double xbar = summarize(x).mean;
  const double gbar = summarize(gval).mean;
  const double corr = static_cast<double>(R) / static_cast<double>(R - 1);
  std::vector<double> lhs(R), rhs(R);
  for (std::size_t i = 0; i < R; ++i) {
    lhs[i] = corr * (x[i] - xbar) * (x[i] - xbar);
    rhs[i] = base[i] + corr * (gval[i] - gbar) * (gval[i] - gbar);
  }
  return compare_paired(lhs, rhs);
}

}  // namespace stein
