#include "stein/debias.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "stein/stats.hpp"

namespace stein {

Direction direction_setup(const Vec& a0_raw, const Mat& Sigma, const Mat& X) {
  const Index p = a0_raw.size();
  if (Sigma.rows() != p || Sigma.cols() != p || X.cols() != p)
    throw std::invalid_argument("direction_setup: dimension mismatch");
  if (a0_raw.isZero(0)) throw std::invalid_argument("direction_setup: a0 must be nonzero");
  const Eigen::LLT<Mat> llt(Sigma);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("direction_setup: Sigma must be positive definite");
  const Vec v = llt.solve(a0_raw);
  const double q = a0_raw.dot(v);
  if (!(q > 0) || !std::isfinite(q)) throw std::invalid_argument("direction_setup: Sigma is numerically singular");
  Direction d;
  d.a0 = a0_raw / std::sqrt(q);
  d.u0 = v / std::sqrt(q);
  d.z0 = X * d.u0;
  d.Q0 = Mat::Identity(p, p) - d.u0 * d.a0.transpose();
  d.XQ0 = X - d.z0 * d.a0.transpose();
  return d;
}

namespace {

// Solves the penalized problem at a perturbed (X', y'). When the base fit is
// strict, the support and signs are tried first and verified against the KKT
// conditions; otherwise, or if the check fails, a warm-started solve runs.
class PerturbedSolver {
 public:
  PerturbedSolver(const Fit& fit, bool frozen, const SolverOptions& opts) : fit_(fit), frozen_(frozen), opts_(opts) {
    signs_.resize(static_cast<Index>(fit.support.size()));
    for (std::size_t k = 0; k < fit.support.size(); ++k)
      signs_(static_cast<Index>(k)) = fit.beta_hat(fit.support[k]) > 0 ? 1.0 : -1.0;
  }

  Vec solve(const Mat& Xp, const Vec& yp) const {
    if (frozen_) {
      Vec b;
      if (frozen_solve(Xp, yp, b)) return b;
    }
    const Fit f = fit_.gamma > 0 ? fit_elastic_net<double>(Xp, yp, fit_.lambda, fit_.gamma, opts_, &fit_.beta_hat)
                                 : fit_lasso<double>(Xp, yp, fit_.lambda, opts_, &fit_.beta_hat);
    if (!f.converged) throw NumericError("debias: perturbed solve did not converge");
    return f.beta_hat;
  }

 private:
  bool frozen_solve(const Mat& Xp, const Vec& yp, Vec& out) const {
    const Index n = Xp.rows(), p = Xp.cols();
    out = Vec::Zero(p);
    if (fit_.support.empty()) {
      const double c = (Xp.transpose() * yp).cwiseAbs().maxCoeff() / static_cast<double>(n);
      return c <= fit_.lambda;
    }
    const Mat XS = columns(Xp, fit_.support);
    Mat G = XS.transpose() * XS;
    G.diagonal().array() += fit_.gamma;
    const Vec bS = G.ldlt().solve(XS.transpose() * yp - static_cast<double>(n) * fit_.lambda * signs_);
    if (fit_.lambda > 0)
      for (Index k = 0; k < bS.size(); ++k)
        if (bS(k) * signs_(k) <= 0) return false;
    for (Index k = 0; k < bS.size(); ++k) out(fit_.support[static_cast<std::size_t>(k)]) = bS(k);
    const Vec corr = Xp.transpose() * (yp - XS * bS) / static_cast<double>(n);
    std::vector<bool> active(static_cast<std::size_t>(p), false);
    for (Index j : fit_.support) active[static_cast<std::size_t>(j)] = true;
    for (Index j = 0; j < p; ++j)
      if (!active[static_cast<std::size_t>(j)] && std::abs(corr(j)) > fit_.lambda) return false;
    return true;
  }

  const Fit& fit_;
  bool frozen_;
  SolverOptions opts_;
  Vec signs_;
};

}  // namespace

DebiasReport debias_theta(const Problem& problem, const Fit& fit, const Direction& dir, const RngStream& stream,
                          const DebiasOptions& opts) {
  problem.validate();
  const Mat& X = problem.X;
  const Vec& y = problem.y;
  const Index n = problem.n(), p = problem.p();
  if (fit.beta_hat.size() != p || dir.z0.size() != n || dir.a0.size() != p)
    throw std::invalid_argument("debias_theta: dimension mismatch");
  if (opts.m < 2) throw std::invalid_argument("debias_theta: m must be >= 2");
  const double a = opts.a > 0 ? opts.a : 1e-4 * (1.0 + dir.z0.norm() / std::sqrt(static_cast<double>(n)));

  DebiasReport rep;
  rep.contrast_hat = dir.a0.dot(fit.beta_hat);
  rep.z0_sq_norm = dir.z0.squaredNorm();
  rep.residual_term = dir.z0.dot(y - X * fit.beta_hat);

  // nu_hat = trace(X Q0 d beta_hat / dy) = trace(G^{-1} X_S^T (X Q0)_S).
  if (!fit.support.empty()) {
    const Mat XS = columns(X, fit.support);
    Mat G = XS.transpose() * XS;
    G.diagonal().array() += fit.gamma;
    rep.nu_hat = G.ldlt().solve(XS.transpose() * columns(dir.XQ0, fit.support)).trace();
  }

  // Without an l1 penalty the active set never changes.
  rep.frozen_support =
      fit.lambda == 0.0 || check_kkt(X, y, fit.lambda, fit.beta_hat, opts.frozen_margin_factor * a, fit.gamma).strict;
  const PerturbedSolver solver(fit, rep.frozen_support, opts.solver);
  const Vec base = dir.XQ0 * fit.beta_hat;

  // b_hat: z0 -> z0 + a w with y held fixed.
  const std::size_t m = static_cast<std::size_t>(opts.m);
  std::vector<double> h(m);
  for (std::size_t j = 0; j < m; ++j) {
    RngStream rng = stream.substream(j);
    const Vec w = sample_gaussian_vector(rng, n, 1.0);
    const Mat Xp = X + a * w * dir.a0.transpose();
    h[j] = w.dot(dir.XQ0 * solver.solve(Xp, y) - base) / a;
  }
  const Summary hb = summarize(h);
  rep.b_hat = hb.mean;
  rep.b_hat_se = hb.se;
  rep.a_hat = rep.b_hat + rep.contrast_hat * rep.nu_hat;

  const double denom = rep.z0_sq_norm - rep.nu_hat;
  if (!(denom > 0)) {
    rep.ill_posed = true;
    rep.theta_hat = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  rep.theta_hat = rep.contrast_hat + (rep.residual_term + rep.a_hat) / denom;

  if (!problem.beta) return rep;
  const Vec& beta = *problem.beta;
  const double theta = dir.a0.dot(beta);
  rep.theta = theta;
  rep.pivot = denom * (rep.theta_hat - theta);

  // trace((grad f)^2) for f(z0) = X Q0 (beta_hat - beta), where y = z0 theta +
  // X Q0 beta + eps moves with z0: E_w[w^T J (J w)] by chained differences.
  auto jvp = [&](const Vec& v) {
    const Mat Xp = X + a * v * dir.a0.transpose();
    const Vec yp = y + (a * theta) * v;
    return Vec((dir.XQ0 * solver.solve(Xp, yp) - base) / a);
  };
  std::vector<double> t(m);
  for (std::size_t j = 0; j < m; ++j) {
    RngStream rng = stream.substream(m + j);
    const Vec w = sample_gaussian_vector(rng, n, 1.0);
    t[j] = w.dot(jvp(jvp(w)));
  }
  rep.trace_grad_sq = summarize(t).mean;
  const Vec resid = X * fit.beta_hat - y - dir.z0 * dir.a0.dot(fit.beta_hat - beta);
  rep.v_star = resid.squaredNorm() + *rep.trace_grad_sq;
  return rep;
}

IdentityReport pivot_mean_check(std::span<const DebiasReport> reports) {
  std::vector<double> pivots, zeros;
  for (const auto& r : reports)
    if (r.pivot) pivots.push_back(*r.pivot);
  zeros.assign(pivots.size(), 0.0);
  return compare_paired(pivots, zeros);
}

IdentityReport pivot_variance_check(std::span<const DebiasReport> reports) {
  std::vector<double> pivots, vstar;
  for (const auto& r : reports)
    if (r.pivot && r.v_star) {
      pivots.push_back(*r.pivot);
      vstar.push_back(*r.v_star);
    }
  if (pivots.size() < 2) throw std::invalid_argument("pivot_variance_check: need simulation-mode reports");
  const double mean = summarize(pivots).mean;
  const double corr = static_cast<double>(pivots.size()) / static_cast<double>(pivots.size() - 1);
  std::vector<double> dev(pivots.size());
  for (std::size_t i = 0; i < pivots.size(); ++i) dev[i] = corr * (pivots[i] - mean) * (pivots[i] - mean);
  return compare_paired(dev, vstar);
}

}  // namespace stein
