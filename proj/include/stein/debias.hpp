#pragma once

#include <optional>
#include <span>

#include "stein/identities.hpp"
#include "stein/solvers.hpp"

namespace stein {

// Contrast direction with <a0, Sigma^{-1} a0> = 1, u0 = Sigma^{-1} a0,
// z0 = X u0 and Q0 = I - u0 a0^T, so X = z0 a0^T + X Q0.
struct Direction {
  Vec a0;
  Vec u0;
  Vec z0;
  Mat Q0;
  Mat XQ0;
};

Direction direction_setup(const Vec& a0_raw, const Mat& Sigma, const Mat& X);

struct DebiasOptions {
  Index m = 100;      // probes for b_hat and the trace term
  double a = 0.0;     // 0 picks 1e-4 (1 + ||z0|| / sqrt(n))
  double frozen_margin_factor = 10.0;
  SolverOptions solver;
};

struct DebiasReport {
  double theta_hat = 0.0;
  double nu_hat = 0.0;
  double a_hat = 0.0;
  double b_hat = 0.0;
  double b_hat_se = 0.0;
  double contrast_hat = 0.0;  // <a0, beta_hat>
  double z0_sq_norm = 0.0;
  double residual_term = 0.0;  // z0^T (y - X beta_hat)
  bool ill_posed = false;      // ||z0||^2 - nu_hat <= 0
  bool frozen_support = false;
  // Simulation mode only (beta known).
  std::optional<double> theta;
  std::optional<double> pivot;         // (||z0||^2 - nu_hat)(theta_hat - theta)
  std::optional<double> v_star;        // ||X beta_hat - y - z0 a0^T (beta_hat - beta)||^2 + trace term
  std::optional<double> trace_grad_sq; // Monte Carlo trace((grad f)^2)
};

// De-biased estimate of <a0, beta> from a Lasso or elastic-net fit of
// problem. Probe j of b_hat uses stream.substream(j); the trace term uses
// stream.substream(m + j). problem.beta switches on simulation mode.
DebiasReport debias_theta(const Problem& problem, const Fit& fit, const Direction& dir, const RngStream& stream,
                          const DebiasOptions& opts = {});

// Pivot mean against 0, paired per report.
IdentityReport pivot_mean_check(std::span<const DebiasReport> reports);

// Empirical variance of the pivot against the mean of v_star.
IdentityReport pivot_variance_check(std::span<const DebiasReport> reports);

}  // namespace stein
