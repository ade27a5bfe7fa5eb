#pragma once

#include "stein/core.hpp"

namespace stein {

enum class IntervalKind { two_sided_loss, upper_loss, data_driven_mean_loss, model_size_mean };

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double nominal_level = 0.0;
  IntervalKind kind = IntervalKind::two_sided_loss;

  bool contains(double v) const { return lower <= v && v <= upper; }
};

// Per-draw bound on Var(div f): min(trace((grad f)^2) + ||(grad f) z||^2 / sigma^2, 2n).
double divergence_variance_bound(double trace_grad_sq, double grad_times_z_sq_norm, double sigma, Index n);

// 3E + 4E log(e p / (E v 1)).
double model_size_variance_bound(double expected_size, Index p);

// Values of E[|S|] compatible with the observed size at level 1 - alpha.
ConfidenceInterval model_size_ci(Index observed_size, Index p, double alpha);

// v_alpha with P{|chi2_n - n| / sqrt(2n) > v_alpha} = alpha.
double chi_square_two_sided_deviation(Index n, double alpha);
// v_{-,alpha} with P{(n - chi2_n) / sqrt(2n) > v} = alpha.
double chi_square_lower_deviation(Index n, double alpha);

struct LossRegions {
  ConfidenceInterval two_sided;
  ConfidenceInterval upper;
};

// Regions for the loss ||mu_hat - mu||^2 around SURE. eps_star > 0 adds
// v0 = eps_star^{1/4} to the deviation and lowers the level by sqrt(eps_star);
// eps_star <= 0 is the asymptotic form with v0 = 0.
LossRegions loss_confidence_region(double sure_value, double sigma, Index n, double alpha, double eps_star);

double data_driven_gamma(double sure_value, double df_hat, double sigma, Index n);
double data_driven_kappa(Index n, double beta2);

// Interval for the mean loss with the data-driven surrogate of gamma_n.
ConfidenceInterval data_driven_confidence(double sure_value, double df_hat, double sigma, Index n, double alpha,
                                          double beta1, double beta2);

}  // namespace stein
