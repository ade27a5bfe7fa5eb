#pragma once

#include <optional>

#include "stein/solvers.hpp"

namespace stein {

template <typename Scalar>
struct SureReportT {
  Scalar sure = 0;
  Scalar r_hat = 0;           // unbiased estimate of E[(SURE - loss)^2]
  Scalar r_prime = 0;         // upper-bound variant 2 sigma^2 (||y - mu_hat||^2 + SURE)
  Scalar r_double_prime = 0;  // (3/4) r_prime + (1/4) r_hat - sigma^4 df
  Scalar sigma = 1;
  Index n = 0;
};

using SureReport = SureReportT<double>;

// ||y - mu_hat||^2 + 2 sigma^2 df - sigma^2 n.
template <typename D1, typename D2>
typename D1::Scalar sure(const Eigen::MatrixBase<D1>& mu_hat, const Eigen::MatrixBase<D2>& y,
                         typename D1::Scalar df_hat, typename D1::Scalar sigma) {
  using Scalar = typename D1::Scalar;
  if (mu_hat.size() != y.size()) throw std::invalid_argument("sure: length mismatch");
  if (!(sigma > Scalar(0))) throw std::invalid_argument("sure: sigma must be positive");
  const Scalar s2 = sigma * sigma;
  return (y - mu_hat).squaredNorm() + 2 * s2 * df_hat - s2 * static_cast<Scalar>(y.size());
}

template <typename D1, typename D2>
SureReportT<typename D1::Scalar> sure_for_sure(const Eigen::MatrixBase<D1>& mu_hat, const Eigen::MatrixBase<D2>& y,
                                               typename D1::Scalar df_hat, typename D1::Scalar trace_grad_sq,
                                               typename D1::Scalar sigma) {
  using Scalar = typename D1::Scalar;
  if (trace_grad_sq < Scalar(0)) throw std::invalid_argument("sure_for_sure: trace_grad_sq must be nonnegative");
  SureReportT<Scalar> rep;
  rep.sigma = sigma;
  rep.n = y.size();
  rep.sure = sure(mu_hat, y, df_hat, sigma);
  const Scalar rss = (y - mu_hat).squaredNorm();
  const Scalar s2 = sigma * sigma;
  const Scalar s4 = s2 * s2;
  const Scalar n = static_cast<Scalar>(rep.n);
  rep.r_hat = 4 * s2 * rss + 4 * s4 * trace_grad_sq - 2 * s4 * n;
  rep.r_prime = 2 * s2 * (rss + rep.sure);
  rep.r_double_prime = Scalar(0.75) * rep.r_prime + Scalar(0.25) * rep.r_hat - s4 * df_hat;
  return rep;
}

template <typename Scalar>
SureReportT<Scalar> sure_for_sure(const FitResult<Scalar>& fit, const Vector<Scalar>& y, Scalar sigma) {
  return sure_for_sure(fit.mu_hat, y, fit.df_hat, fit.trace_grad_sq, sigma);
}

struct SureDiff {
  double sure_diff = 0.0;
  // Unbiased estimate of E[(sure_diff - loss difference)^2]; empty when the
  // cross trace of the two gradients is unknown.
  std::optional<double> r_hat_diff;
};

// Difference of the two fits' SURE, with r_hat_diff from a caller-supplied
// trace((grad mu_hat_1 - grad mu_hat_2)^2).
SureDiff sure_diff(const Fit& fit1, const Fit& fit2, const Vec& y, double sigma, double trace_grad_diff_sq);

// Without a cross trace: r_hat_diff is filled only when it is known to be 0
// (two Lasso fits with the same support); otherwise left empty.
SureDiff sure_diff(const Fit& fit1, const Fit& fit2, const Vec& y, double sigma);

// Lasso pairs: the cross trace is trace((P_S1 - P_S2)^2), computed from X.
SureDiff sure_diff_lasso(const Mat& X, const Fit& fit1, const Fit& fit2, const Vec& y, double sigma);

// trace((P_A - P_B)^2) for the projections onto span(X_A) and span(X_B).
double projection_diff_trace_sq(const Mat& X, const std::vector<Index>& A, const std::vector<Index>& B);

}  // namespace stein
