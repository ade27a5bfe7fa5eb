#include "stein/sure.hpp"

namespace stein {

SureDiff sure_diff(const Fit& fit1, const Fit& fit2, const Vec& y, double sigma, double trace_grad_diff_sq) {
  SureDiff out = sure_diff(fit1, fit2, y, sigma);
  if (trace_grad_diff_sq < 0) throw std::invalid_argument("sure_diff: trace must be nonnegative");
  const double s2 = sigma * sigma;
  out.r_hat_diff = 4 * s2 * (fit1.mu_hat - fit2.mu_hat).squaredNorm() + 4 * s2 * s2 * trace_grad_diff_sq;
  return out;
}

SureDiff sure_diff(const Fit& fit1, const Fit& fit2, const Vec& y, double sigma) {
  if (fit1.mu_hat.size() != y.size() || fit2.mu_hat.size() != y.size())
    throw std::invalid_argument("sure_diff: fits must share y");
  if (!(sigma > 0)) throw std::invalid_argument("sure_diff: sigma must be positive");
  const double s2 = sigma * sigma;
  SureDiff out;
  out.sure_diff = (fit1.mu_hat - y).squaredNorm() - (fit2.mu_hat - y).squaredNorm() +
                  2 * s2 * (fit1.df_hat - fit2.df_hat);
  const bool lasso_pair = fit1.kind == FitKind::lasso && fit2.kind == FitKind::lasso;
  if (lasso_pair && fit1.support == fit2.support)
    out.r_hat_diff = 4 * s2 * (fit1.mu_hat - fit2.mu_hat).squaredNorm();
  return out;
}

double projection_diff_trace_sq(const Mat& X, const std::vector<Index>& A, const std::vector<Index>& B) {
  const Mat QA = support_basis(X, A);
  const Mat QB = support_basis(X, B);
  const double cross = (QA.cols() > 0 && QB.cols() > 0) ? (QA.transpose() * QB).squaredNorm() : 0.0;
  return std::max(0.0, static_cast<double>(QA.cols() + QB.cols()) - 2.0 * cross);
}

SureDiff sure_diff_lasso(const Mat& X, const Fit& fit1, const Fit& fit2, const Vec& y, double sigma) {
  if (fit1.kind != FitKind::lasso || fit2.kind != FitKind::lasso)
    throw std::invalid_argument("sure_diff_lasso: both fits must be Lasso fits");
  return sure_diff(fit1, fit2, y, sigma, projection_diff_trace_sq(X, fit1.support, fit2.support));
}

}  // namespace stein
