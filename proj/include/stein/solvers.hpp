#pragma once

#include <vector>

#include "stein/core.hpp"

namespace stein {

enum class FitKind { lasso, elastic_net, least_squares, ridge };

// Result of a penalized least-squares fit. df_hat is the divergence of
// y -> X beta_hat and trace_grad_sq is trace((grad mu_hat)^2).
template <typename Scalar>
struct FitResult {
  FitKind kind = FitKind::lasso;
  Vector<Scalar> beta_hat;
  Vector<Scalar> mu_hat;
  Vector<Scalar> residual;
  std::vector<Index> support;
  Scalar df_hat = 0;
  Scalar trace_grad_sq = 0;
  Scalar lambda = 0;
  Scalar gamma = 0;
  Scalar duality_gap = 0;
  int iterations = 0;
  bool converged = false;
  // rank(X_S) == |S|; when false df_hat holds rank(X_S).
  bool support_full_rank = true;
};

using Fit = FitResult<double>;

struct SolverOptions {
  // Duality-gap tolerance; values <= 0 select 1e-10 (1 + ||y||^2 / n).
  double tol = 0.0;
  int max_iter = 100000;
  // Re-solve the KKT system on the detected support once CD has converged.
  bool polish = true;
  double zero_threshold = 1e-12;
};

struct KktReport {
  double max_inactive_correlation = 0.0;
  double active_sign_error = 0.0;
  bool strict = false;
};

// Objective (||y - Xb||^2 + gamma ||b||^2) / (2n) + lambda ||b||_1.
template <typename Scalar>
Scalar penalized_objective(const Matrix<Scalar>& X, const Vector<Scalar>& y, const Vector<Scalar>& b, Scalar lambda,
                           Scalar gamma = Scalar(0));

// Lasso: minimizes ||Xb - y||^2 / (2n) + lambda ||b||_1 by cyclic coordinate
// descent. warm_start, when given, initializes b.
template <typename Scalar>
FitResult<Scalar> fit_lasso(const Matrix<Scalar>& X, const Vector<Scalar>& y, Scalar lambda,
                            const SolverOptions& opts = {}, const Vector<Scalar>* warm_start = nullptr);

template <typename Scalar>
FitResult<Scalar> fit_lasso(const RegressionProblem<Scalar>& problem, Scalar lambda, const SolverOptions& opts = {}) {
  problem.validate();
  return fit_lasso<Scalar>(problem.X, problem.y, lambda, opts);
}

// Elastic net with ridge term gamma ||b||^2 / (2n), so that the fitted-mean
// Jacobian is X_S (gamma I + X_S^T X_S)^{-1} X_S^T.
template <typename Scalar>
FitResult<Scalar> fit_elastic_net(const Matrix<Scalar>& X, const Vector<Scalar>& y, Scalar lambda, Scalar gamma,
                                  const SolverOptions& opts = {}, const Vector<Scalar>* warm_start = nullptr);

template <typename Scalar>
FitResult<Scalar> fit_elastic_net(const RegressionProblem<Scalar>& problem, Scalar lambda, Scalar gamma,
                                  const SolverOptions& opts = {}) {
  problem.validate();
  return fit_elastic_net<Scalar>(problem.X, problem.y, lambda, gamma, opts);
}

// KKT diagnostics with correlations (x_j^T r - gamma b_j) / (n lambda).
template <typename Scalar>
KktReport check_kkt(const Matrix<Scalar>& X, const Vector<Scalar>& y, Scalar lambda, const Vector<Scalar>& beta_hat,
                    Scalar margin, Scalar gamma = Scalar(0));

template <typename Scalar>
KktReport check_kkt(const RegressionProblem<Scalar>& problem, Scalar lambda, const Vector<Scalar>& beta_hat,
                    Scalar margin) {
  return check_kkt<Scalar>(problem.X, problem.y, lambda, beta_hat, margin);
}

// Orthogonal projection onto span(X_S). Throws if X_S is rank deficient.
template <typename Scalar>
Matrix<Scalar> lasso_projection(const Matrix<Scalar>& X, const FitResult<Scalar>& fit);

template <typename Scalar>
Matrix<Scalar> lasso_projection(const RegressionProblem<Scalar>& problem, const FitResult<Scalar>& fit) {
  return lasso_projection<Scalar>(problem.X, fit);
}

// Orthonormal basis of span(X_S) (n x rank).
template <typename Scalar>
Matrix<Scalar> support_basis(const Matrix<Scalar>& X, const std::vector<Index>& support);

template <typename Scalar>
Matrix<Scalar> columns(const Matrix<Scalar>& X, const std::vector<Index>& idx) {
  Matrix<Scalar> out(X.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = X.col(idx[k]);
  return out;
}

template <typename Scalar>
inline Scalar soft_threshold(Scalar v, Scalar t) {
  return v > t ? v - t : (v < -t ? v + t : Scalar(0));
}

// Componentwise soft-thresholding as a lazy Eigen expression.
template <typename Derived>
auto soft_threshold(const Eigen::MatrixBase<Derived>& y, typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  if (t < Scalar(0)) throw std::invalid_argument("soft_threshold: t must be nonnegative");
  return y.derived().unaryExpr([t](Scalar v) { return soft_threshold<Scalar>(v, t); });
}

template <typename Scalar>
struct SvtResult {
  Matrix<Scalar> value;
  Vector<Scalar> singular_values;
  Scalar df = 0;
  // Set when some pair of singular values was too close for the cross term.
  bool degenerate = false;
};

// Singular value soft-thresholding with its exact degrees of freedom.
template <typename Scalar>
SvtResult<Scalar> svt(const Matrix<Scalar>& Y, Scalar lambda);

extern template double penalized_objective<double>(const Mat&, const Vec&, const Vec&, double, double);
extern template Fit fit_lasso<double>(const Mat&, const Vec&, double, const SolverOptions&, const Vec*);
extern template Fit fit_elastic_net<double>(const Mat&, const Vec&, double, double, const SolverOptions&, const Vec*);
extern template KktReport check_kkt<double>(const Mat&, const Vec&, double, const Vec&, double, double);
extern template Mat lasso_projection<double>(const Mat&, const Fit&);
extern template Mat support_basis<double>(const Mat&, const std::vector<Index>&);
extern template SvtResult<double> svt<double>(const Mat&, double);

}  // namespace stein
