#include "stein/fields.hpp"

#include <cmath>

namespace stein {

double finite_difference_step(const Vec& z) {
  return 1e-5 * (1.0 + z.norm() / std::sqrt(static_cast<double>(z.size())));
}

Mat VectorField::jacobian(const Vec& z) const {
  const Index n = z.size();
  const double h = finite_difference_step(z);
  Mat J(n, n);
  Vec zp = z;
  for (Index j = 0; j < n; ++j) {
    zp(j) = z(j) + h;
    const Vec up = value(zp);
    zp(j) = z(j) - h;
    const Vec down = value(zp);
    zp(j) = z(j);
    J.col(j) = (up - down) / (2.0 * h);
  }
  return J;
}

FieldValue VectorField::evaluate(const Vec& z) const {
  const Mat J = jacobian(z);
  return {value(z), J.trace(), (J * J).trace()};
}

Vec ScalarField::gradient(const Vec& z) const {
  const double h = finite_difference_step(z);
  Vec g(z.size());
  Vec zp = z;
  for (Index j = 0; j < z.size(); ++j) {
    zp(j) = z(j) + h;
    const double up = value(zp);
    zp(j) = z(j) - h;
    const double down = value(zp);
    zp(j) = z(j);
    g(j) = (up - down) / (2.0 * h);
  }
  return g;
}

FieldValue IdentityField::evaluate(const Vec& z) const {
  const double n = static_cast<double>(dim());
  return {z, n, n};
}

FieldValue ConstantField::evaluate(const Vec&) const { return {c_, 0.0, 0.0}; }

LinearField::LinearField(Mat A) : VectorField(A.rows()), A_(std::move(A)) {
  if (A_.rows() != A_.cols()) throw std::invalid_argument("LinearField: A must be square");
  trace_ = A_.trace();
  trace_sq_ = (A_ * A_).trace();
}

FieldValue LinearField::evaluate(const Vec& z) const { return {A_ * z, trace_, trace_sq_}; }

Mat SoftThresholdField::jacobian(const Vec& z) const {
  return (z.array().abs() > t_).cast<double>().matrix().asDiagonal();
}

FieldValue SoftThresholdField::evaluate(const Vec& z) const {
  const double active = static_cast<double>((z.array().abs() > t_).count());
  return {value(z), active, active};
}

ResidualField::ResidualField(Mat X, Vec beta, double lambda, double gamma, SolverOptions opts)
    : VectorField(X.rows()), X_(std::move(X)), lambda_(lambda), gamma_(gamma), opts_(opts) {
  if (beta.size() != X_.cols()) throw std::invalid_argument("ResidualField: beta has wrong length");
  mean_ = X_ * beta;
}

Fit ResidualField::fit(const Vec& z) const {
  const Vec y = mean_ + z;
  return gamma_ > 0 ? fit_elastic_net(X_, y, lambda_, gamma_, opts_) : fit_lasso(X_, y, lambda_, opts_);
}

Vec ResidualField::value(const Vec& z) const { return fit(z).residual; }

Mat ResidualField::jacobian(const Vec& z) const {
  const Fit f = fit(z);
  return Mat::Identity(dim(), dim()) - fitted_mean_jacobian(X_, f);
}

FieldValue ResidualField::evaluate(const Vec& z) const {
  const Fit f = fit(z);
  const double n = static_cast<double>(dim());
  // grad = I - H: trace = n - df, trace of the square = n - 2 df + trace(H^2).
  return {f.residual, n - f.df_hat, n - 2.0 * f.df_hat + f.trace_grad_sq};
}

Mat fitted_mean_jacobian(const Mat& X, const Fit& fit) {
  const Index n = X.rows();
  if (fit.support.empty()) return Mat::Zero(n, n);
  if (fit.kind == FitKind::lasso || fit.kind == FitKind::least_squares) {
    const Mat Q = support_basis(X, fit.support);
    return Q * Q.transpose();
  }
  const Mat XS = columns(X, fit.support);
  Mat G = XS.transpose() * XS;
  G.diagonal().array() += fit.gamma;
  return XS * G.llt().solve(XS.transpose());
}

}  // namespace stein
