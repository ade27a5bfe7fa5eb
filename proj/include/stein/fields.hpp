#pragma once

#include <functional>
#include <memory>
#include <string>

#include "stein/solvers.hpp"

namespace stein {

struct FieldValue {
  Vec f;
  double divergence = 0.0;
  double trace_jac_sq = 0.0;  // trace((grad f)^2)
};

// A map R^n -> R^n with access to its Jacobian. Subclasses override
// jacobian() or evaluate() when an analytic form exists; the defaults use
// central differences with step 1e-5 (1 + ||z|| / sqrt(n)).
class VectorField {
 public:
  explicit VectorField(Index dim) : dim_(dim) {}
  virtual ~VectorField() = default;

  Index dim() const { return dim_; }
  virtual std::string name() const = 0;
  virtual Vec value(const Vec& z) const = 0;
  virtual Mat jacobian(const Vec& z) const;
  virtual FieldValue evaluate(const Vec& z) const;

 private:
  Index dim_;
};

class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual double value(const Vec& z) const = 0;
  virtual Vec gradient(const Vec& z) const;
};

class IdentityField final : public VectorField {
 public:
  explicit IdentityField(Index n) : VectorField(n) {}
  std::string name() const override { return "identity"; }
  Vec value(const Vec& z) const override { return z; }
  Mat jacobian(const Vec&) const override { return Mat::Identity(dim(), dim()); }
  FieldValue evaluate(const Vec& z) const override;
};

class ConstantField final : public VectorField {
 public:
  explicit ConstantField(Vec c) : VectorField(c.size()), c_(std::move(c)) {}
  std::string name() const override { return "constant"; }
  Vec value(const Vec&) const override { return c_; }
  Mat jacobian(const Vec&) const override { return Mat::Zero(dim(), dim()); }
  FieldValue evaluate(const Vec& z) const override;

 private:
  Vec c_;
};

class LinearField final : public VectorField {
 public:
  explicit LinearField(Mat A);
  std::string name() const override { return "linear"; }
  Vec value(const Vec& z) const override { return A_ * z; }
  Mat jacobian(const Vec&) const override { return A_; }
  FieldValue evaluate(const Vec& z) const override;

 private:
  Mat A_;
  double trace_ = 0.0;
  double trace_sq_ = 0.0;
};

class SoftThresholdField final : public VectorField {
 public:
  SoftThresholdField(Index n, double t) : VectorField(n), t_(t) {}
  std::string name() const override { return "soft_threshold"; }
  Vec value(const Vec& z) const override { return soft_threshold(z, t_); }
  Mat jacobian(const Vec& z) const override;
  FieldValue evaluate(const Vec& z) const override;

 private:
  double t_;
};

// z -> y - X beta_hat(y) with y = X beta + z: the Lasso (gamma = 0) or
// elastic-net residual map. Its Jacobian is I - H with H the fitted-mean
// Jacobian.
class ResidualField final : public VectorField {
 public:
  ResidualField(Mat X, Vec beta, double lambda, double gamma = 0.0, SolverOptions opts = {});
  std::string name() const override { return gamma_ > 0 ? "enet_residual" : "lasso_residual"; }
  Vec value(const Vec& z) const override;
  Mat jacobian(const Vec& z) const override;
  FieldValue evaluate(const Vec& z) const override;
  Fit fit(const Vec& z) const;

 private:
  Mat X_;
  Vec mean_;
  double lambda_;
  double gamma_;
  SolverOptions opts_;
};

// Wraps a callable; derivatives by finite differences.
class FunctionField final : public VectorField {
 public:
  FunctionField(Index n, std::string name, std::function<Vec(const Vec&)> fn)
      : VectorField(n), name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  Vec value(const Vec& z) const override { return fn_(z); }

 private:
  std::string name_;
  std::function<Vec(const Vec&)> fn_;
};

// Fitted-mean Jacobian X_S (gamma I + X_S^T X_S)^{-1} X_S^T of a fit.
Mat fitted_mean_jacobian(const Mat& X, const Fit& fit);

double finite_difference_step(const Vec& z);

}  // namespace stein
