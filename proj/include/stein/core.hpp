#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include "stein/rng.hpp"

namespace stein {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = Vector<double>;
using Mat = Matrix<double>;

// Raised when an iterative numeric routine fails to converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear model y = X beta + eps with eps ~ N(0, sigma^2 I).
template <typename Scalar>
struct RegressionProblem {
  Matrix<Scalar> X;
  Vector<Scalar> y;
  std::optional<Vector<Scalar>> beta;
  Scalar sigma = Scalar(1);

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }

  // Exact nonzero count of beta; 0 when beta is unknown.
  Index s0() const {
    if (!beta) return 0;
    Index count = 0;
    for (Index j = 0; j < beta->size(); ++j) count += ((*beta)(j) != Scalar(0));
    return count;
  }

  void validate() const {
    if (X.rows() != y.size()) throw std::invalid_argument("RegressionProblem: rows(X) != length(y)");
    if (beta && beta->size() != X.cols())
      throw std::invalid_argument("RegressionProblem: cols(X) != length(beta)");
    if (!(sigma > Scalar(0))) throw std::invalid_argument("RegressionProblem: sigma must be positive");
  }
};

using Problem = RegressionProblem<double>;

// Gaussian sequence model y = mu + eps.
template <typename Scalar>
struct SequenceModel {
  Vector<Scalar> mu;
  Scalar sigma = Scalar(1);
  Vector<Scalar> y;

  void validate() const {
    if (mu.size() != y.size()) throw std::invalid_argument("SequenceModel: length(mu) != length(y)");
    if (!(sigma > Scalar(0))) throw std::invalid_argument("SequenceModel: sigma must be positive");
  }
};

// n independent N(0, sigma^2) draws; advances the stream.
Vec sample_gaussian_vector(RngStream& stream, Index n, double sigma = 1.0);

// n x p matrix with iid N(0, Sigma) rows via the Cholesky factor of Sigma.
Mat gaussian_design(RngStream& stream, Index n, Index p, const Mat& Sigma);

// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
double chi_square_cdf(double df, double x);
double chi_square_quantile(double df, double prob);
double normal_cdf(double x);

}  // namespace stein
