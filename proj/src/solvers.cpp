#include "stein/solvers.hpp"

#include <algorithm>
#include <cmath>

namespace stein {

template <typename Scalar>
Scalar penalized_objective(const Matrix<Scalar>& X, const Vector<Scalar>& y, const Vector<Scalar>& b, Scalar lambda,
                           Scalar gamma) {
  const Scalar n = static_cast<Scalar>(X.rows());
  return ((y - X * b).squaredNorm() + gamma * b.squaredNorm()) / (2 * n) + lambda * b.template lpNorm<1>();
}

namespace {

template <typename Scalar>
std::vector<Index> nonzeros(const Vector<Scalar>& b) {
  std::vector<Index> s;
  for (Index j = 0; j < b.size(); ++j)
    if (b(j) != Scalar(0)) s.push_back(j);
  return s;
}

// Duality gap of the problem written as a Lasso on the augmented data
// [X; sqrt(gamma) I], [y; 0] with the same 1/(2n) scaling.
template <typename Scalar>
Scalar duality_gap(const Matrix<Scalar>& X, const Vector<Scalar>& y, const Vector<Scalar>& b,
                   const Vector<Scalar>& r, Scalar lambda, Scalar gamma) {
  const Scalar n = static_cast<Scalar>(X.rows());
  const Vector<Scalar> g = (X.transpose() * r - gamma * b) / n;
  const Scalar dual_norm = g.template lpNorm<Eigen::Infinity>();
  const Scalar s = dual_norm > lambda ? lambda / dual_norm : Scalar(1);
  const Scalar bsq = b.squaredNorm();
  const Scalar primal = (r.squaredNorm() + gamma * bsq) / (2 * n) + lambda * b.template lpNorm<1>();
  const Scalar dual = (y.squaredNorm() - (y - s * r).squaredNorm() - s * s * gamma * bsq) / (2 * n);
  return std::max(Scalar(0), primal - dual);
}

template <typename Scalar>
void finalize(const Matrix<Scalar>& X, const Vector<Scalar>& y, FitResult<Scalar>& res) {
  res.mu_hat = X * res.beta_hat;
  res.residual = y - res.mu_hat;
  res.support = nonzeros(res.beta_hat);
  res.support_full_rank = true;
  if (res.support.empty()) {
    res.df_hat = res.trace_grad_sq = 0;
    return;
  }
  const Matrix<Scalar> XS = columns(X, res.support);
  if (res.kind == FitKind::lasso || res.kind == FitKind::least_squares) {
    Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(XS);
    qr.setThreshold(Scalar(1e-10));
    const Index rank = qr.rank();
    res.support_full_rank = rank == XS.cols();
    res.df_hat = res.trace_grad_sq = static_cast<Scalar>(rank);
    return;
  }
  // Eigenvalues of X_S (gamma I + X_S^T X_S)^{-1} X_S^T are d / (d + gamma).
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(XS.transpose() * XS, Eigen::EigenvaluesOnly);
  Scalar df = 0, tgs = 0;
  for (Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const Scalar d = std::max(Scalar(0), eig.eigenvalues()(i));
    const Scalar h = d / (d + res.gamma);
    df += h;
    tgs += h * h;
  }
  res.df_hat = df;
  res.trace_grad_sq = tgs;
}

// Direct solve of the stationarity system on the current support with the
// current signs. Returns false when the candidate is not an improvement.
template <typename Scalar>
bool polish_on_support(const Matrix<Scalar>& X, const Vector<Scalar>& y, Scalar lambda, Scalar gamma,
                       Vector<Scalar>& b) {
  const std::vector<Index> S = nonzeros(b);
  if (S.empty()) return false;
  const Scalar n = static_cast<Scalar>(X.rows());
  const Matrix<Scalar> XS = columns(X, S);
  const Index k = XS.cols();
  Matrix<Scalar> G = XS.transpose() * XS;
  G.diagonal().array() += gamma;
  Vector<Scalar> rhs = XS.transpose() * y;
  for (Index i = 0; i < k; ++i) rhs(i) -= n * lambda * (b(S[i]) > 0 ? Scalar(1) : Scalar(-1));
  Eigen::LDLT<Matrix<Scalar>> ldlt(G);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
  const Vector<Scalar> bS = ldlt.solve(rhs);
  if (!bS.allFinite()) return false;
  Vector<Scalar> cand = b;
  for (Index i = 0; i < k; ++i) {
    if ((bS(i) > 0) != (b(S[i]) > 0) || bS(i) == Scalar(0)) return false;
    cand(S[i]) = bS(i);
  }
  const Scalar before = penalized_objective(X, y, b, lambda, gamma);
  const Scalar after = penalized_objective(X, y, cand, lambda, gamma);
  if (after > before + Scalar(1e-13) * (Scalar(1) + std::abs(before))) return false;
  b = cand;
  return true;
}

template <typename Scalar>
FitResult<Scalar> solve_unpenalized(const Matrix<Scalar>& X, const Vector<Scalar>& y, Scalar gamma,
                                    FitResult<Scalar> res) {
  if (gamma == Scalar(0)) {
    Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(X);
    qr.setThreshold(Scalar(1e-10));
    if (qr.rank() < X.cols()) throw std::invalid_argument("fit_lasso: lambda = 0 requires X with full column rank");
    res.kind = FitKind::least_squares;
    res.beta_hat = qr.solve(y);
  } else {
    Matrix<Scalar> G = X.transpose() * X;
    G.diagonal().array() += gamma;
    res.kind = FitKind::ridge;
    res.beta_hat = G.llt().solve(X.transpose() * y);
  }
  res.converged = true;
  finalize(X, y, res);
  if (res.kind == FitKind::least_squares) res.df_hat = res.trace_grad_sq = static_cast<Scalar>(X.cols());
  return res;
}

template <typename Scalar>
FitResult<Scalar> coordinate_descent(const Matrix<Scalar>& X, const Vector<Scalar>& y, Scalar lambda, Scalar gamma,
                                     FitKind kind, const SolverOptions& opts, const Vector<Scalar>* warm_start) {
  const Index n = X.rows();
  const Index p = X.cols();
  if (y.size() != n) throw std::invalid_argument("fit: rows(X) != length(y)");
  if (!(lambda >= Scalar(0))) throw std::invalid_argument("fit: lambda must be nonnegative");
  if (!(gamma >= Scalar(0))) throw std::invalid_argument("fit: gamma must be nonnegative");

  FitResult<Scalar> res;
  res.kind = kind;
  res.lambda = lambda;
  res.gamma = gamma;
  if (lambda == Scalar(0)) return solve_unpenalized(X, y, gamma, res);

  const Scalar nn = static_cast<Scalar>(n);
  const Scalar tol = opts.tol > 0 ? Scalar(opts.tol) : Scalar(1e-10) * (Scalar(1) + y.squaredNorm() / nn);
  const Vector<Scalar> col_sq = X.colwise().squaredNorm().transpose() / nn;
  const Scalar ridge = gamma / nn;

  Vector<Scalar> b = Vector<Scalar>::Zero(p);
  if (warm_start) {
    if (warm_start->size() != p) throw std::invalid_argument("fit: warm start has wrong length");
    b = *warm_start;
  }
  Vector<Scalar> r = y - X * b;

  auto update = [&](Index j) -> Scalar {
    const Scalar denom = col_sq(j) + ridge;
    if (denom == Scalar(0)) return Scalar(0);
    const Scalar old = b(j);
    const Scalar rho = X.col(j).dot(r) / nn + col_sq(j) * old;
    const Scalar next = soft_threshold(rho, lambda) / denom;
    if (next == old) return Scalar(0);
    r.noalias() -= (next - old) * X.col(j);
    b(j) = next;
    return (next - old) * (next - old) * denom;
  };

  int iterations = 0;
  Scalar gap = duality_gap(X, y, b, r, lambda, gamma);
  bool converged = gap <= tol;
  std::vector<Index> active;
  while (!converged && iterations < opts.max_iter) {
    for (Index j = 0; j < p; ++j) update(j);
    ++iterations;
    r = y - X * b;
    gap = duality_gap(X, y, b, r, lambda, gamma);
    if (gap <= tol) {
      converged = true;
      break;
    }
    active = nonzeros(b);
    while (iterations < opts.max_iter) {
      Scalar change = 0;
      for (Index j : active) change = std::max(change, update(j));
      ++iterations;
      if (change <= Scalar(1e-3) * tol) break;
    }
  }

  if (converged && opts.polish && polish_on_support(X, y, lambda, gamma, b)) {
    const Vector<Scalar> r_new = y - X * b;
    const Scalar gap_new = duality_gap(X, y, b, r_new, lambda, gamma);
    if (gap_new <= std::max(gap, tol)) {
      r = r_new;
      gap = gap_new;
    }
  }

  // Hard-zero cleanup of negligible coordinates.
  for (Index j = 0; j < p; ++j) {
    if (b(j) != Scalar(0) && std::abs(b(j)) <= Scalar(opts.zero_threshold)) {
      const Scalar keep = b(j);
      const Scalar before = penalized_objective(X, y, b, lambda, gamma);
      b(j) = 0;
      if (penalized_objective(X, y, b, lambda, gamma) > before) b(j) = keep;
    }
  }

  res.beta_hat = b;
  res.iterations = iterations;
  res.converged = converged;
  res.duality_gap = duality_gap(X, y, b, Vector<Scalar>(y - X * b), lambda, gamma);
  finalize(X, y, res);
  return res;
}

}  // namespace

template <typename Scalar>
FitResult<Scalar> fit_lasso(const Matrix<Scalar>& X, const Vector<Scalar>& y, Scalar lambda,
                            const SolverOptions& opts, const Vector<Scalar>* warm_start) {
  return coordinate_descent<Scalar>(X, y, lambda, Scalar(0), FitKind::lasso, opts, warm_start);
}

template <typename Scalar>
FitResult<Scalar> fit_elastic_net(const Matrix<Scalar>& X, const Vector<Scalar>& y, Scalar lambda, Scalar gamma,
                                  const SolverOptions& opts, const Vector<Scalar>* warm_start) {
  if (!(gamma > Scalar(0))) throw std::invalid_argument("fit_elastic_net: gamma must be positive");
  return coordinate_descent<Scalar>(X, y, lambda, gamma, FitKind::elastic_net, opts, warm_start);
}

template <typename Scalar>
KktReport check_kkt(const Matrix<Scalar>& X, const Vector<Scalar>& y, Scalar lambda, const Vector<Scalar>& beta_hat,
                    Scalar margin, Scalar gamma) {
  if (X.rows() != y.size() || X.cols() != beta_hat.size())
    throw std::invalid_argument("check_kkt: dimension mismatch");
  if (!(lambda > Scalar(0))) throw std::invalid_argument("check_kkt: lambda must be positive");
  const Scalar n = static_cast<Scalar>(X.rows());
  const Vector<Scalar> corr = (X.transpose() * (y - X * beta_hat) - gamma * beta_hat) / (n * lambda);
  KktReport rep;
  for (Index j = 0; j < corr.size(); ++j) {
    if (beta_hat(j) == Scalar(0)) {
      rep.max_inactive_correlation = std::max<double>(rep.max_inactive_correlation, std::abs(corr(j)));
    } else {
      const Scalar sgn = beta_hat(j) > 0 ? Scalar(1) : Scalar(-1);
      rep.active_sign_error = std::max<double>(rep.active_sign_error, std::abs(corr(j) - sgn));
    }
  }
  rep.strict = rep.max_inactive_correlation <= 1.0 - margin && rep.active_sign_error <= margin;
  return rep;
}

template <typename Scalar>
Matrix<Scalar> support_basis(const Matrix<Scalar>& X, const std::vector<Index>& support) {
  if (support.empty()) return Matrix<Scalar>(X.rows(), 0);
  const Matrix<Scalar> XS = columns(X, support);
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(XS);
  qr.setThreshold(Scalar(1e-10));
  const Index rank = qr.rank();
  Matrix<Scalar> Q = qr.householderQ() * Matrix<Scalar>::Identity(X.rows(), rank);
  return Q;
}

template <typename Scalar>
Matrix<Scalar> lasso_projection(const Matrix<Scalar>& X, const FitResult<Scalar>& fit) {
  const Index n = X.rows();
  if (fit.support.empty()) return Matrix<Scalar>::Zero(n, n);
  const Matrix<Scalar> Q = support_basis(X, fit.support);
  if (Q.cols() < static_cast<Index>(fit.support.size()))
    throw std::invalid_argument("lasso_projection: X_S is rank deficient");
  return Q * Q.transpose();
}

template <typename Scalar>
SvtResult<Scalar> svt(const Matrix<Scalar>& Y, Scalar lambda) {
  if (!(lambda >= Scalar(0))) throw std::invalid_argument("svt: lambda must be nonnegative");
  Eigen::BDCSVD<Matrix<Scalar>> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("svt: SVD failed");
  SvtResult<Scalar> out;
  const Vector<Scalar>& s = svd.singularValues();
  out.singular_values = s;
  const Vector<Scalar> shrunk = (s.array() - lambda).max(Scalar(0)).matrix();
  out.value = svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();

  const Index k = s.size();
  const Scalar dim_gap = static_cast<Scalar>(std::abs(Y.rows() - Y.cols()));
  const Scalar smax = k > 0 ? s(0) : Scalar(0);
  Scalar df = 0;
  for (Index i = 0; i < k; ++i) {
    if (!(s(i) > lambda)) continue;
    df += Scalar(1) + dim_gap * (Scalar(1) - lambda / s(i));
    for (Index j = 0; j < k; ++j) {
      if (j == i) continue;
      if (std::abs(s(i) - s(j)) < Scalar(1e-12) * smax) {
        out.degenerate = true;
        continue;
      }
      df += Scalar(2) * s(i) * (s(i) - lambda) / (s(i) * s(i) - s(j) * s(j));
    }
  }
  out.df = df;
  return out;
}

template double penalized_objective<double>(const Mat&, const Vec&, const Vec&, double, double);
template Fit fit_lasso<double>(const Mat&, const Vec&, double, const SolverOptions&, const Vec*);
template Fit fit_elastic_net<double>(const Mat&, const Vec&, double, double, const SolverOptions&, const Vec*);
template KktReport check_kkt<double>(const Mat&, const Vec&, double, const Vec&, double, double);
template Mat lasso_projection<double>(const Mat&, const Fit&);
template Mat support_basis<double>(const Mat&, const std::vector<Index>&);
template SvtResult<double> svt<double>(const Mat&, double);

}  // namespace stein
