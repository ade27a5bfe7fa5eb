#include "stein/divergence_mc.hpp"

#include <cmath>

namespace stein {

PenalizedFitMap::PenalizedFitMap(std::shared_ptr<const Mat> X, double lambda, double gamma, SolverOptions opts)
    : X_(std::move(X)), lambda_(lambda), gamma_(gamma), opts_(opts) {
  if (!X_) throw std::invalid_argument("PenalizedFitMap: null design");
  if (lambda < 0 || gamma < 0) throw std::invalid_argument("PenalizedFitMap: penalties must be nonnegative");
}

Fit PenalizedFitMap::fit(const Vec& y) const {
  if (y.size() != X_->rows()) throw std::invalid_argument("PenalizedFitMap: y has the wrong length");
  Fit f = gamma_ > 0 ? fit_elastic_net<double>(*X_, y, lambda_, gamma_, opts_, warm_.get())
                     : fit_lasso<double>(*X_, y, lambda_, opts_, warm_.get());
  if (!f.converged) throw NumericError("PenalizedFitMap: solver did not converge");
  return f;
}

MapEvaluation PenalizedFitMap::evaluate(const Vec& y) const {
  Fit f = fit(y);
  return {std::move(f.mu_hat), f.df_hat};
}

PenalizedFitMap PenalizedFitMap::anchored(const Vec& y) const {
  PenalizedFitMap out = *this;
  out.warm_ = std::make_shared<const Vec>(fit(y).beta_hat);
  return out;
}

SvtMap::SvtMap(Index q, Index n, double lambda) : q_(q), n_(n), lambda_(lambda) {
  if (q < 1 || n < 1) throw std::invalid_argument("SvtMap: dimensions must be positive");
  if (lambda < 0) throw std::invalid_argument("SvtMap: lambda must be nonnegative");
}

MapEvaluation SvtMap::evaluate(const Vec& y) const {
  if (y.size() != q_ * n_) throw std::invalid_argument("SvtMap: y has the wrong length");
  const auto res = svt<double>(Eigen::Map<const Mat>(y.data(), q_, n_), lambda_);
  return {Eigen::Map<const Vec>(res.value.data(), q_ * n_), res.df};
}

std::vector<std::pair<Index, double>> DfTable::sd_ratios() const {
  std::vector<std::pair<Index, double>> out;
  for (const auto& r : rows)
    for (const auto& s : rows)
      if (s.m == 4 * r.m) out.emplace_back(r.m, r.sd / s.sd);
  return out;
}

DfTableConfig DfTableConfig::svt_default() { return {}; }

DfTableConfig DfTableConfig::elastic_net_default() {
  DfTableConfig c;
  c.estimator = DfEstimator::elastic_net;
  c.n = 500;
  c.p = 400;
  const double base = std::sqrt(4.0 * std::log(static_cast<double>(c.p)) / static_cast<double>(c.n));
  c.lambda = 0.8 * base;
  // Ridge weight in the gamma ||b||^2 / (2n) convention, i.e. n times 0.2 base.
  c.gamma = static_cast<double>(c.n) * 0.2 * base;
  c.s0 = 50;
  c.a = 1e-3;
  c.m_grid = {10, 25, 40, 100, 250};
  return c;
}

DfTable df_table_experiment(const DfTableConfig& c) {
  RngStream data = RngStream(c.seed, 0).substream(0);
  const RngStream probes(c.seed, 1);
  McOptions opts;
  opts.a = c.a;
  opts.threads = c.threads;
  if (c.estimator == DfEstimator::svt) {
    const Index q = c.p, n = c.n;
    if (c.rank > std::min(q, n)) throw std::invalid_argument("df_table_experiment: rank exceeds dimensions");
    Mat A(q, c.rank), B(n, c.rank);
    for (Index j = 0; j < c.rank; ++j) {
      A.col(j) = sample_gaussian_vector(data, q, 1.0);
      B.col(j) = sample_gaussian_vector(data, n, 1.0);
    }
    const Mat Y = A * B.transpose() + Eigen::Map<const Mat>(sample_gaussian_vector(data, q * n, 1.0).data(), q, n);
    const Vec y = Eigen::Map<const Vec>(Y.data(), q * n);
    const SvtMap f(q, n, c.lambda);
    DfTable t = df_table(f, y, *f.evaluate(y).divergence, c.m_grid, c.n_real, probes, opts);
    t.estimator = "svt";
    return t;
  }
  if (!(c.gamma > 0)) throw std::invalid_argument("df_table_experiment: elastic net needs gamma > 0");
  if (c.s0 > c.p) throw std::invalid_argument("df_table_experiment: s0 exceeds p");
  // Symmetric +-1 design.
  auto X = std::make_shared<Mat>(c.n, c.p);
  for (Index i = 0; i < c.n; ++i)
    for (Index j = 0; j < c.p; ++j) (*X)(i, j) = (data() >> 63) ? 1.0 : -1.0;
  Vec beta = Vec::Zero(c.p);
  beta.head(c.s0).setOnes();
  const Vec y = *X * beta + sample_gaussian_vector(data, c.n, 1.0);
  const PenalizedFitMap f(X, c.lambda, c.gamma);
  DfTable t = df_table(f, y, *f.evaluate(y).divergence, c.m_grid, c.n_real, probes, opts);
  t.estimator = "elastic_net";
  return t;
}

}  // namespace stein
