#pragma once

#include <atomic>
#include <cmath>
#include <concepts>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stein/solvers.hpp"
#include "stein/stats.hpp"

namespace stein {

// Any callable y -> f(y) on R^n.
template <typename F>
concept VectorMap = requires(const F& f, const Vec& y) {
  { f(y) } -> std::convertible_to<Vec>;
};

struct MapEvaluation {
  Vec value;
  std::optional<double> divergence;
};

// Maps that can also report their exact divergence at a point.
template <typename F>
concept EvaluatingMap = VectorMap<F> && requires(const F& f, const Vec& y) {
  { f.evaluate(y) } -> std::same_as<MapEvaluation>;
};

// Maps that hand out a copy warm-started at the solution for y.
template <typename F>
concept AnchoredMap = VectorMap<F> && requires(const F& f, const Vec& y) {
  { f.anchored(y) } -> VectorMap;
};

struct DivergenceEstimate {
  double value = 0.0;           // m^{-1} sum_j z_j^T h(z_j)
  std::optional<double> dbar;   // m^{-1} sum_j div f(y + a z_j), when available
  Index m = 0;
  double a = 0.0;
  double se_bound = 0.0;        // 2 sqrt(n / m), valid for 1-Lipschitz maps
  double empirical_se = 0.0;
};

struct McOptions {
  double a = 0.0;          // 0 picks default_perturbation_step(y)
  bool two_sided = false;  // h(z) = (f(y + a z) - f(y - a z)) / (2a)
  unsigned threads = 0;
};

inline double default_perturbation_step(const Vec& y) {
  return 1e-4 * (1.0 + y.norm() / std::sqrt(static_cast<double>(y.size())));
}

// Monte Carlo divergence of f at y. Probe j draws z_j from stream.substream(j).
template <VectorMap F>
DivergenceEstimate mc_divergence(const F& f, const Vec& y, Index m, const RngStream& stream,
                                 const McOptions& opts = {}) {
  if (m < 1) throw std::invalid_argument("mc_divergence: m must be >= 1");
  if (opts.a < 0) throw std::invalid_argument("mc_divergence: a must be positive");
  const Index n = y.size();
  const double a = opts.a > 0 ? opts.a : default_perturbation_step(y);

  Vec fy;
  if constexpr (EvaluatingMap<F>) fy = f.evaluate(y).value;
  else fy = f(y);
  if (fy.size() != n) throw std::invalid_argument("mc_divergence: f must map R^n to R^n");

  auto run = [&](const auto& g) {
    std::vector<double> t(static_cast<std::size_t>(m));
    std::vector<double> div(static_cast<std::size_t>(m), 0.0);
    std::atomic<bool> have_div = true;
    parallel_for(t.size(), [&](std::size_t j) {
      try {
        RngStream rng = stream.substream(j);
        const Vec z = sample_gaussian_vector(rng, n, 1.0);
        const Vec up = y + a * z;
        Vec fu;
        if constexpr (EvaluatingMap<std::decay_t<decltype(g)>>) {
          MapEvaluation e = g.evaluate(up);
          fu = std::move(e.value);
          if (e.divergence) div[j] = *e.divergence;
          else have_div.store(false);
        } else {
          fu = g(up);
          have_div.store(false);
        }
        if (opts.two_sided) t[j] = z.dot(fu - g(Vec(y - a * z))) / (2.0 * a);
        else t[j] = z.dot(fu - fy) / a;
      } catch (const std::exception& e) {
        throw std::runtime_error("mc_divergence: perturbation " + std::to_string(j) + ": " + e.what());
      }
    }, opts.threads);
    DivergenceEstimate est;
    const Summary s = summarize(t);
    est.value = s.mean;
    est.empirical_se = m > 1 ? s.se : 0.0;
    if (have_div.load()) est.dbar = summarize(div).mean;
    est.m = m;
    est.a = a;
    est.se_bound = 2.0 * std::sqrt(static_cast<double>(n) / static_cast<double>(m));
    return est;
  };
  if constexpr (AnchoredMap<F>) return run(f.anchored(y));
  else return run(f);
}

// y -> X beta_hat(y) for the Lasso (gamma = 0) or the elastic net. Anchoring
// shares beta_hat(y) as a read-only warm start.
class PenalizedFitMap {
 public:
  PenalizedFitMap(std::shared_ptr<const Mat> X, double lambda, double gamma = 0.0, SolverOptions opts = {});

  Vec operator()(const Vec& y) const { return fit(y).mu_hat; }
  MapEvaluation evaluate(const Vec& y) const;
  PenalizedFitMap anchored(const Vec& y) const;
  Fit fit(const Vec& y) const;

 private:
  std::shared_ptr<const Mat> X_;
  double lambda_;
  double gamma_;
  SolverOptions opts_;
  std::shared_ptr<const Vec> warm_;
};

// Singular value thresholding on the column-major reshape of y into q x n.
class SvtMap {
 public:
  SvtMap(Index q, Index n, double lambda);

  Vec operator()(const Vec& y) const { return evaluate(y).value; }
  MapEvaluation evaluate(const Vec& y) const;

 private:
  Index q_;
  Index n_;
  double lambda_;
};

struct DfTableRow {
  Index m = 0;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> values;  // one estimate per perturbation set
};

struct DfTable {
  std::string estimator;
  double df_exact = 0.0;
  double a = 0.0;
  Index n_real = 0;
  std::vector<DfTableRow> rows;

  // sd(m) / sd(4m) over every grid pair where both are present.
  std::vector<std::pair<Index, double>> sd_ratios() const;
};

// For each m, n_real independent perturbation sets on the same y. Set k of
// the whole table draws from stream.substream(1 + k); stream must be a root.
template <VectorMap F>
DfTable df_table(const F& f, const Vec& y, double df_exact, std::span<const Index> m_grid, Index n_real,
                 const RngStream& stream, McOptions opts = {}) {
  if (n_real < 2) throw std::invalid_argument("df_table: n_real must be >= 2");
  DfTable table;
  table.df_exact = df_exact;
  table.n_real = n_real;
  table.a = opts.a > 0 ? opts.a : default_perturbation_step(y);
  opts.a = table.a;
  const unsigned outer = opts.threads;
  opts.threads = 1;
  const std::size_t cells = m_grid.size() * static_cast<std::size_t>(n_real);
  std::vector<double> out(cells);
  parallel_for(cells, [&](std::size_t k) {
    const Index m = m_grid[k / static_cast<std::size_t>(n_real)];
    out[k] = mc_divergence(f, y, m, stream.substream(1 + k), opts).value;
  }, outer);
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    DfTableRow row;
    row.m = m_grid[i];
    row.values.assign(out.begin() + static_cast<std::ptrdiff_t>(i * n_real),
                      out.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_real));
    const Summary s = summarize(row.values);
    row.mean = s.mean;
    row.sd = s.sd;
    table.rows.push_back(std::move(row));
  }
  return table;
}

enum class DfEstimator { svt, elastic_net };

// Regenerates the SVT or elastic-net df table on synthetic data. Data come
// from RngStream(seed, 0).substream(0); perturbations from RngStream(seed, 1).
struct DfTableConfig {
  DfEstimator estimator = DfEstimator::svt;
  Index n = 100;       // SVT columns, or regression sample size
  Index p = 101;       // SVT rows, or regression dimension
  double lambda = 10.0;
  double gamma = 0.0;  // elastic net ridge weight, objective ||b||^2 gamma / (2n)
  Index rank = 10;     // SVT signal rank
  Index s0 = 20;       // elastic net support size, unit amplitudes
  double a = 1e-4;
  std::uint64_t seed = 1;
  std::vector<Index> m_grid{10, 25, 40, 100, 225};
  Index n_real = 50;
  unsigned threads = 0;

  static DfTableConfig svt_default();
  static DfTableConfig elastic_net_default();
};

DfTable df_table_experiment(const DfTableConfig& config);

}  // namespace stein
