#include "stein/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

#include "stein/confidence.hpp"
#include "stein/debias.hpp"
#include "stein/divergence_mc.hpp"
#include "stein/fields.hpp"
#include "stein/identities.hpp"
#include "stein/selection.hpp"
#include "stein/solvers.hpp"
#include "stein/stats.hpp"
#include "stein/sure.hpp"

namespace stein {

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kSharedStream = std::numeric_limits<std::uint64_t>::max();
constexpr double kZ = 4.0;
constexpr std::size_t kMaxMessages = 10;

const std::vector<std::pair<ExperimentKind, std::string>>& kind_names() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names{
      {ExperimentKind::sos_verify, "sos_verify"},
      {ExperimentKind::sure_unbiased, "sure_unbiased"},
      {ExperimentKind::sure4sure_consistency, "sure4sure_consistency"},
      {ExperimentKind::coverage, "coverage"},
      {ExperimentKind::model_size, "model_size"},
      {ExperimentKind::df_table, "df_table"},
      {ExperimentKind::tune_oracle, "tune_oracle"},
      {ExperimentKind::debias_pivot, "debias_pivot"},
      {ExperimentKind::mc_div_check, "mc_div_check"}};
  return names;
}

const std::vector<std::string>& fields_for(ExperimentKind kind) {
  static const std::vector<std::string> sos{"identity", "constant", "linear", "soft_threshold", "lasso_residual",
                                            "enet_residual"};
  static const std::vector<std::string> tune{"lasso_grid", "adversarial"};
  static const std::vector<std::string> df{"svt", "elastic_net"};
  static const std::vector<std::string> mc{"lasso", "linear"};
  static const std::vector<std::string> none{""};
  switch (kind) {
    case ExperimentKind::sos_verify: return sos;
    case ExperimentKind::tune_oracle: return tune;
    case ExperimentKind::df_table: return df;
    case ExperimentKind::mc_div_check: return mc;
    default: return none;
  }
}

bool uses_design(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::sos_verify: {
      const std::string f = c.effective_field();
      return f == "lasso_residual" || f == "enet_residual";
    }
    case ExperimentKind::df_table: return false;
    case ExperimentKind::tune_oracle: return c.effective_field() == "lasso_grid";
    case ExperimentKind::mc_div_check: return c.effective_field() == "lasso";
    default: return true;
  }
}

// Rows without NaN, i.e. replications that completed.
std::vector<std::vector<double>> complete_rows(const ResultSet& rs) {
  std::vector<std::vector<double>> out;
  for (const auto& r : rs.records)
    if (std::all_of(r.begin(), r.end(), [](double v) { return !std::isnan(v); })) out.push_back(r);
  return out;
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t j) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][j];
  return out;
}

double frequency(std::span<const double> flags) {
  return flags.empty() ? 0.0 : summarize(flags).mean;
}

double binomial_se(double q, std::size_t count) {
  return count ? std::sqrt(std::max(q * (1.0 - q), 0.0) / static_cast<double>(count)) : 0.0;
}

void add(ResultSet& rs, const std::string& key, double v) { rs.summary.emplace_back(key, v); }

void verdict_at_most(ResultSet& rs, const std::string& name, double stat, double thr, std::string detail) {
  rs.verdicts.push_back({name, stat <= thr, stat, thr, std::move(detail)});
}

void verdict_at_least(ResultSet& rs, const std::string& name, double stat, double thr, std::string detail) {
  rs.verdicts.push_back({name, stat >= thr, stat, thr, std::move(detail)});
}

void verdict_z(ResultSet& rs, const std::string& name, const IdentityReport& r, const std::string& what) {
  add(rs, name + "_lhs_mean", r.lhs_mean);
  add(rs, name + "_rhs_mean", r.rhs_mean);
  add(rs, name + "_z", r.z_score);
  verdict_at_most(rs, name, std::abs(r.z_score), kZ, "|z| of " + what);
}

using ReplicationBody = std::function<std::vector<double>(Index, RngStream&)>;

// Runs every replication, keeping failures as NaN rows.
void replicate(ResultSet& rs, const ReplicationBody& body) {
  const ExperimentConfig& c = rs.config;
  const std::size_t width = rs.fields.size();
  rs.records.assign(static_cast<std::size_t>(c.replications), std::vector<double>(width, std::nan("")));
  std::vector<std::string> errors(rs.records.size());
  parallel_for(rs.records.size(), [&](std::size_t i) {
    try {
      RngStream rng(c.seed, i);
      std::vector<double> row = body(static_cast<Index>(i), rng);
      if (row.size() != width) throw std::logic_error("record width mismatch");
      rs.records[i] = std::move(row);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) errors[i] = "unknown error";
    }
  }, c.threads);
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i].empty()) continue;
    ++rs.failures;
    if (rs.failure_messages.size() < kMaxMessages)
      rs.failure_messages.push_back("replication " + std::to_string(i) + ": " + errors[i]);
  }
}

void failure_verdict(ResultSet& rs, Index denominator) {
  const double rate = static_cast<double>(rs.failures) / static_cast<double>(std::max<Index>(denominator, 1));
  add(rs, "failures", static_cast<double>(rs.failures));
  verdict_at_most(rs, "replication_failure_rate", rate, 0.01, "fraction of replications that raised an error");
}

struct SharedRegression {
  std::shared_ptr<const Mat> X;
  Vec beta;
  Vec mu;
};

SharedRegression shared_regression(const ExperimentConfig& c) {
  RngStream shared(c.seed, kSharedStream);
  SharedRegression s;
  s.X = std::make_shared<const Mat>(make_design(c.design, c.n, c.p, shared));
  s.beta = make_beta(c.beta, c.p, c.s0);
  s.mu = *s.X * s.beta;
  return s;
}

Fit penalized_fit(const ExperimentConfig& c, const Mat& X, const Vec& y) {
  return c.gamma_en > 0 ? fit_elastic_net<double>(X, y, c.effective_lambda(), c.gamma_en)
                        : fit_lasso<double>(X, y, c.effective_lambda());
}

// ---------------------------------------------------------------- sos_verify

std::unique_ptr<VectorField> make_sos_field(const ExperimentConfig& c) {
  const std::string f = c.effective_field();
  RngStream shared(c.seed, kSharedStream);
  if (f == "identity") return std::make_unique<IdentityField>(c.n);
  if (f == "constant") return std::make_unique<ConstantField>(sample_gaussian_vector(shared, c.n, c.sigma));
  if (f == "linear") {
    Mat A(c.n, c.n);
    for (Index j = 0; j < c.n; ++j) A.col(j) = sample_gaussian_vector(shared, c.n, 1.0 / std::sqrt(double(c.n)));
    return std::make_unique<LinearField>(std::move(A));
  }
  if (f == "soft_threshold") return std::make_unique<SoftThresholdField>(c.n, c.threshold * c.sigma);
  const SharedRegression s = shared_regression(c);
  if (f == "lasso_residual") return std::make_unique<ResidualField>(*s.X, s.beta, c.effective_lambda());
  return std::make_unique<ResidualField>(*s.X, s.beta, c.effective_lambda(), c.gamma_en);
}

void run_sos(ResultSet& rs) {
  const ExperimentConfig& c = rs.config;
  const auto field = make_sos_field(c);
  rs.fields = {"lhs", "rhs"};
  replicate(rs, [&](Index, RngStream& rng) {
    const auto [lhs, rhs] = sos_draw(*field, c.sigma, rng);
    return std::vector<double>{lhs, rhs};
  });
  const auto rows = complete_rows(rs);
  const auto lhs = column(rows, 0), rhs = column(rows, 1);
  verdict_z(rs, "sos_identity", compare_paired(lhs, rhs), "paired lhs - rhs for field " + c.effective_field());
}

// ------------------------------------------------ sure_unbiased, consistency

void run_sure(ResultSet& rs) {
  const ExperimentConfig& c = rs.config;
  const SharedRegression s = shared_regression(c);
  rs.fields = {"sure", "loss", "r_hat", "r_prime", "r_double_prime", "df"};
  replicate(rs, [&](Index, RngStream& rng) {
    const Vec y = s.mu + sample_gaussian_vector(rng, c.n, c.sigma);
    const Fit fit = penalized_fit(c, *s.X, y);
    const auto r = sure_for_sure(fit, y, c.sigma);
    return std::vector<double>{r.sure, (fit.mu_hat - s.mu).squaredNorm(), r.r_hat, r.r_prime, r.r_double_prime,
                               fit.df_hat};
  });
  const auto rows = complete_rows(rs);
  const auto sure_v = column(rows, 0), loss = column(rows, 1), r_hat = column(rows, 2), r_prime = column(rows, 3),
             r_dprime = column(rows, 4);
  std::vector<double> dev_sq(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) dev_sq[i] = (sure_v[i] - loss[i]) * (sure_v[i] - loss[i]);
  const double s2 = c.sigma * c.sigma, s4 = s2 * s2, nn = static_cast<double>(c.n);
  add(rs, "mean_sure", summarize(sure_v).mean);
  add(rs, "mean_loss", summarize(loss).mean);
  add(rs, "mean_df", summarize(column(rows, 5)).mean);

  if (c.kind == ExperimentKind::sure4sure_consistency) {
    const double mean_r = summarize(r_hat).mean;
    std::vector<double> rel(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rel[i] = std::pow(r_hat[i] / mean_r - 1.0, 2);
    const Summary sr = summarize(rel);
    add(rs, "mean_r_hat", mean_r);
    add(rs, "relative_sq_error", sr.mean);
    add(rs, "relative_sq_error_se", sr.se);
    verdict_at_most(rs, "sure4sure_consistency", sr.mean, 16.0 / nn + kZ * sr.se,
                    "mean (R_hat / mean R_hat - 1)^2 against 16/n + 4 SE");
    return;
  }

  verdict_z(rs, "sure_unbiased", compare_paired(sure_v, loss), "SURE - loss");
  verdict_z(rs, "sure4sure_unbiased", compare_paired(r_hat, dev_sq), "R_hat - (SURE - loss)^2");

  const Summary rp = summarize(r_prime);
  add(rs, "mean_r_prime", rp.mean);
  verdict_at_least(rs, "r_prime_lower_bound", rp.mean, s4 * nn - kZ * rp.se, "mean R_prime against sigma^4 n - 4 SE");

  const VarianceSummary vp = summarize_variance(r_prime);
  const Summary rdp = summarize(r_dprime);
  const double slack = kZ * std::hypot(vp.var_se, 16.0 * s4 * rdp.se);
  add(rs, "var_r_prime", vp.var);
  add(rs, "mean_r_double_prime", rdp.mean);
  verdict_at_most(rs, "r_prime_variance_bound", vp.var, 16.0 * s4 * rdp.mean + slack,
                  "Var(R_prime) against 16 sigma^4 mean(R_double_prime) + 4 SE");

  const double root_loss = std::sqrt(std::max(summarize(loss).mean, 0.0));
  std::vector<double> quartic(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) quartic[i] = std::pow(std::sqrt(std::max(sure_v[i], 0.0)) - root_loss, 4);
  const Summary q = summarize(quartic);
  const double lhs = std::pow(q.mean, 0.25);
  const double lhs_se = q.mean > 0 ? lhs / (4.0 * q.mean) * q.se : 0.0;
  const double rhs = std::pow(summarize(dev_sq).mean, 0.25) + 3.0 * c.sigma;
  add(rs, "sqrt_sure_quartic", lhs);
  verdict_at_most(rs, "sqrt_sure_quartic_risk", lhs, rhs + kZ * lhs_se,
                  "4th-moment deviation of sqrt(SURE_+) against (mean (SURE - loss)^2)^(1/4) + 3 sigma");

  if (c.gamma_en == 0) {
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
      worst = std::max(worst, std::abs(r_hat[i] - r_prime[i]) / std::max(1.0, std::abs(r_prime[i])));
    verdict_at_most(rs, "lasso_r_hat_equals_r_prime", worst, 1e-8, "max relative |R_hat - R_prime|");
  }
}

// ------------------------------------------------------------------ coverage

void run_coverage(ResultSet& rs) {
  const ExperimentConfig& c = rs.config;
  const SharedRegression s = shared_regression(c);
  rs.fields = {"sure", "loss", "df", "trace_grad_sq", "covered_two_sided", "covered_upper", "covered_data_driven"};
  replicate(rs, [&](Index, RngStream& rng) {
    const Vec y = s.mu + sample_gaussian_vector(rng, c.n, c.sigma);
    const Fit fit = penalized_fit(c, *s.X, y);
    return std::vector<double>{sure(fit.mu_hat, y, fit.df_hat, c.sigma), (fit.mu_hat - s.mu).squaredNorm(),
                               fit.df_hat, fit.trace_grad_sq, 0.0, 0.0, 0.0};
  });
  const auto done = complete_rows(rs);
  const double nn = static_cast<double>(c.n), s2 = c.sigma * c.sigma;
  double eps = c.eps_star;
  if (eps < 0)
    eps = 4.0 * (summarize(column(done, 1)).mean / (nn * s2) + summarize(column(done, 3)).mean / nn);
  add(rs, "eps_star", eps);
  LossRegions shape = loss_confidence_region(0.0, c.sigma, c.n, c.alpha, eps);
  for (auto& r : rs.records) {
    if (std::isnan(r[0])) continue;
    const LossRegions reg = loss_confidence_region(r[0], c.sigma, c.n, c.alpha, eps);
    const ConfidenceInterval dd = data_driven_confidence(r[0], r[2], c.sigma, c.n, c.alpha, c.beta1, c.beta2);
    r[4] = reg.two_sided.contains(r[1]);
    r[5] = reg.upper.contains(r[1]);
    r[6] = dd.contains(r[1]);
  }
  const auto rows = complete_rows(rs);
  const double two = frequency(column(rows, 4)), up = frequency(column(rows, 5)), dd = frequency(column(rows, 6));
  add(rs, "coverage_two_sided", two);
  add(rs, "coverage_upper", up);
  add(rs, "coverage_data_driven", dd);
  add(rs, "coverage_se", binomial_se(shape.two_sided.nominal_level, rows.size()));
  const double level = shape.two_sided.nominal_level;
  verdict_at_least(rs, "two_sided_coverage_lower", two, level - 0.03, "empirical coverage against level - 0.03");
  verdict_at_most(rs, "two_sided_coverage_upper", two, level + 0.03, "empirical coverage against level + 0.03");
  verdict_at_least(rs, "upper_region_coverage", up, shape.upper.nominal_level - 0.02,
                   "empirical coverage against level - 0.02");
  verdict_at_least(rs, "data_driven_coverage", dd, 1.0 - (c.alpha + c.beta1 + c.beta2) - 0.03,
                   "empirical coverage against 1 - (alpha + beta1 + beta2) - 0.03");
}

// ---------------------------------------------------------------- model_size

void run_model_size(ResultSet& rs) {
  const ExperimentConfig& c = rs.config;
  const SharedRegression s = shared_regression(c);
  const double lambda = c.effective_lambda();
  rs.fields = {"size", "prediction_loss", "sparsity_statistic"};
  replicate(rs, [&](Index, RngStream& rng) {
    const Vec y = s.mu + sample_gaussian_vector(rng, c.n, c.sigma);
    const Fit fit = fit_lasso<double>(*s.X, y, lambda);
    const double size = static_cast<double>(fit.support.size());
    const double pred = (fit.mu_hat - s.mu).squaredNorm();
    return std::vector<double>{size, pred, size + pred / (2.0 * c.sigma * c.sigma)};
  });
  const auto rows = complete_rows(rs);
  const auto size = column(rows, 0);
  const VarianceSummary v = summarize_variance(size);
  const double expected = std::min(v.mean, static_cast<double>(c.p));
  const double bound = std::min(2.0 * static_cast<double>(c.n), model_size_variance_bound(expected, c.p));
  add(rs, "lambda", lambda);
  add(rs, "mean_size", v.mean);
  add(rs, "var_size", v.var);
  add(rs, "var_size_se", v.var_se);
  add(rs, "variance_bound", bound);
  verdict_at_most(rs, "model_size_variance_bound", v.var, bound + kZ * v.var_se,
                  "Var(|S|) against min(2n, bound at mean |S|) + 4 SE");

  std::vector<double> covered(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    covered[i] = model_size_ci(static_cast<Index>(size[i]), c.p, c.alpha).contains(v.mean);
  add(rs, "model_size_ci_coverage", frequency(covered));

  if (c.design.kind != DesignKind::orthonormal) return;
  // X^T X = n I: coordinate j survives with probability q_j.
  const double sd = c.sigma / std::sqrt(static_cast<double>(c.n));
  double mean_q = 0.0, var_q = 0.0;
  for (Index j = 0; j < c.p; ++j) {
    const double b = s.beta(j);
    const double q = normal_cdf((-lambda - b) / sd) + normal_cdf((b - lambda) / sd);
    mean_q += q;
    var_q += q * (1.0 - q);
  }
  add(rs, "bernoulli_mean", mean_q);
  add(rs, "bernoulli_variance", var_q);
  const double se = std::sqrt(v.var / static_cast<double>(rows.size()));
  verdict_at_most(rs, "bernoulli_mean_match", se > 0 ? std::abs(v.mean - mean_q) / se : std::abs(v.mean - mean_q), kZ,
                  "|mean |S| - sum q_j| in SEs");
  verdict_at_most(rs, "bernoulli_variance_match",
                  v.var_se > 0 ? std::abs(v.var - var_q) / v.var_se : std::abs(v.var - var_q), kZ,
                  "|Var(|S|) - sum q_j (1 - q_j)| in SEs");

  if (c.lambda > 0) return;
  // Restricted-eigenvalue bound at tau = gamma = 1 with RE = 1.
  const double s0 = static_cast<double>(std::max<Index>(c.s0, 1));
  const double rhs =
      4.0 * (4.0 * (static_cast<double>(c.s0) * std::log(std::numbers::e * static_cast<double>(c.p) / s0) + s0) + 0.25);
  const Summary sp = summarize(column(rows, 2));
  add(rs, "mean_sparsity_statistic", sp.mean);
  add(rs, "sparsity_bound", rhs);
  verdict_at_most(rs, "expected_sparsity_bound", sp.mean, rhs + kZ * sp.se,
                  "mean(|S| + ||X(b_hat - b)||^2 / (2 sigma^2)) against the RE bound + 4 SE");
}

// ------------------------------------------------------------------ df_table

void run_df_table(ResultSet& rs) {
  const ExperimentConfig& c = rs.config;
  DfTableConfig t;
  t.estimator = c.effective_field() == "svt" ? DfEstimator::svt : DfEstimator::elastic_net;
  t.n = c.n;
  t.p = c.p;
  t.lambda = c.effective_lambda();
  t.gamma = c.gamma_en;
  t.rank = c.rank;
  t.s0 = c.s0;
  t.a = c.a > 0 ? c.a : 1e-4;
  t.seed = c.seed;
  if (!c.m_grid.empty()) t.m_grid = c.m_grid;
  t.n_real = c.n_real;
  t.threads = c.threads;
  rs.fields = {"m", "estimate"};
  const DfTable table = df_table_experiment(t);
  for (const auto& row : table.rows)
    for (double v : row.values) rs.records.push_back({static_cast<double>(row.m), v});
  add(rs, "df_exact", table.df_exact);
  add(rs, "a", table.a);
  for (const auto& row : table.rows) {
    add(rs, "mean_m" + std::to_string(row.m), row.mean);
    add(rs, "sd_m" + std::to_string(row.m), row.sd);
  }
  const auto& last = table.rows.back();
  verdict_at_most(rs, "df_table_relative_bias", std::abs(last.mean - table.df_exact) / table.df_exact, 0.01,
                  "|mean - df_exact| / df_exact at m = " + std::to_string(last.m));
  for (const auto& [m, ratio] : table.sd_ratios()) {
    const std::string name = "df_table_sd_ratio_m" + std::to_string(m);
    add(rs, name, ratio);
    rs.verdicts.push_back({name, ratio >= 1.4 && ratio <= 2.8, ratio, 1.4,
                           "sd(m) / sd(4m) for m = " + std::to_string(m) + ", accepted range [1.4, 2.8]"});
  }
}

// --------------------------------------------------------------- tune_oracle

std::vector<double> lambda_grid(const ExperimentConfig& c) {
  if (!c.lambda_grid.empty()) return c.lambda_grid;
  std::vector<double> g;
  for (double f : {0.25, 0.4, 0.6, 0.8, 1.0, 1.3, 1.7, 2.2}) g.push_back(f * c.effective_lambda());
  return g;
}

void run_tune_grid(ResultSet& rs) {
  const ExperimentConfig& c = rs.config;
  const SharedRegression s = shared_regression(c);
  const std::vector<double> grid = lambda_grid(c);
  const std::size_t m = grid.size();
  rs.fields = {"selected", "gap", "exceeds"};
  for (std::size_t k = 0; k < m; ++k) rs.fields.push_back("loss_" + std::to_string(k));
  std::vector<std::vector<std::vector<Index>>> supports(static_cast<std::size_t>(c.replications));
  replicate(rs, [&](Index i, RngStream& rng) {
    const Vec y = s.mu + sample_gaussian_vector(rng, c.n, c.sigma);
    std::vector<Fit> fits;
    for (double l : grid) fits.push_back(fit_lasso<double>(*s.X, y, l));
    const CandidateSet set = make_candidates(std::move(fits), y, c.sigma);
    std::vector<double> row{static_cast<double>(sure_tune(set)), 0.0, 0.0};
    auto& sup = supports[static_cast<std::size_t>(i)];
    for (const auto& f : set.fits) {
      row.push_back((f.mu_hat - s.mu).norm());
      sup.push_back(f.support);
    }
    return row;
  });
  const auto done = complete_rows(rs);
  std::vector<double> mean_loss(m);
  for (std::size_t k = 0; k < m; ++k) mean_loss[k] = summarize(column(done, 3 + k)).mean;
  const std::size_t j0 = static_cast<std::size_t>(std::min_element(mean_loss.begin(), mean_loss.end()) - mean_loss.begin());

  // s_star = max_k E trace((P_k - P_j0)^2).
  std::vector<std::vector<double>> traces(rs.records.size(), std::vector<double>(m, std::nan("")));
  parallel_for(rs.records.size(), [&](std::size_t i) {
    if (std::isnan(rs.records[i][0])) return;
    for (std::size_t k = 0; k < m; ++k)
      traces[i][k] = projection_diff_trace_sq(*s.X, supports[i][k], supports[i][j0]);
  }, c.threads);
  double s_star = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> tk;
    for (const auto& t : traces)
      if (!std::isnan(t[k])) tk.push_back(t[k]);
    if (!tk.empty()) s_star = std::max(s_star, summarize(tk).mean);
  }
  const double bound = oracle_gap_bound(static_cast<Index>(m), c.alpha, 1.0, s_star, c.sigma);
  for (auto& r : rs.records) {
    if (std::isnan(r[0])) continue;
    r[1] = r[3 + static_cast<std::size_t>(r[0])] - r[3 + j0];
    r[2] = r[1] > bound;
  }
  const auto rows = complete_rows(rs);
  const double freq = frequency(column(rows, 2));
  add(rs, "oracle_index", static_cast<double>(j0));
  add(rs, "s_star", s_star);
  add(rs, "gap_bound", bound);
  add(rs, "mean_gap", summarize(column(rows, 1)).mean);
  add(rs, "exceedance_frequency", freq);
  verdict_at_most(rs, "oracle_gap_exceedance", freq, c.alpha + kZ * binomial_se(c.alpha, rows.size()),
                  "frequency of gap above the bound against alpha + 4 SE");
}

void run_tune_adversarial(ResultSet& rs) {
  const ExperimentConfig& c = rs.config;
  const AdversarialPair pair = adversarial_pair(c.n, c.sigma, c.period_exponent);
  const double target = c.gap_c * c.sigma * std::pow(static_cast<double>(c.n), 0.25);
  rs.fields = {"selected", "gap", "large_gap"};
  replicate(rs, [&](Index, RngStream& rng) {
    const Vec y = sample_gaussian_vector(rng, c.n, c.sigma);  // mu = 0
    const FieldValue zero = pair.zero->evaluate(y);
    const FieldValue tri = pair.triangle->evaluate(y);
    Vec sures(2);
    sures << sure(zero.f, y, zero.divergence, c.sigma), sure(tri.f, y, tri.divergence, c.sigma);
    const Index k = sure_tune(sures);
    // The zero candidate is exact, so the gap is the loss of the choice.
    const double gap = k == 1 ? tri.f.norm() : zero.f.norm();
    return std::vector<double>{static_cast<double>(k), gap, gap >= target ? 1.0 : 0.0};
  });
  const auto rows = complete_rows(rs);
  const double freq = frequency(column(rows, 2));
  add(rs, "gap_target", target);
  add(rs, "selected_triangle_frequency", frequency(column(rows, 0)));
  add(rs, "large_gap_frequency", freq);
  verdict_at_least(rs, "adversarial_gap_frequency", freq, 0.05,
                   "frequency of gap >= c sigma n^(1/4) against 0.05");
}

// -------------------------------------------------------------- debias_pivot

void run_debias(ResultSet& rs) {
  const ExperimentConfig& c = rs.config;
  const Vec beta = make_beta(c.beta, c.p, c.s0);
  const Mat Sigma = design_covariance(c.design, c.p);
  Vec a0 = Vec::Zero(c.p);
  a0(0) = 1.0;
  DebiasOptions opts;
  opts.m = c.m;
  opts.a = c.a;
  rs.fields = {"theta_hat", "pivot", "v_star", "nu_hat", "a_hat", "b_hat", "frozen_support", "ill_posed"};
  std::vector<DebiasReport> reports(static_cast<std::size_t>(c.replications));
  replicate(rs, [&](Index i, RngStream& rng) {
    Problem prob;
    prob.X = make_design(c.design, c.n, c.p, rng);
    prob.y = prob.X * beta + sample_gaussian_vector(rng, c.n, c.sigma);
    prob.beta = beta;
    prob.sigma = c.sigma;
    const Fit fit = penalized_fit(c, prob.X, prob.y);
    const Direction dir = direction_setup(a0, Sigma, prob.X);
    const DebiasReport r = debias_theta(prob, fit, dir, rng.substream(0), opts);
    reports[static_cast<std::size_t>(i)] = r;
    const double nan = std::nan("");
    return std::vector<double>{r.ill_posed ? nan : r.theta_hat,
                               r.pivot && !r.ill_posed ? *r.pivot : nan,
                               r.v_star.value_or(nan),
                               r.nu_hat,
                               r.a_hat,
                               r.b_hat,
                               r.frozen_support ? 1.0 : 0.0,
                               r.ill_posed ? 1.0 : 0.0};
  });
  std::vector<DebiasReport> usable;
  Index ill = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (std::isnan(rs.records[i][3])) continue;
    if (reports[i].ill_posed) ++ill;
    else usable.push_back(reports[i]);
  }
  const auto rows = complete_rows(rs);
  add(rs, "ill_posed", static_cast<double>(ill));
  add(rs, "frozen_support_frequency", frequency(column(rows, 6)));
  add(rs, "mean_theta_hat", summarize(column(rows, 0)).mean);
  verdict_z(rs, "pivot_mean_zero", pivot_mean_check(usable), "pivot against 0");
  verdict_z(rs, "pivot_variance", pivot_variance_check(usable), "squared pivot deviation against v_star");
}

// ------------------------------------------------------------- mc_div_check

void run_mc_div(ResultSet& rs) {
  const ExperimentConfig& c = rs.config;
  McOptions opts;
  opts.a = c.a;
  opts.threads = 1;
  const double nn = static_cast<double>(c.n), mm = static_cast<double>(c.m);
  if (c.effective_field() == "linear") {
    RngStream shared(c.seed, kSharedStream);
    Mat A(c.n, c.n);
    for (Index j = 0; j < c.n; ++j) A.col(j) = sample_gaussian_vector(shared, c.n, 1.0 / std::sqrt(nn));
    const double tr = A.trace();
    // Var(z^T A z) = ||A||_F^2 + trace(A^2).
    const double sd = std::sqrt(((A.squaredNorm() + (A * A).trace()) / mm));
    const auto f = [&A](const Vec& y) -> Vec { return A * y; };
    rs.fields = {"estimate", "z"};
    replicate(rs, [&](Index, RngStream& rng) {
      const Vec y = sample_gaussian_vector(rng, c.n, c.sigma);
      const double est = mc_divergence(f, y, c.m, rng.substream(0), opts).value;
      return std::vector<double>{est, (est - tr) / sd};
    });
    const auto rows = complete_rows(rs);
    const auto est = column(rows, 0), z = column(rows, 1);
    std::vector<double> inside(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) inside[i] = std::abs(z[i]) <= kZ;
    const double mean_z = summarize(est).mean;
    add(rs, "trace", tr);
    add(rs, "analytic_sd", sd);
    add(rs, "mean_estimate", mean_z);
    verdict_at_most(rs, "mc_linear_mean", std::abs(mean_z - tr) / (sd / std::sqrt(double(rows.size()))), kZ,
                    "|mean estimate - trace(A)| in analytic SEs");
    verdict_at_least(rs, "mc_linear_within_4se", frequency(inside), 0.99,
                     "fraction of estimates within 4 analytic SEs of trace(A)");
    return;
  }
  const SharedRegression s = shared_regression(c);
  const PenalizedFitMap map(s.X, c.effective_lambda(), c.gamma_en);
  const double level = 10.0 * 4.0 * nn / mm;
  rs.fields = {"estimate", "df", "squared_error", "within_markov"};
  replicate(rs, [&](Index, RngStream& rng) {
    const Vec y = s.mu + sample_gaussian_vector(rng, c.n, c.sigma);
    const double df = map.fit(y).df_hat;
    const double est = mc_divergence(map, y, c.m, rng.substream(0), opts).value;
    const double e2 = (est - df) * (est - df);
    return std::vector<double>{est, df, e2, e2 <= level ? 1.0 : 0.0};
  });
  const auto rows = complete_rows(rs);
  const double freq = frequency(column(rows, 3));
  add(rs, "mean_squared_error", summarize(column(rows, 2)).mean);
  add(rs, "mse_bound", 4.0 * nn / mm);
  add(rs, "within_markov_frequency", freq);
  verdict_at_least(rs, "mc_markov_check", freq, 0.95,
                   "fraction with squared error <= 10 * 4n/m, required 19 in 20");
}

// ---------------------------------------------------------------------- JSON

json design_json(const DesignSpec& d) {
  json j{{"kind", to_string(d.kind)}};
  if (d.kind == DesignKind::equicorrelated) j["rho"] = d.rho;
  return j;
}

json beta_json(const BetaSpec& b) {
  json j{{"kind", to_string(b.kind)}};
  if (b.kind == BetaKind::spiked) j["amplitude"] = b.amplitude;
  if (b.kind == BetaKind::custom) j["path"] = b.path;
  return j;
}

json config_json(const ExperimentConfig& c, bool with_threads) {
  json j;
  j["kind"] = to_string(c.kind);
  j["n"] = c.n;
  j["p"] = c.p;
  j["s0"] = c.s0;
  j["sigma"] = c.sigma;
  j["lambda"] = c.lambda;
  j["gamma_en"] = c.gamma_en;
  j["alpha"] = c.alpha;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  j["design"] = design_json(c.design);
  j["beta_spec"] = beta_json(c.beta);
  j["field"] = c.effective_field();
  j["threshold"] = c.threshold;
  j["m"] = c.m;
  j["a"] = c.a;
  j["lambda_grid"] = c.lambda_grid;
  j["period_exponent"] = c.period_exponent;
  j["gap_c"] = c.gap_c;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps_star"] = c.eps_star;
  j["m_grid"] = c.m_grid;
  j["n_real"] = c.n_real;
  j["rank"] = c.rank;
  if (with_threads) j["threads"] = c.threads;
  return j;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kind_names())
    if (k == kind) return name;
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (const auto& [k, n] : kind_names())
    if (n == name) return k;
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

std::string ExperimentConfig::effective_field() const { return field.empty() ? fields_for(kind).front() : field; }

double ExperimentConfig::effective_lambda() const {
  if (lambda > 0) return lambda;
  const double nn = static_cast<double>(n), pp = static_cast<double>(p);
  if (kind == ExperimentKind::model_size) {
    const double s = static_cast<double>(std::max<Index>(s0, 1));
    return 4.0 * sigma * std::sqrt(2.0 * std::log(std::numbers::e * pp / s) / nn);
  }
  return sigma * std::sqrt(2.0 * std::log(std::max(pp, 2.0)) / nn);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (n < 1 || p < 1) fail("n and p must be positive");
  if (replications < 1) fail("replications must be >= 1");
  if (s0 < 0 || s0 > p) fail("s0 must lie in [0, p]");
  if (!(sigma > 0)) fail("sigma must be positive");
  if (lambda < 0 || gamma_en < 0) fail("lambda and gamma_en must be nonnegative");
  if (!(alpha > 0 && alpha < 1)) fail("alpha must lie in (0, 1)");
  if (m < 1) fail("m must be >= 1");
  if (a < 0) fail("a must be nonnegative");
  const auto& allowed = fields_for(kind);
  if (!field.empty() && std::find(allowed.begin(), allowed.end(), field) == allowed.end())
    fail("field '" + field + "' does not apply to " + to_string(kind));
  for (double l : lambda_grid)
    if (!(l > 0)) fail("lambda_grid entries must be positive");
  if (kind == ExperimentKind::coverage && !(beta1 > 0 && beta2 > 0 && alpha + beta1 + beta2 < 1))
    fail("coverage needs positive beta1, beta2 with alpha + beta1 + beta2 < 1");
  if (kind == ExperimentKind::sos_verify && effective_field() == "enet_residual" && !(gamma_en > 0))
    fail("enet_residual needs gamma_en > 0");
  if (kind == ExperimentKind::df_table) {
    if (n_real < 2) fail("n_real must be >= 2");
    for (Index mm : m_grid)
      if (mm < 1) fail("m_grid entries must be positive");
    if (effective_field() == "elastic_net" && !(gamma_en > 0)) fail("elastic_net table needs gamma_en > 0");
    if (effective_field() == "svt" && (rank < 0 || rank > std::min(n, p))) fail("rank exceeds the matrix size");
  }
  if (kind == ExperimentKind::tune_oracle && effective_field() == "adversarial" && !(gap_c > 0))
    fail("gap_c must be positive");
  if (!uses_design(*this)) return;
  if (design.kind == DesignKind::orthonormal && n < p) fail("orthonormal design needs n >= p");
  if (design.kind == DesignKind::equicorrelated &&
      !(design.rho > -1.0 / static_cast<double>(std::max<Index>(p - 1, 1)) && design.rho < 1.0))
    fail("equicorrelated rho outside the positive-definite range");
  if (design.kind != DesignKind::equicorrelated && design.rho != 0.0) fail("rho applies to equicorrelated only");
  if (beta.kind == BetaKind::custom && beta.path.empty()) fail("custom beta_spec needs a path");
  if (kind == ExperimentKind::debias_pivot && beta.kind == BetaKind::custom) fail("debias_pivot needs a known beta");
}

ExperimentConfig ExperimentConfig::defaults_for(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::sos_verify:
      c.n = 20;
      c.p = 40;
      c.replications = 100000;
      break;
    case ExperimentKind::sure_unbiased:
    case ExperimentKind::sure4sure_consistency:
      c.replications = 5000;
      break;
    case ExperimentKind::coverage:
      c.n = 500;
      c.p = 100;
      c.replications = 2000;
      break;
    case ExperimentKind::model_size:
      c.n = 500;
      c.p = 500;
      c.design.kind = DesignKind::orthonormal;
      break;
    case ExperimentKind::df_table: return df_table_preset("svt");
    case ExperimentKind::tune_oracle:
      c.alpha = 0.1;
      c.replications = 500;
      break;
    case ExperimentKind::debias_pivot:
      c.n = 200;
      c.p = 300;
      c.replications = 2000;
      break;
    case ExperimentKind::mc_div_check:
      c.replications = 20;
      break;
  }
  return c;
}

ExperimentConfig ExperimentConfig::df_table_preset(const std::string& estimator) {
  DfTableConfig t;
  if (estimator == "svt") t = DfTableConfig::svt_default();
  else if (estimator == "elastic_net") t = DfTableConfig::elastic_net_default();
  else throw std::invalid_argument("unknown df table estimator '" + estimator + "'");
  ExperimentConfig c;
  c.kind = ExperimentKind::df_table;
  c.field = estimator;
  c.n = t.n;
  c.p = t.p;
  c.lambda = t.lambda;
  c.gamma_en = t.gamma;
  c.rank = t.rank;
  c.s0 = t.s0;
  c.a = t.a;
  c.m_grid = t.m_grid;
  c.n_real = t.n_real;
  c.replications = static_cast<Index>(t.m_grid.size()) * t.n_real;
  return c;
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), 0);
  }
  if (!j.is_object()) throw ParseError("config: expected a JSON object", 0);
  if (!j.contains("kind")) throw ParseError("config: missing 'kind'", 0);
  const ExperimentKind kind = parse_experiment_kind(j.at("kind").get<std::string>());
  ExperimentConfig c = kind == ExperimentKind::df_table && j.contains("field")
                           ? ExperimentConfig::df_table_preset(j.at("field").get<std::string>())
                           : ExperimentConfig::defaults_for(kind);
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "kind" || key == "schema") continue;
      else if (key == "n") c.n = v.get<Index>();
      else if (key == "p") c.p = v.get<Index>();
      else if (key == "s0") c.s0 = v.get<Index>();
      else if (key == "sigma") c.sigma = v.get<double>();
      else if (key == "lambda") c.lambda = v.get<double>();
      else if (key == "gamma_en") c.gamma_en = v.get<double>();
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "replications") c.replications = v.get<Index>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "threads") c.threads = v.get<unsigned>();
      else if (key == "field") c.field = v.get<std::string>();
      else if (key == "threshold") c.threshold = v.get<double>();
      else if (key == "m") c.m = v.get<Index>();
      else if (key == "a") c.a = v.get<double>();
      else if (key == "lambda_grid") c.lambda_grid = v.get<std::vector<double>>();
      else if (key == "period_exponent") c.period_exponent = v.get<int>();
      else if (key == "gap_c") c.gap_c = v.get<double>();
      else if (key == "beta1") c.beta1 = v.get<double>();
      else if (key == "beta2") c.beta2 = v.get<double>();
      else if (key == "eps_star") c.eps_star = v.get<double>();
      else if (key == "m_grid") c.m_grid = v.get<std::vector<Index>>();
      else if (key == "n_real") c.n_real = v.get<Index>();
      else if (key == "rank") c.rank = v.get<Index>();
      else if (key == "design") {
        if (v.is_string()) {
          c.design = {parse_design_kind(v.get<std::string>()), 0.0};
        } else {
          c.design.kind = parse_design_kind(v.at("kind").get<std::string>());
          c.design.rho = v.value("rho", 0.0);
        }
      } else if (key == "beta_spec") {
        if (v.is_string()) {
          c.beta = {parse_beta_kind(v.get<std::string>()), 1.0, ""};
        } else {
          c.beta.kind = parse_beta_kind(v.at("kind").get<std::string>());
          c.beta.amplitude = v.value("amplitude", 1.0);
          c.beta.path = v.value("path", std::string());
        }
      } else {
        throw ParseError("config: unknown key '" + key + "'", 0);
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what(), 0);
  }
  c.validate();
  return c;
}

std::string config_to_json(const ExperimentConfig& c) { return config_json(c, true).dump(2); }

bool ResultSet::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

double ResultSet::stat(const std::string& key) const {
  for (const auto& [k, v] : summary)
    if (k == key) return v;
  throw std::out_of_range("no summary statistic '" + key + "'");
}

const Verdict& ResultSet::verdict(const std::string& invariant) const {
  for (const auto& v : verdicts)
    if (v.invariant == invariant) return v;
  throw std::out_of_range("no verdict '" + invariant + "'");
}

Table ResultSet::records_table() const { return {fields, records}; }

ResultSet run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ResultSet rs;
  rs.config = config;
  switch (config.kind) {
    case ExperimentKind::sos_verify: run_sos(rs); break;
    case ExperimentKind::sure_unbiased:
    case ExperimentKind::sure4sure_consistency: run_sure(rs); break;
    case ExperimentKind::coverage: run_coverage(rs); break;
    case ExperimentKind::model_size: run_model_size(rs); break;
    case ExperimentKind::df_table: run_df_table(rs); break;
    case ExperimentKind::tune_oracle:
      if (config.effective_field() == "adversarial") run_tune_adversarial(rs);
      else run_tune_grid(rs);
      break;
    case ExperimentKind::debias_pivot: run_debias(rs); break;
    case ExperimentKind::mc_div_check: run_mc_div(rs); break;
  }
  if (config.kind != ExperimentKind::df_table) failure_verdict(rs, config.replications);
  rs.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rs;
}

std::string result_json(const ResultSet& rs, bool include_timing) {
  json j;
  j["schema"] = "stein-sure/1";
  j["config"] = config_json(rs.config, false);
  j["passed"] = rs.passed();
  json verdicts = json::array();
  for (const auto& v : rs.verdicts)
    verdicts.push_back({{"invariant", v.invariant},
                        {"pass", v.pass},
                        {"statistic", number_or_null(v.statistic)},
                        {"threshold", number_or_null(v.threshold)},
                        {"detail", v.detail}});
  j["verdicts"] = std::move(verdicts);
  json summary = json::object();
  for (const auto& [k, v] : rs.summary) summary[k] = number_or_null(v);
  j["summary"] = std::move(summary);
  j["failures"] = rs.failures;
  j["failure_messages"] = rs.failure_messages;
  j["fields"] = rs.fields;
  json records = json::array();
  for (const auto& r : rs.records) {
    json row = json::array();
    for (double v : r) row.push_back(number_or_null(v));
    records.push_back(std::move(row));
  }
  j["records"] = std::move(records);
  if (include_timing) j["wall_clock_seconds"] = rs.wall_clock_seconds;
  return j.dump(2) + "\n";
}

void save_results_json(const std::string& path, const ResultSet& rs, bool include_timing) {
  write_text_file(path, result_json(rs, include_timing));
}

}  // namespace stein
