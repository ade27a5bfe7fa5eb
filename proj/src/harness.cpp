#include "stein/harness.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "stein/debias.hpp"
#include "stein/divergence_mc.hpp"
#include "stein/selection.hpp"
#include "stein/solvers.hpp"
#include "stein/stats.hpp"
#include "stein/sure.hpp"

namespace stein {

namespace {

using json = nlohmann::ordered_json;

struct Common {
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string out;
  unsigned threads = 0;
  std::string format = "json";
};

struct DataInput {
  std::string X_path;
  std::string y_path;
  double lambda = 0.0;
  double gamma = 0.0;
  double sigma = 0.0;  // 0 = unknown
};

// Experiment flags bound to a config, with enums kept as strings until parse.
struct ExperimentFlags {
  ExperimentConfig config;
  std::string design;
  std::string beta;
  std::string beta_path;
  std::optional<double> rho;
  std::optional<double> amplitude;

  void finish() {
    if (!design.empty()) config.design.kind = parse_design_kind(design);
    if (rho) config.design.rho = *rho;
    if (!beta.empty()) config.beta.kind = parse_beta_kind(beta);
    if (amplitude) config.beta.amplitude = *amplitude;
    if (!beta_path.empty()) {
      config.beta.path = beta_path;
      if (beta.empty()) config.beta.kind = BetaKind::custom;
    }
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option_function<std::uint64_t>("--seed", [&c](std::uint64_t s) { c.seed = s; c.seed_set = true; },
                                          "64-bit seed");
  app->add_option("--out", c.out, "write output to this path instead of stdout");
  app->add_option("--threads", c.threads, "worker threads, 0 = logical cores");
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "csv"}));
}

void add_data(CLI::App* app, DataInput& d, bool need_lambda, bool need_sigma) {
  app->add_option("--X", d.X_path, "design matrix, headerless CSV")->required()->check(CLI::ExistingFile);
  app->add_option("--y", d.y_path, "response vector, headerless CSV")->required()->check(CLI::ExistingFile);
  auto* l = app->add_option("--lambda", d.lambda, "penalty for ||Xb - y||^2/(2n) + lambda ||b||_1");
  if (need_lambda) l->required();
  app->add_option("--gamma", d.gamma, "ridge weight, adds gamma ||b||^2/(2n)");
  auto* s = app->add_option("--sigma", d.sigma, "noise level");
  if (need_sigma) s->required();
}

void add_experiment(CLI::App* app, ExperimentFlags& f) {
  auto& c = f.config;
  app->add_option("--n", c.n, "sample size");
  app->add_option("--p", c.p, "dimension");
  app->add_option("--s0", c.s0, "sparsity of beta");
  app->add_option("--sigma", c.sigma, "noise level");
  app->add_option("--lambda", c.lambda, "penalty, 0 = default for the experiment");
  app->add_option("--gamma", c.gamma_en, "elastic-net ridge weight");
  app->add_option("--alpha", c.alpha, "significance level");
  app->add_option("--reps", c.replications, "replications");
  app->add_option("--design", f.design, "design")->check(CLI::IsMember({"orthonormal", "iid_gaussian", "equicorrelated"}));
  app->add_option("--rho", f.rho, "equicorrelation");
  app->add_option("--beta", f.beta, "beta spec")->check(CLI::IsMember({"zeros", "spiked", "custom"}));
  app->add_option("--amplitude", f.amplitude, "spike amplitude");
  app->add_option("--beta-path", f.beta_path, "custom beta, headerless CSV");
  app->add_option("--m", c.m, "Monte Carlo probes");
  app->add_option("--a", c.a, "perturbation step, 0 = default");
}

void emit(const Common& common, const std::string& text, std::ostream& out) {
  if (common.out.empty()) out << text;
  else write_text_file(common.out, text);
}

void emit_json(const Common& common, const json& j, std::ostream& out) { emit(common, j.dump(2) + "\n", out); }

int emit_result(const Common& common, const ResultSet& rs, std::ostream& out, std::ostream& err) {
  if (common.format == "csv") emit(common, format_table_csv(rs.records_table()), out);
  else emit(common, result_json(rs), out);
  for (const auto& v : rs.verdicts)
    err << (v.pass ? "PASS " : "FAIL ") << v.invariant << ": " << format_double(v.statistic) << " vs "
        << format_double(v.threshold) << " (" << v.detail << ")\n";
  for (const auto& m : rs.failure_messages) err << "error in " << m << "\n";
  return rs.passed() ? kExitPass : kExitInvariant;
}

ResultSet run_flags(ExperimentFlags& f, const Common& common) {
  f.finish();
  if (common.seed_set) f.config.seed = common.seed;
  f.config.threads = common.threads;
  return run_experiment(f.config);
}

struct Loaded {
  Mat X;
  Vec y;
};

Loaded load(const DataInput& d) {
  Loaded l{load_matrix_csv(d.X_path), load_vector_csv(d.y_path)};
  if (l.X.rows() != l.y.size())
    throw std::invalid_argument("rows of X (" + std::to_string(l.X.rows()) + ") != length of y (" +
                                std::to_string(l.y.size()) + ")");
  return l;
}

Fit fit_data(const Loaded& l, double lambda, double gamma) {
  if (lambda < 0 || gamma < 0) throw std::invalid_argument("lambda and gamma must be nonnegative");
  return gamma > 0 ? fit_elastic_net<double>(l.X, l.y, lambda, gamma) : fit_lasso<double>(l.X, l.y, lambda);
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json schema_header(const std::string& command) { return json{{"schema", "stein-sure/1"}, {"command", command}}; }

// Fit from CSV input. The KKT conditions are the invariant.
int cmd_fit(const std::string& name, const Common& common, const DataInput& d, std::ostream& out, std::ostream& err) {
  const Loaded l = load(d);
  const Fit fit = fit_data(l, d.lambda, d.gamma);
  bool kkt_ok = true;
  json j = schema_header(name);
  j["lambda"] = d.lambda;
  j["gamma"] = d.gamma;
  if (d.lambda > 0) {
    const KktReport k = check_kkt<double>(l.X, l.y, d.lambda, fit.beta_hat, 0.0, d.gamma);
    kkt_ok = k.max_inactive_correlation <= 1.0 + 1e-6 && k.active_sign_error <= 1e-6;
    j["kkt"] = {{"max_inactive_correlation", k.max_inactive_correlation},
                {"active_sign_error", k.active_sign_error},
                {"pass", kkt_ok}};
  }
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["duality_gap"] = fit.duality_gap;
  j["df_hat"] = fit.df_hat;
  j["trace_grad_sq"] = fit.trace_grad_sq;
  j["support"] = fit.support;
  j["beta_hat"] = vec_json(fit.beta_hat);
  if (d.sigma > 0) j["sure"] = sure(fit.mu_hat, l.y, fit.df_hat, d.sigma);
  if (common.format == "csv") {
    Table t{{"beta_hat"}, {}};
    for (Index i = 0; i < fit.beta_hat.size(); ++i) t.rows.push_back({fit.beta_hat(i)});
    emit(common, format_table_csv(t), out);
  } else {
    emit_json(common, j, out);
  }
  if (!fit.converged) err << "FAIL solver did not converge\n";
  if (!kkt_ok) err << "FAIL KKT conditions violated\n";
  return fit.converged && kkt_ok ? kExitPass : kExitInvariant;
}

int cmd_sure(bool with_r, const Common& common, const DataInput& d, std::ostream& out) {
  const Loaded l = load(d);
  const Fit fit = fit_data(l, d.lambda, d.gamma);
  const auto r = sure_for_sure(fit, l.y, d.sigma);
  json j = schema_header(with_r ? "sure4sure" : "sure");
  j["lambda"] = d.lambda;
  j["gamma"] = d.gamma;
  j["sigma"] = d.sigma;
  j["df_hat"] = fit.df_hat;
  j["rss"] = fit.residual.squaredNorm();
  j["sure"] = r.sure;
  Table t{{"df_hat", "sure"}, {{fit.df_hat, r.sure}}};
  if (with_r) {
    j["trace_grad_sq"] = fit.trace_grad_sq;
    j["r_hat"] = r.r_hat;
    j["r_prime"] = r.r_prime;
    j["r_double_prime"] = r.r_double_prime;
    t.columns.insert(t.columns.end(), {"r_hat", "r_prime", "r_double_prime"});
    t.rows[0].insert(t.rows[0].end(), {r.r_hat, r.r_prime, r.r_double_prime});
  }
  if (common.format == "csv") emit(common, format_table_csv(t), out);
  else emit_json(common, j, out);
  return kExitPass;
}

int cmd_tune(const Common& common, const DataInput& d, const std::vector<double>& grid, std::ostream& out) {
  if (grid.empty()) throw std::invalid_argument("tune: --lambdas is required with --X");
  const Loaded l = load(d);
  std::vector<Fit> fits;
  for (double lam : grid) fits.push_back(fit_data(l, lam, d.gamma));
  const CandidateSet set = make_candidates(std::move(fits), l.y, d.sigma);
  const Index k = sure_tune(set);
  Table t{{"lambda", "df_hat", "sure"}, {}};
  json cands = json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = set.sure_values(static_cast<Index>(i));
    t.rows.push_back({grid[i], set.fits[i].df_hat, s});
    cands.push_back({{"lambda", grid[i]}, {"df_hat", set.fits[i].df_hat}, {"sure", s}});
  }
  json j = schema_header("tune");
  j["sigma"] = d.sigma;
  j["candidates"] = std::move(cands);
  j["selected"] = k;
  j["selected_lambda"] = grid[static_cast<std::size_t>(k)];
  j["beta_hat"] = vec_json(set.fits[static_cast<std::size_t>(k)].beta_hat);
  if (common.format == "csv") emit(common, format_table_csv(t), out);
  else emit_json(common, j, out);
  return kExitPass;
}

int cmd_mc_div(const Common& common, const DataInput& d, Index m, double a, std::ostream& out) {
  const Loaded l = load(d);
  if (!(d.lambda > 0)) throw std::invalid_argument("mc-div: --lambda must be positive");
  const PenalizedFitMap map(std::make_shared<const Mat>(l.X), d.lambda, d.gamma);
  McOptions opts;
  opts.a = a;
  opts.threads = common.threads;
  const DivergenceEstimate est = mc_divergence(map, l.y, m, RngStream(common.seed, 0), opts);
  const double df = map.fit(l.y).df_hat;
  json j = schema_header("mc-div");
  j["lambda"] = d.lambda;
  j["gamma"] = d.gamma;
  j["m"] = m;
  j["a"] = est.a;
  j["estimate"] = est.value;
  j["empirical_se"] = est.empirical_se;
  j["se_bound"] = est.se_bound;
  j["df_exact"] = df;
  if (common.format == "csv")
    emit(common, format_table_csv({{"m", "a", "estimate", "df_exact"}, {{double(m), est.a, est.value, df}}}), out);
  else
    emit_json(common, j, out);
  return kExitPass;
}

int cmd_debias(const Common& common, const DataInput& d, Index index, const std::string& sigma_path, Index m,
               std::ostream& out, std::ostream& err) {
  const Loaded l = load(d);
  const Index p = l.X.cols();
  if (index < 0 || index >= p) throw std::invalid_argument("debias: --index must lie in [0, p)");
  const Mat Sigma = sigma_path.empty() ? Mat(Mat::Identity(p, p)) : load_matrix_csv(sigma_path);
  if (Sigma.rows() != p || Sigma.cols() != p) throw std::invalid_argument("debias: Sigma must be p x p");
  Problem prob;
  prob.X = l.X;
  prob.y = l.y;
  prob.sigma = d.sigma;
  const Fit fit = fit_data(l, d.lambda, d.gamma);
  Vec a0 = Vec::Zero(p);
  a0(index) = 1.0;
  DebiasOptions opts;
  opts.m = m;
  const DebiasReport r = debias_theta(prob, fit, direction_setup(a0, Sigma, l.X), RngStream(common.seed, 0), opts);
  json j = schema_header("debias");
  j["index"] = index;
  j["lambda"] = d.lambda;
  j["gamma"] = d.gamma;
  j["theta_hat"] = r.ill_posed ? json(nullptr) : json(r.theta_hat);
  j["contrast_hat"] = r.contrast_hat;
  j["nu_hat"] = r.nu_hat;
  j["a_hat"] = r.a_hat;
  j["b_hat"] = r.b_hat;
  j["b_hat_se"] = r.b_hat_se;
  j["z0_sq_norm"] = r.z0_sq_norm;
  j["frozen_support"] = r.frozen_support;
  j["ill_posed"] = r.ill_posed;
  if (common.format == "csv")
    emit(common, format_table_csv({{"theta_hat", "nu_hat", "a_hat", "b_hat"}, {{r.theta_hat, r.nu_hat, r.a_hat, r.b_hat}}}),
         out);
  else
    emit_json(common, j, out);
  if (r.ill_posed) {
    err << "FAIL ||z0||^2 - nu_hat <= 0, the de-biased estimate is undefined\n";
    return kExitInvariant;
  }
  return kExitPass;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SURE, SURE-for-SURE and second-order Stein toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stein-cli 1.0");

  Common common;
  DataInput data;
  std::vector<double> lambdas;
  Index index = 0;
  std::string sigma_path, config_path, estimator = "svt";
  Index n_real = 0;
  std::vector<Index> m_grid;

  std::map<std::string, ExperimentFlags> flags;
  auto flags_for = [&](const std::string& name, ExperimentKind kind) -> ExperimentFlags& {
    auto& f = flags[name];
    f.config = ExperimentConfig::defaults_for(kind);
    return f;
  };

  std::function<int()> action;

  // Experiments.
  auto* sos = app.add_subcommand("sos-verify", "Monte Carlo check of the second-order Stein identity");
  auto& sos_f = flags_for("sos-verify", ExperimentKind::sos_verify);
  add_common(sos, common);
  add_experiment(sos, sos_f);
  sos->add_option("--field", sos_f.config.field, "test field")
      ->check(CLI::IsMember({"identity", "constant", "linear", "soft_threshold", "lasso_residual", "enet_residual"}));
  sos->add_option("--threshold", sos_f.config.threshold, "soft-threshold level in units of sigma");
  sos->callback([&] { action = [&] { return emit_result(common, run_flags(sos_f, common), out, err); }; });

  auto* cov = app.add_subcommand("coverage", "Coverage of the SURE confidence regions for the loss");
  auto& cov_f = flags_for("coverage", ExperimentKind::coverage);
  add_common(cov, common);
  add_experiment(cov, cov_f);
  cov->add_option("--eps-star", cov_f.config.eps_star, "remainder level, negative = empirical surrogate");
  cov->add_option("--beta1", cov_f.config.beta1, "data-driven interval level split");
  cov->add_option("--beta2", cov_f.config.beta2, "data-driven interval level split");
  cov->callback([&] { action = [&] { return emit_result(common, run_flags(cov_f, common), out, err); }; });

  auto* ms = app.add_subcommand("model-size", "Variance of the Lasso model size against its bounds");
  auto& ms_f = flags_for("model-size", ExperimentKind::model_size);
  add_common(ms, common);
  add_experiment(ms, ms_f);
  ms->callback([&] { action = [&] { return emit_result(common, run_flags(ms_f, common), out, err); }; });

  auto* svt = app.add_subcommand("svt-df", "Regenerate a Monte Carlo degrees-of-freedom table");
  add_common(svt, common);
  svt->add_option("--estimator", estimator, "estimator")->check(CLI::IsMember({"svt", "elastic_net"}));
  svt->add_option("--n-real", n_real, "perturbation sets per m");
  svt->add_option("--m-grid", m_grid, "probe counts");
  svt->callback([&] {
    action = [&] {
      ExperimentFlags f;
      f.config = ExperimentConfig::df_table_preset(estimator);
      if (n_real > 0) f.config.n_real = n_real;
      if (!m_grid.empty()) f.config.m_grid = m_grid;
      f.config.replications = static_cast<Index>(f.config.m_grid.size()) * f.config.n_real;
      return emit_result(common, run_flags(f, common), out, err);
    };
  });

  // Data commands.
  auto* lasso = app.add_subcommand("lasso", "Fit the Lasso to CSV data");
  add_common(lasso, common);
  add_data(lasso, data, true, false);
  lasso->callback([&] {
    action = [&] {
      if (data.gamma != 0) throw CLI::ValidationError("--gamma", "the lasso takes no ridge term; use enet");
      return cmd_fit("lasso", common, data, out, err);
    };
  });

  auto* enet = app.add_subcommand("enet", "Fit the elastic net to CSV data");
  add_common(enet, common);
  add_data(enet, data, true, false);
  enet->callback([&] { action = [&] { return cmd_fit("enet", common, data, out, err); }; });

  // Commands with a data mode (--X given) and an experiment mode.
  auto* sr = app.add_subcommand("sure", "SURE of a fit, or the unbiasedness experiment without --X");
  auto& sr_f = flags_for("sure", ExperimentKind::sure_unbiased);
  add_common(sr, common);
  auto* sr_x = sr->add_option("--X", data.X_path, "design matrix CSV")->check(CLI::ExistingFile);
  sr->add_option("--y", data.y_path, "response CSV")->check(CLI::ExistingFile)->needs(sr_x);
  add_experiment(sr, sr_f);
  sr->callback([&] {
    action = [&] {
      if (data.X_path.empty()) return emit_result(common, run_flags(sr_f, common), out, err);
      data.lambda = sr_f.config.lambda;
      data.gamma = sr_f.config.gamma_en;
      data.sigma = sr_f.config.sigma;
      return cmd_sure(false, common, data, out);
    };
  });

  auto* s4 = app.add_subcommand("sure4sure", "SURE-for-SURE of a fit, or the consistency experiment without --X");
  auto& s4_f = flags_for("sure4sure", ExperimentKind::sure4sure_consistency);
  add_common(s4, common);
  auto* s4_x = s4->add_option("--X", data.X_path, "design matrix CSV")->check(CLI::ExistingFile);
  s4->add_option("--y", data.y_path, "response CSV")->check(CLI::ExistingFile)->needs(s4_x);
  add_experiment(s4, s4_f);
  s4->callback([&] {
    action = [&] {
      if (data.X_path.empty()) return emit_result(common, run_flags(s4_f, common), out, err);
      data.lambda = s4_f.config.lambda;
      data.gamma = s4_f.config.gamma_en;
      data.sigma = s4_f.config.sigma;
      return cmd_sure(true, common, data, out);
    };
  });

  auto* tune = app.add_subcommand("tune", "SURE-tuned lambda, or the oracle-gap experiment without --X");
  auto& tune_f = flags_for("tune", ExperimentKind::tune_oracle);
  add_common(tune, common);
  auto* tune_x = tune->add_option("--X", data.X_path, "design matrix CSV")->check(CLI::ExistingFile);
  tune->add_option("--y", data.y_path, "response CSV")->check(CLI::ExistingFile)->needs(tune_x);
  tune->add_option("--lambdas", lambdas, "candidate penalties");
  add_experiment(tune, tune_f);
  tune->add_option("--variant", tune_f.config.field, "experiment")->check(CLI::IsMember({"lasso_grid", "adversarial"}));
  tune->add_option("--period-exponent", tune_f.config.period_exponent, "adversarial wave period exponent");
  tune->add_option("--gap-c", tune_f.config.gap_c, "adversarial gap constant");
  tune->callback([&] {
    action = [&] {
      if (data.X_path.empty()) {
        tune_f.config.lambda_grid = lambdas;
        return emit_result(common, run_flags(tune_f, common), out, err);
      }
      data.gamma = tune_f.config.gamma_en;
      data.sigma = tune_f.config.sigma;
      return cmd_tune(common, data, lambdas, out);
    };
  });

  auto* mc = app.add_subcommand("mc-div", "Monte Carlo divergence of a fit, or its accuracy experiment without --X");
  auto& mc_f = flags_for("mc-div", ExperimentKind::mc_div_check);
  add_common(mc, common);
  auto* mc_x = mc->add_option("--X", data.X_path, "design matrix CSV")->check(CLI::ExistingFile);
  mc->add_option("--y", data.y_path, "response CSV")->check(CLI::ExistingFile)->needs(mc_x);
  add_experiment(mc, mc_f);
  mc->add_option("--map", mc_f.config.field, "experiment map")->check(CLI::IsMember({"lasso", "linear"}));
  mc->callback([&] {
    action = [&] {
      if (data.X_path.empty()) return emit_result(common, run_flags(mc_f, common), out, err);
      data.lambda = mc_f.config.lambda;
      data.gamma = mc_f.config.gamma_en;
      return cmd_mc_div(common, data, mc_f.config.m, mc_f.config.a, out);
    };
  });

  auto* db = app.add_subcommand("debias", "De-biased coordinate estimate, or the pivot experiment without --X");
  auto& db_f = flags_for("debias", ExperimentKind::debias_pivot);
  add_common(db, common);
  auto* db_x = db->add_option("--X", data.X_path, "design matrix CSV")->check(CLI::ExistingFile);
  db->add_option("--y", data.y_path, "response CSV")->check(CLI::ExistingFile)->needs(db_x);
  db->add_option("--index", index, "coordinate of beta to estimate (0-based)");
  db->add_option("--Sigma", sigma_path, "population design covariance CSV, default identity")
      ->check(CLI::ExistingFile);
  add_experiment(db, db_f);
  db->callback([&] {
    action = [&] {
      if (data.X_path.empty()) return emit_result(common, run_flags(db_f, common), out, err);
      data.lambda = db_f.config.lambda;
      data.gamma = db_f.config.gamma_en;
      data.sigma = db_f.config.sigma;
      return cmd_debias(common, data, index, sigma_path, db_f.config.m, out, err);
    };
  });

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  add_common(run, common);
  run->add_option("--config", config_path, "experiment config JSON")->required()->check(CLI::ExistingFile);
  run->callback([&] {
    action = [&] {
      ExperimentFlags f;
      f.config = config_from_json(read_file(config_path));
      f.config.threads = common.threads;
      if (common.seed_set) f.config.seed = common.seed;
      return emit_result(common, run_experiment(f.config), out, err);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitPass;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace stein
