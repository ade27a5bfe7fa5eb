// Acceptance suite: one PASS/FAIL line per criterion. By default the exit
// status only reports whether the suite ran; --strict also fails on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "stein/debias.hpp"
#include "stein/experiments.hpp"
#include "stein/harness.hpp"
#include "stein/io.hpp"
#include "stein/solvers.hpp"
#include "stein/stats.hpp"
#include "stein/sure.hpp"

using namespace stein;

namespace {

// Tolerances.
constexpr double kZ = 4.0;                  // Monte Carlo threshold in SEs
constexpr double kExact = 1e-10;            // closed-form algebra
constexpr double kSosSeconds = 30.0;        // criterion 1 runtime
constexpr double kUnbiasedSeconds = 300.0;  // criterion 3 runtime
constexpr double kCoverageLow = 0.92, kCoverageHigh = 0.98, kUpperCoverage = 0.93;
constexpr double kDfRelBias = 0.01, kSdRatioLow = 1.4, kSdRatioHigh = 2.8;
constexpr double kAdversarialFreq = 0.05;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string verdict_text(const Verdict& v) {
  return v.invariant + " " + fmt(v.statistic) + " vs " + fmt(v.threshold);
}

void require_verdict(Outcome& o, const ResultSet& rs, const std::string& name, const std::string& label = "") {
  const Verdict& v = rs.verdict(name);
  o.require(v.pass, (label.empty() ? "" : label + " ") + verdict_text(v));
}

ExperimentConfig base(ExperimentKind kind) {
  ExperimentConfig c = ExperimentConfig::defaults_for(kind);
  c.seed = kSeed;
  return c;
}

// 1. Second-order Stein identity over the six-field corpus.
Outcome sos_corpus() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_z = 0.0;
  std::string worst;
  for (Index n : {5, 20}) {
    for (const char* field : {"identity", "constant", "linear", "soft_threshold", "lasso_residual", "enet_residual"}) {
      ExperimentConfig c = base(ExperimentKind::sos_verify);
      c.field = field;
      c.n = n;
      c.p = 2 * n;
      c.s0 = 2;
      c.replications = 100000;
      if (c.field == "enet_residual") c.gamma_en = 0.5 * static_cast<double>(n);
      const ResultSet rs = run_experiment(c);
      const Verdict& v = rs.verdict("sos_identity");
      if (!v.pass || !rs.verdict("replication_failure_rate").pass)
        o.require(false, std::string(field) + " n=" + std::to_string(n) + " " + verdict_text(v));
      if (v.statistic > worst_z) {
        worst_z = v.statistic;
        worst = std::string(field) + " n=" + std::to_string(n);
      }
      const double nn = static_cast<double>(n);
      if (c.field == "identity") {
        // Both sides have mean 2n; each has variance of order n^2.
        const Summary l = summarize(std::vector<double>([&] {
          std::vector<double> v;
          for (const auto& r : rs.records) v.push_back(r[0]);
          return v;
        }()));
        o.require(std::abs(l.mean - 2 * nn) <= kZ * l.se && std::abs(rs.stat("sos_identity_rhs_mean") - 2 * nn) <= kZ * l.se,
                  "identity n=" + std::to_string(n) + " means " + fmt(l.mean) + ", " +
                      fmt(rs.stat("sos_identity_rhs_mean")) + " vs 2n");
      }
      if (c.field == "constant") {
        // rhs = ||c||^2 on every draw.
        const double c2 = rs.records.front()[1];
        double spread = 0.0;
        std::vector<double> lhs;
        for (const auto& r : rs.records) {
          spread = std::max(spread, std::abs(r[1] - c2));
          lhs.push_back(r[0]);
        }
        const Summary l = summarize(lhs);
        o.require(spread <= kExact * c2 && std::abs(l.mean - c2) <= kZ * l.se,
                  "constant n=" + std::to_string(n) + " rhs fixed at ||c||^2=" + fmt(c2));
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(true, "max |z| " + fmt(worst_z, 3) + " (" + worst + ")");
  o.require(secs < kSosSeconds, "runtime " + fmt(secs, 3) + " s < " + fmt(kSosSeconds) + " s");
  return o;
}

// 2. Exact SURE algebra.
Outcome sure_algebra() {
  Outcome o;
  double worst = 0.0;
  RngStream s(kSeed, 2);
  for (int k = 0; k < 100; ++k) {
    const Index n = 1 + static_cast<Index>(s() % 50);
    const double sigma = 0.5 + s.uniform() * 2.0;
    const Vec y = sample_gaussian_vector(s, n, 3.0);
    const double nn = static_cast<double>(n), s2 = sigma * sigma;
    // mu_hat = y: df = n and trace((grad)^2) = n.
    const auto r = sure_for_sure(y, y, nn, nn, sigma);
    worst = std::max({worst, std::abs(r.sure - s2 * nn) / (s2 * nn), std::abs(r.r_hat - 2 * s2 * s2 * nn) / (s2 * s2 * nn)});
  }
  o.require(worst <= kExact, "identity estimator over 100 draws, max rel err " + fmt(worst, 2));

  const Mat X = std::sqrt(2.0) * Mat::Identity(2, 2);
  Vec y(2);
  y << 3.0, 0.5;
  const Fit fit = fit_lasso<double>(X, y, 1.0);
  const auto r = sure_for_sure(fit, y, 1.0);
  o.require(std::abs(r.sure - 2.25) <= kExact && std::abs(r.r_hat - 9.0) <= kExact && std::abs(r.r_prime - 9.0) <= kExact,
            "orthogonal example SURE " + fmt(r.sure, 12) + ", R_hat " + fmt(r.r_hat, 12) + ", R_prime " +
                fmt(r.r_prime, 12));
  return o;
}

// 3. Unbiasedness of SURE and SURE-for-SURE.
Outcome unbiasedness() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = base(ExperimentKind::sure_unbiased);
  c.n = 100;
  c.p = 200;
  c.s0 = 5;
  c.sigma = 1.0;
  c.replications = 5000;
  const ResultSet rs = run_experiment(c);
  require_verdict(o, rs, "sure_unbiased");
  require_verdict(o, rs, "sure4sure_unbiased");
  require_verdict(o, rs, "replication_failure_rate");
  const double secs = seconds_since(t0);
  o.require(secs < kUnbiasedSeconds, "runtime " + fmt(secs, 3) + " s");
  return o;
}

// 4. Consistency of SURE-for-SURE.
Outcome consistency() {
  Outcome o;
  double value[2];
  int k = 0;
  for (Index n : {100, 400}) {
    ExperimentConfig c = base(ExperimentKind::sure4sure_consistency);
    c.n = n;
    c.p = 200;
    c.s0 = 5;
    c.replications = 2000;
    const ResultSet rs = run_experiment(c);
    require_verdict(o, rs, "sure4sure_consistency", "n=" + std::to_string(n));
    value[k++] = rs.stat("relative_sq_error");
  }
  o.require(value[1] <= 0.5 * value[0], "n=400 / n=100 ratio " + fmt(value[1] / value[0], 3) + " <= 0.5");
  return o;
}

// 5. Confidence regions for the loss.
Outcome coverage() {
  Outcome o;
  ExperimentConfig c = base(ExperimentKind::coverage);
  c.n = 500;
  c.p = 100;
  c.s0 = 1;
  c.alpha = 0.05;
  c.replications = 2000;
  const double sparsity = static_cast<double>(c.s0) * std::log(static_cast<double>(c.p)) / static_cast<double>(c.n);
  o.require(sparsity <= 0.05, "s0 log p / n = " + fmt(sparsity, 3));
  const ResultSet rs = run_experiment(c);
  const double two = rs.stat("coverage_two_sided"), up = rs.stat("coverage_upper");
  o.require(two >= kCoverageLow && two <= kCoverageHigh, "two-sided " + fmt(two) + " in [0.92, 0.98]");
  o.require(up >= kUpperCoverage, "one-sided " + fmt(up) + " >= 0.93");
  return o;
}

// 6. Model-size variance bounds over six configurations.
Outcome model_size() {
  Outcome o;
  struct Grid {
    std::string label;
    DesignKind design;
    double rho;
    Index n, p, s0;
    double amplitude;
    double lambda_factor;  // times sigma sqrt(2 log p / n); 0 = restricted-eigenvalue default
    BetaKind beta;
  };
  const std::vector<Grid> grid{
      {"orthonormal near-threshold", DesignKind::orthonormal, 0.0, 500, 200, 20, 0.15, 0.0, BetaKind::spiked},
      {"orthonormal default", DesignKind::orthonormal, 0.0, 500, 500, 5, 1.0, 0.0, BetaKind::spiked},
      {"iid small lambda", DesignKind::iid_gaussian, 0.0, 100, 200, 5, 1.0, 0.5, BetaKind::spiked},
      {"iid universal lambda", DesignKind::iid_gaussian, 0.0, 200, 500, 10, 1.0, 1.0, BetaKind::spiked},
      {"equicorrelated", DesignKind::equicorrelated, 0.5, 100, 200, 5, 1.0, 1.0, BetaKind::spiked},
      {"null beta", DesignKind::iid_gaussian, 0.0, 100, 300, 0, 1.0, 0.5, BetaKind::zeros},
  };
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Grid& g = grid[k];
    ExperimentConfig c = base(ExperimentKind::model_size);
    c.design = {g.design, g.rho};
    c.n = g.n;
    c.p = g.p;
    c.s0 = g.s0;
    c.beta = {g.beta, g.amplitude, ""};
    c.replications = 1000;
    const double universal = std::sqrt(2.0 * std::log(static_cast<double>(g.p)) / static_cast<double>(g.n));
    c.lambda = k == 0 ? 0.1 : g.lambda_factor * universal;
    const ResultSet rs = run_experiment(c);
    require_verdict(o, rs, "model_size_variance_bound", g.label);
    if (k == 0) {
      require_verdict(o, rs, "bernoulli_variance_match", g.label);
      require_verdict(o, rs, "bernoulli_mean_match", g.label);
      o.require(rs.stat("var_size") > 1.0, g.label + " Var(|S|) " + fmt(rs.stat("var_size")) + " is nondegenerate");
    }
  }
  return o;
}

// 7. Expected sparsity bound at orthonormal designs.
Outcome sparsity_bound() {
  Outcome o;
  for (Index s0 : {1, 5, 10}) {
    ExperimentConfig c = base(ExperimentKind::model_size);
    c.design = {DesignKind::orthonormal, 0.0};
    c.n = 500;
    c.p = 500;
    c.s0 = s0;
    c.lambda = 0.0;
    c.replications = 500;
    const ResultSet rs = run_experiment(c);
    require_verdict(o, rs, "expected_sparsity_bound", "s0=" + std::to_string(s0));
  }
  return o;
}

// 8. Monte Carlo divergence.
Outcome mc_divergence_suite() {
  Outcome o;
  ExperimentConfig lin = base(ExperimentKind::mc_div_check);
  lin.field = "linear";
  lin.n = 50;
  lin.m = 100;
  lin.replications = 500;
  const ResultSet rl = run_experiment(lin);
  require_verdict(o, rl, "mc_linear_mean", "linear");
  require_verdict(o, rl, "mc_linear_within_4se", "linear");

  ExperimentConfig las = base(ExperimentKind::mc_div_check);
  las.field = "lasso";
  las.n = 100;
  las.p = 200;
  las.m = 100;
  las.replications = 20;
  const ResultSet rlas = run_experiment(las);
  require_verdict(o, rlas, "mc_markov_check", "lasso");

  for (const std::string est : {"svt", "elastic_net"}) {
    ExperimentConfig t = ExperimentConfig::df_table_preset(est);
    t.seed = kSeed;
    const ResultSet rs = run_experiment(t);
    const Verdict& bias = rs.verdict("df_table_relative_bias");
    o.require(bias.statistic <= kDfRelBias,
              est + " df_exact " + fmt(rs.stat("df_exact"), 6) + ", rel bias " + fmt(bias.statistic, 3));
    for (const char* m : {"10", "25"}) {
      const Verdict& r = rs.verdict(std::string("df_table_sd_ratio_m") + m);
      o.require(r.statistic >= kSdRatioLow && r.statistic <= kSdRatioHigh,
                est + " sd(" + m + ")/sd(4x" + m + ") " + fmt(r.statistic, 3));
    }
  }
  return o;
}

// 9. De-biased estimation.
Outcome debias() {
  Outcome o;
  ExperimentConfig c = base(ExperimentKind::debias_pivot);
  c.n = 200;
  c.p = 300;
  c.s0 = 5;
  c.replications = 2000;
  const ResultSet rs = run_experiment(c);
  require_verdict(o, rs, "pivot_mean_zero");
  require_verdict(o, rs, "pivot_variance");
  require_verdict(o, rs, "replication_failure_rate");

  // One covariate, no penalty: the estimate is least squares.
  RngStream s(kSeed, 9);
  Problem prob;
  prob.X = gaussian_design(s, 30, 1, Mat::Identity(1, 1));
  prob.beta = Vec::Constant(1, 2.0);
  prob.y = prob.X * *prob.beta + sample_gaussian_vector(s, 30, 1.0);
  const Fit fit = fit_lasso(prob, 0.0);
  const Direction d = direction_setup(Vec::Constant(1, 1.0), Mat::Identity(1, 1), prob.X);
  const DebiasReport r = debias_theta(prob, fit, d, RngStream(kSeed, 10));
  const double ols = prob.X.col(0).dot(prob.y) / prob.X.col(0).squaredNorm();
  const double err = std::abs(r.theta_hat - ols);
  o.require(err <= kExact * std::abs(ols) && r.nu_hat == 0.0 && r.a_hat == 0.0 && r.b_hat == 0.0,
            "scalar OLS |theta_hat - ols| " + fmt(err, 2));
  return o;
}

// 10. SURE-tuned selection.
Outcome selection() {
  Outcome o;
  ExperimentConfig g = base(ExperimentKind::tune_oracle);
  g.field = "lasso_grid";
  g.n = 100;
  g.p = 200;
  g.s0 = 5;
  g.alpha = 0.1;
  g.replications = 500;
  const ResultSet rg = run_experiment(g);
  o.require(rg.fields.size() == 3 + 8, "8 candidates");
  require_verdict(o, rg, "oracle_gap_exceedance");

  ExperimentConfig a = base(ExperimentKind::tune_oracle);
  a.field = "adversarial";
  a.n = 4096;
  a.period_exponent = -20;
  a.gap_c = 0.9;
  a.replications = 1000;
  const ResultSet ra = run_experiment(a);
  const Verdict& v = ra.verdict("adversarial_gap_frequency");
  o.require(v.statistic >= kAdversarialFreq, "adversarial gap >= 0.9 sigma n^(1/4) in " + fmt(v.statistic, 3));
  return o;
}

// 11. Determinism and CSV round trip.
Outcome determinism() {
  Outcome o;
  ExperimentConfig c = base(ExperimentKind::coverage);
  c.n = 100;
  c.p = 50;
  c.s0 = 2;
  c.replications = 300;
  c.threads = 1;
  const std::string a = result_json(run_experiment(c));
  c.threads = 0;
  const std::string b = result_json(run_experiment(c));
  o.require(a == b, "experiment JSON identical across runs and thread counts (" + std::to_string(a.size()) + " bytes)");

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "stein_acceptance";
  fs::create_directories(dir);
  const std::string p1 = (dir / "r1.json").string(), p2 = (dir / "r2.json").string();
  const std::vector<std::string> args1{"stein-cli", "mc-div", "--map", "linear", "--n", "8", "--reps", "50", "--out", p1};
  std::vector<std::string> args2 = args1;
  args2.back() = p2;
  std::ostringstream sink;
  auto run = [&](const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), sink, sink);
  };
  const int c1 = run(args1), c2 = run(args2);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  o.require(c1 == 0 && c2 == 0 && slurp(p1) == slurp(p2) && !slurp(p1).empty(), "CLI output files identical");

  RngStream s(kSeed, 11);
  bool exact = true;
  for (auto [r, k] : {std::pair<Index, Index>{5, 7}, {50, 30}}) {
    Mat M(r, k);
    for (Index i = 0; i < M.size(); ++i) M.data()[i] = s.gaussian() * std::exp(10.0 * s.gaussian());
    const std::string path = (dir / "m.csv").string();
    save_matrix_csv(path, M);
    exact = exact && load_matrix_csv(path) == M;
  }
  o.require(exact, "CSV round trip exact for 5x7 and 50x30");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"second-order Stein identity corpus", sos_corpus},
      {"SURE exact algebra", sure_algebra},
      {"SURE and SURE-for-SURE unbiasedness", unbiasedness},
      {"SURE-for-SURE consistency", consistency},
      {"loss confidence regions", coverage},
      {"model-size variance bounds", model_size},
      {"expected sparsity bound", sparsity_bound},
      {"Monte Carlo divergence", mc_divergence_suite},
      {"de-biased estimation", debias},
      {"SURE-tuned selection", selection},
      {"determinism and CSV I/O", determinism},
  };
  int passed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    passed += o.pass;
    std::printf("%s %2zu %s [%.1fs]: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", passed, criteria.size());
  return !strict || passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
