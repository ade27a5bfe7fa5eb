#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stein/designs.hpp"
#include "stein/io.hpp"

namespace stein {

enum class ExperimentKind {
  sos_verify,
  sure_unbiased,
  sure4sure_consistency,
  coverage,
  model_size,
  df_table,
  tune_oracle,
  debias_pivot,
  mc_div_check
};

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

// lambda follows the ||Xb - y||^2 / (2n) + lambda ||b||_1 convention; the
// elastic net adds gamma_en ||b||^2 / (2n). lambda = 0 selects the kind's
// default: sigma sqrt(2 log p / n), or for model_size
// 4 sigma sqrt(2 log(e p / (s0 v 1)) / n).
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::sos_verify;
  Index n = 100;
  Index p = 200;
  Index s0 = 5;
  double sigma = 1.0;
  double lambda = 0.0;
  double gamma_en = 0.0;
  double alpha = 0.05;
  Index replications = 1000;
  std::uint64_t seed = 1;
  DesignSpec design;
  BetaSpec beta;
  unsigned threads = 0;

  // Kind-specific knobs.
  std::string field = "";  // sos corpus field, tune variant, df estimator or mc map
  double threshold = 1.0;  // soft-threshold field level, in units of sigma
  Index m = 100;           // Monte Carlo probes
  double a = 0.0;          // perturbation step, 0 = default
  std::vector<double> lambda_grid;
  int period_exponent = -20;
  double gap_c = 0.9;
  double beta1 = 0.05;
  double beta2 = 0.05;
  double eps_star = 0.0;
  std::vector<Index> m_grid;
  Index n_real = 50;
  Index rank = 10;

  void validate() const;
  double effective_lambda() const;
  std::string effective_field() const;

  static ExperimentConfig defaults_for(ExperimentKind kind);
  // df_table presets: field "svt" or "elastic_net".
  static ExperimentConfig df_table_preset(const std::string& estimator);
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);

struct Verdict {
  std::string invariant;
  bool pass = false;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ResultSet {
  ExperimentConfig config;
  std::vector<std::string> fields;
  std::vector<std::vector<double>> records;
  std::vector<std::pair<std::string, double>> summary;
  std::vector<Verdict> verdicts;
  Index failures = 0;
  std::vector<std::string> failure_messages;  // first few, by replication index
  double wall_clock_seconds = 0.0;

  bool passed() const;
  double stat(const std::string& key) const;
  const Verdict& verdict(const std::string& invariant) const;
  Table records_table() const;
};

// Replication i draws from RngStream(seed, i); data shared across
// replications come from the reserved stream id 2^64 - 1. A replication that
// throws is recorded as a NaN row; more than 1% failures fails the run.
ResultSet run_experiment(const ExperimentConfig& config);

// "schema": "stein-sure/1". Wall-clock time is written only when asked, so
// that repeated runs produce identical bytes.
std::string result_json(const ResultSet& result, bool include_timing = false);
void save_results_json(const std::string& path, const ResultSet& result, bool include_timing = false);

}  // namespace stein
