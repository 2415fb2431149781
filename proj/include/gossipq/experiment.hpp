#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gossipq/consensus.hpp"
#include "gossipq/data.hpp"
#include "gossipq/graph.hpp"
#include "gossipq/metrics.hpp"
#include "gossipq/regress.hpp"

namespace gq {

/// Everything a subcommand needs. Each command reads the fields it uses and
/// ignores the rest; the whole output is a pure function of this struct.
struct ExperimentConfig {
  std::string command = "simulate";
  TopologySpec topology{TopologyKind::geometric, 101, 0.0, 507};
  DataSpec data;
  std::vector<std::string> algorithms{"AsylADMM", "DAPD", "AsyncADMM", "Subgradient"};
  double alpha = 0.5;  ///< quantile level (simulate, sync-compare) or trimming level
  int trials = 20;
  std::int64_t budget = 200000;
  std::int64_t eval_every = 1000;
  std::string grid = "linear";  ///< "linear" (every eval_every) or "geometric"
  int grid_points = 60;
  double rho_lo = 0.1;  ///< per-trial step drawn from U[rho_lo, rho_hi]
  double rho_hi = 1.0;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  // depth
  double depth_rho = 20.0;  ///< AsylADMM step on the depth scale

  // sync-compare
  std::int64_t theory_rounds = 2000;

  // spectral
  int spectral_max_n = 4;

  // bounds
  std::vector<TopologySpec> bound_graphs{{TopologyKind::complete, 4}, {TopologyKind::cycle, 5}};
  std::vector<std::int64_t> bound_times{50, 200, 1000};
  std::int64_t bound_trials = 2000;

  // regress
  RegressionSpec regression;
  std::vector<double> p_values{1.0, 3.0, 4.0};
  double regress_rho = 0.09;
  double regress_quantile_rho = 1.0;
  std::string regress_schedule = "simultaneous";
  std::int64_t estimation_steps = 20000;
};

ExperimentConfig default_config(const std::string& command);
/// Starts from default_config(j["command"] or `command`) and overrides the
/// keys present in `j`. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& command);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

struct SeriesRecord {
  std::string label;
  int trial = 0;
  MetricSeries series;
};

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string hash;
  nlohmann::json meta;
  std::vector<SeriesRecord> runs;        ///< per-trial series, ordered by (trial, label)
  std::vector<MetricSeries> aggregates;  ///< one per label, in first-seen order
  std::vector<Table> tables;
};

/// Parses "Name" or "Name@step" (fixed step overriding the per-trial draw).
struct AlgorithmEntry {
  std::string label;
  Algorithm algorithm;
  std::optional<double> step;
};
AlgorithmEntry parse_algorithm_entry(const std::string& text);

std::vector<std::int64_t> checkpoint_grid(const ExperimentConfig& cfg);

/// Runs cfg.command. Trials run on cfg.threads workers; results are keyed by
/// trial index so the output does not depend on scheduling.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::vector<std::string> experiment_commands();

/// Decimal rendering used in every CSV: "%.10g", with inf/nan spelled out.
std::string format_number(double v);

}  // namespace gq
