#include "gossipq/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "gossipq/prox.hpp"
#include "gossipq/ranktrim.hpp"
#include "gossipq/theory.hpp"

namespace gq {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> experiment_commands() {
  return {"simulate", "trim", "depth", "geomed", "spectral", "bounds", "regress", "sync-compare"};
}

ExperimentConfig default_config(const std::string& command) {
  ExperimentConfig cfg;
  cfg.command = command;
  if (command == "simulate") {
  } else if (command == "geomed") {
    cfg.data.kind = DataKind::arc2d;
    cfg.data.contamination = 0.3;
    cfg.algorithms = {"AsylADMM", "DAPD", "AsyncADMM"};
  } else if (command == "trim") {
    cfg.alpha = 0.3;
  } else if (command == "depth") {
    cfg.data.kind = DataKind::arc2d;
    cfg.alpha = 0.3;
  } else if (command == "sync-compare") {
    cfg.algorithms = {"AsylADMM", "SyncADMM"};
    cfg.budget = 507 * 200;
    cfg.theory_rounds = 2000;
  } else if (command == "spectral") {
    cfg.trials = 1;
  } else if (command == "bounds") {
    cfg.alpha = 0.25;
    cfg.trials = 1;
  } else if (command == "regress") {
    cfg.alpha = 0.2;
    cfg.trials = 10;
    cfg.eval_every = 2000;
  } else {
    throw InvalidArgument("unknown command: " + command);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!ok.count(key)) throw InvalidArgument("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json topology_to_json(const TopologySpec& t) {
  return {{"kind", to_string(t.kind)}, {"n", t.n},          {"radius", t.radius},   {"target_edges", t.target_edges},
          {"ring_degree", t.ring_degree}, {"rewire", t.rewire}, {"max_attempts", t.max_attempts}};
}

TopologySpec topology_from_json(const json& j, TopologySpec t) {
  check_keys(j, {"kind", "n", "radius", "target_edges", "ring_degree", "rewire", "max_attempts"}, "topology");
  if (j.contains("kind")) t.kind = topology_from_string(j.at("kind").get<std::string>());
  take(j, "n", t.n);
  take(j, "radius", t.radius);
  take(j, "target_edges", t.target_edges);
  take(j, "ring_degree", t.ring_degree);
  take(j, "rewire", t.rewire);
  take(j, "max_attempts", t.max_attempts);
  return t;
}

json data_to_json(const DataSpec& d) {
  return {{"distribution", to_string(d.kind)},
          {"contamination", d.contamination},
          {"clean_mean", d.clean_mean},
          {"clean_sd", d.clean_sd},
          {"outlier_mean", d.outlier_mean},
          {"outlier_sd", d.outlier_sd},
          {"cauchy_scale", d.cauchy_scale},
          {"mu", {d.mu(0), d.mu(1)}},
          {"sigma", {{d.sigma(0, 0), d.sigma(0, 1)}, {d.sigma(1, 0), d.sigma(1, 1)}}},
          {"arc_radius", d.arc_radius},
          {"arc_lo", d.arc_lo},
          {"arc_hi", d.arc_hi}};
}

DataSpec data_from_json(const json& j, DataSpec d) {
  check_keys(j,
             {"distribution", "contamination", "clean_mean", "clean_sd", "outlier_mean", "outlier_sd", "cauchy_scale",
              "mu", "sigma", "arc_radius", "arc_lo", "arc_hi"},
             "data");
  if (j.contains("distribution")) d.kind = data_kind_from_string(j.at("distribution").get<std::string>());
  take(j, "contamination", d.contamination);
  take(j, "clean_mean", d.clean_mean);
  take(j, "clean_sd", d.clean_sd);
  take(j, "outlier_mean", d.outlier_mean);
  take(j, "outlier_sd", d.outlier_sd);
  take(j, "cauchy_scale", d.cauchy_scale);
  if (j.contains("mu")) {
    const auto mu = j.at("mu").get<std::vector<double>>();
    require(mu.size() == 2, "mu must have two entries");
    d.mu = {mu[0], mu[1]};
  }
  if (j.contains("sigma")) {
    const auto s = j.at("sigma").get<std::vector<std::vector<double>>>();
    require(s.size() == 2 && s[0].size() == 2 && s[1].size() == 2, "sigma must be 2 x 2");
    d.sigma << s[0][0], s[0][1], s[1][0], s[1][1];
  }
  take(j, "arc_radius", d.arc_radius);
  take(j, "arc_lo", d.arc_lo);
  take(j, "arc_hi", d.arc_hi);
  return d;
}

json regression_to_json(const RegressionSpec& r) {
  return {{"n", r.n},
          {"contamination", r.contamination},
          {"x_lo", r.x_lo},
          {"x_hi", r.x_hi},
          {"x_power", r.x_power},
          {"slope_lo", r.slope_lo},
          {"slope_hi", r.slope_hi},
          {"intercept_lo", r.intercept_lo},
          {"intercept_hi", r.intercept_hi},
          {"noise_sd", r.noise_sd},
          {"outlier_y_mean", r.outlier_y_mean},
          {"outlier_y_sd", r.outlier_y_sd}};
}

RegressionSpec regression_from_json(const json& j, RegressionSpec r) {
  check_keys(j,
             {"n", "contamination", "x_lo", "x_hi", "x_power", "slope_lo", "slope_hi", "intercept_lo", "intercept_hi", "noise_sd",
              "outlier_y_mean", "outlier_y_sd"},
             "regression");
  take(j, "n", r.n);
  take(j, "contamination", r.contamination);
  take(j, "x_lo", r.x_lo);
  take(j, "x_hi", r.x_hi);
  take(j, "x_power", r.x_power);
  take(j, "slope_lo", r.slope_lo);
  take(j, "slope_hi", r.slope_hi);
  take(j, "intercept_lo", r.intercept_lo);
  take(j, "intercept_hi", r.intercept_hi);
  take(j, "noise_sd", r.noise_sd);
  take(j, "outlier_y_mean", r.outlier_y_mean);
  take(j, "outlier_y_sd", r.outlier_y_sd);
  return r;
}

}  // namespace

json config_to_json(const ExperimentConfig& cfg) {
  json bound_graphs = json::array();
  for (const auto& t : cfg.bound_graphs) bound_graphs.push_back(topology_to_json(t));
  return {{"command", cfg.command},
          {"topology", topology_to_json(cfg.topology)},
          {"data", data_to_json(cfg.data)},
          {"algorithms", cfg.algorithms},
          {"alpha", cfg.alpha},
          {"trials", cfg.trials},
          {"budget", cfg.budget},
          {"eval_every", cfg.eval_every},
          {"grid", cfg.grid},
          {"grid_points", cfg.grid_points},
          {"rho_lo", cfg.rho_lo},
          {"rho_hi", cfg.rho_hi},
          {"seed", cfg.seed},
          {"threads", cfg.threads},
          {"depth_rho", cfg.depth_rho},
          {"theory_rounds", cfg.theory_rounds},
          {"spectral_max_n", cfg.spectral_max_n},
          {"bound_graphs", bound_graphs},
          {"bound_times", cfg.bound_times},
          {"bound_trials", cfg.bound_trials},
          {"regression", regression_to_json(cfg.regression)},
          {"p_values", cfg.p_values},
          {"regress_rho", cfg.regress_rho},
          {"regress_quantile_rho", cfg.regress_quantile_rho},
          {"regress_schedule", cfg.regress_schedule},
          {"estimation_steps", cfg.estimation_steps}};
}

ExperimentConfig config_from_json(const json& j, const std::string& command) {
  check_keys(j,
             {"command", "topology", "data", "algorithms", "alpha", "trials", "budget", "eval_every", "grid",
              "grid_points", "rho_lo", "rho_hi", "seed", "threads", "depth_rho", "theory_rounds", "spectral_max_n",
              "bound_graphs", "bound_times", "bound_trials", "regression", "p_values", "regress_rho",
              "regress_quantile_rho", "regress_schedule", "estimation_steps"},
             "config");
  std::string cmd = command;
  if (j.contains("command")) {
    const auto named = j.at("command").get<std::string>();
    require(command.empty() || named == command, "config is for '" + named + "', not '" + command + "'");
    cmd = named;
  }
  ExperimentConfig cfg = default_config(cmd);
  if (j.contains("topology")) cfg.topology = topology_from_json(j.at("topology"), cfg.topology);
  if (j.contains("data")) cfg.data = data_from_json(j.at("data"), cfg.data);
  take(j, "algorithms", cfg.algorithms);
  take(j, "alpha", cfg.alpha);
  take(j, "trials", cfg.trials);
  take(j, "budget", cfg.budget);
  take(j, "eval_every", cfg.eval_every);
  take(j, "grid", cfg.grid);
  take(j, "grid_points", cfg.grid_points);
  take(j, "rho_lo", cfg.rho_lo);
  take(j, "rho_hi", cfg.rho_hi);
  take(j, "seed", cfg.seed);
  take(j, "threads", cfg.threads);
  take(j, "depth_rho", cfg.depth_rho);
  take(j, "theory_rounds", cfg.theory_rounds);
  take(j, "spectral_max_n", cfg.spectral_max_n);
  if (j.contains("bound_graphs")) {
    cfg.bound_graphs.clear();
    for (const auto& t : j.at("bound_graphs")) cfg.bound_graphs.push_back(topology_from_json(t, TopologySpec{}));
  }
  take(j, "bound_times", cfg.bound_times);
  take(j, "bound_trials", cfg.bound_trials);
  if (j.contains("regression")) cfg.regression = regression_from_json(j.at("regression"), cfg.regression);
  take(j, "p_values", cfg.p_values);
  take(j, "regress_rho", cfg.regress_rho);
  take(j, "regress_quantile_rho", cfg.regress_quantile_rho);
  take(j, "regress_schedule", cfg.regress_schedule);
  take(j, "estimation_steps", cfg.estimation_steps);
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

AlgorithmEntry parse_algorithm_entry(const std::string& text) {
  const auto at = text.find('@');
  AlgorithmEntry entry;
  entry.label = text;
  entry.algorithm = algorithm_from_string(text.substr(0, at));
  if (at != std::string::npos) {
    std::size_t used = 0;
    const std::string number = text.substr(at + 1);
    double step = 0.0;
    try {
      step = std::stod(number, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == number.size() && step > 0.0, "bad step in algorithm entry: " + text);
    entry.step = step;
  }
  return entry;
}

std::vector<std::int64_t> checkpoint_grid(const ExperimentConfig& cfg) {
  if (cfg.grid == "geometric") return geometric_checkpoints(cfg.budget, cfg.grid_points);
  require(cfg.grid == "linear", "grid must be 'linear' or 'geometric'");
  return linear_checkpoints(cfg.budget, cfg.eval_every);
}

// ---------------------------------------------------------------------------
// Trial plumbing

namespace {

struct TrialOutput {
  std::vector<SeriesRecord> runs;
  std::map<std::string, std::vector<std::vector<std::string>>> rows;
};

template <typename Body>
std::vector<TrialOutput> run_trials(int trials, unsigned threads, Body body) {
  require(trials > 0, "at least one trial required");
  std::vector<TrialOutput> out(static_cast<std::size_t>(trials));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int t = next++; t < trials; t = next++) {
      try {
        out[static_cast<std::size_t>(t)] = body(t);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned count = std::max(1U, std::min(threads, static_cast<unsigned>(trials)));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < count; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Rng trial_stream(const ExperimentConfig& cfg, int trial) {
  return Rng(cfg.seed).split("trial").split(static_cast<std::uint64_t>(trial));
}

double draw_rho(const ExperimentConfig& cfg, Rng rng) {
  require(cfg.rho_lo > 0.0 && cfg.rho_hi >= cfg.rho_lo, "step range must satisfy 0 < rho_lo <= rho_hi");
  if (cfg.rho_hi == cfg.rho_lo) return cfg.rho_lo;
  return rng.uniform(cfg.rho_lo, cfg.rho_hi);
}

Graph shared_topology(const ExperimentConfig& cfg) { return build_topology(cfg.topology, Rng(cfg.seed).split("topology")); }

std::vector<Pinball> pinballs(const NodeMatrix& data, double alpha) {
  std::vector<Pinball> out;
  for (Index k = 0; k < data.rows(); ++k) out.emplace_back(data(k, 0), alpha);
  return out;
}

std::vector<Euclidean> euclideans(const NodeMatrix& data) {
  std::vector<Euclidean> out;
  for (Index k = 0; k < data.rows(); ++k) out.emplace_back(data.row(k));
  return out;
}

SeriesRecord record(std::string label, int trial, MetricSeries series) {
  series.label = label;
  return {std::move(label), trial, std::move(series)};
}

/// Gossip averaging of the raw data: the decentralized (corrupted) mean.
MetricSeries run_plain_average(const Graph& g, NodeMatrix x, const RowVector& truth, const EdgeDistribution& dist,
                               const std::vector<std::int64_t>& grid, Rng edge_rng) {
  MetricSeries out;
  std::int64_t done = 0;
  for (const std::int64_t cp : grid) {
    for (; done < cp; ++done) {
      const auto [i, j] = g.edge(dist.sample(edge_rng));
      const RowVector avg = 0.5 * (x.row(i) + x.row(j));
      x.row(i) = avg;
      x.row(j) = avg;
    }
    out.checkpoints.push_back(node_error(x, truth, cp));
  }
  return out;
}

Checkpoint vector_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth, std::int64_t t) {
  const Eigen::VectorXd err = (estimate - truth).cwiseAbs();
  const double mean = err.mean();
  return {t, mean, std::sqrt((err.array() - mean).square().mean())};
}

// ---------------------------------------------------------------------------
// Commands

TrialOutput consensus_trial(const ExperimentConfig& cfg, const Graph& g, const EdgeDistribution& dist,
                            const std::vector<std::int64_t>& grid, int trial) {
  const Rng tr = trial_stream(cfg, trial);
  const NodeMatrix data = generate_data(cfg.data, g.num_nodes(), tr.split("data"));
  const double rho = draw_rho(cfg, tr.split("rho"));
  const bool vector_problem = cfg.command == "geomed";
  const RowVector truth = vector_problem ? exact_target({TargetKind::geometric_median, 0.0}, data)
                                         : exact_target({TargetKind::quantile, cfg.alpha}, data);
  const auto p_objs = vector_problem ? std::vector<Pinball>{} : pinballs(data, cfg.alpha);
  const auto e_objs = vector_problem ? euclideans(data) : std::vector<Euclidean>{};
  TrialOutput out;
  for (const auto& text : cfg.algorithms) {
    const auto entry = parse_algorithm_entry(text);
    RunOptions opts;
    opts.rho = entry.step.value_or(rho);
    opts.checkpoints = grid;
    MetricSeries s = vector_problem
                         ? run(entry.algorithm, g, std::span<const Euclidean>(e_objs), truth, dist, opts, tr.split("edges"))
                         : run(entry.algorithm, g, std::span<const Pinball>(p_objs), truth, dist, opts, tr.split("edges"));
    out.runs.push_back(record(vector_problem ? "Multi" + entry.label : entry.label, trial, std::move(s)));
  }
  out.rows["trials"].push_back({std::to_string(trial), format_number(rho), format_number(truth(0)),
                                format_number(truth.size() > 1 ? truth(1) : 0.0)});
  return out;
}

TrialOutput trim_trial(const ExperimentConfig& cfg, const Graph& g, const EdgeDistribution& dist,
                       const std::vector<std::int64_t>& grid, int trial) {
  require(cfg.data.dim() == 1, "trim needs scalar data");
  const Rng tr = trial_stream(cfg, trial);
  const NodeMatrix data = generate_data(cfg.data, g.num_nodes(), tr.split("data"));
  const double rho = draw_rho(cfg, tr.split("rho"));
  const RowVector ref = cfg.data.clean_location();
  const auto values = column_span(data);
  TrialOutput out;
  for (const TrimRule rule : {TrimRule::quantile, TrimRule::rank}) {
    auto trace = run_gotrim(rule, g, values, cfg.alpha, rho, ref(0), dist, grid, tr.split("edges"));
    const std::string name = rule == TrimRule::quantile ? "quantile" : "rank";
    out.runs.push_back(record("GoTrim-" + name, trial, std::move(trace.estimate_error)));
    out.runs.push_back(record("GoTrimWeights-" + name, trial, std::move(trace.weight_error)));
  }
  const auto median_objs = pinballs(data, 0.5);
  RunOptions opts;
  opts.rho = rho;
  opts.checkpoints = grid;
  out.runs.push_back(record("Median", trial,
                            run(Algorithm::asyl_admm, g, std::span<const Pinball>(median_objs), ref, dist, opts,
                                tr.split("edges"))));
  out.runs.push_back(record("CorruptedMean", trial, run_plain_average(g, data, ref, dist, grid, tr.split("edges"))));
  out.rows["targets"].push_back(
      {std::to_string(trial), format_number(rho),
       format_number(std::abs(exact_trimmed_mean(values, cfg.alpha) - ref(0))),
       format_number(std::abs(exact_quantile(values, 0.5) - ref(0))),
       format_number(std::abs(data.mean() - ref(0)))});
  return out;
}

TrialOutput depth_trial(const ExperimentConfig& cfg, const Graph& g, const EdgeDistribution& dist,
                        const std::vector<std::int64_t>& grid, int trial) {
  const Rng tr = trial_stream(cfg, trial);
  const NodeMatrix data = generate_data(cfg.data, g.num_nodes(), tr.split("data"));
  const double rho = draw_rho(cfg, tr.split("rho"));
  const RowVector ref = cfg.data.clean_location();
  const Eigen::VectorXd depths = l2_depths(data);
  const double depth_q = exact_target({TargetKind::depth_quantile, cfg.alpha}, data)(0);

  TrialOutput out;
  MetricSeries trimmed, depth_err, quant_err;
  auto s = depth_trim_init(data, cfg.alpha, cfg.depth_rho);
  Rng edges = tr.split("edges");
  std::int64_t done = 0;
  for (const std::int64_t cp : grid) {
    for (; done < cp; ++done) depth_trim_step(s, g, dist.sample(edges));
    trimmed.checkpoints.push_back(node_error(s.trim.estimates(), ref, cp));
    depth_err.checkpoints.push_back(vector_error(s.joint.depth.depth, depths, cp));
    quant_err.checkpoints.push_back(node_error(s.joint.quantile.x, RowVector::Constant(1, depth_q), cp));
  }
  out.runs.push_back(record("DepthTrimmedMean", trial, std::move(trimmed)));
  out.runs.push_back(record("DepthError", trial, std::move(depth_err)));
  out.runs.push_back(record("DepthQuantileError", trial, std::move(quant_err)));

  const auto objs = euclideans(data);
  RunOptions opts;
  opts.rho = rho;
  opts.checkpoints = grid;
  out.runs.push_back(record("GeometricMedian", trial,
                            run(Algorithm::asyl_admm, g, std::span<const Euclidean>(objs), ref, dist, opts,
                                tr.split("edges"))));
  out.rows["targets"].push_back({std::to_string(trial), format_number(rho),
                                 format_number((exact_depth_trimmed_mean(data, cfg.alpha) - ref).norm()),
                                 format_number((geometric_median(data) - ref).norm()),
                                 format_number((data.colwise().mean() - ref).norm())});
  return out;
}

TrialOutput sync_compare_trial(const ExperimentConfig& cfg, const Graph& g, const EdgeDistribution& dist,
                               const std::vector<std::int64_t>& grid, int trial) {
  TrialOutput out = consensus_trial(cfg, g, dist, grid, trial);
  if (trial == 0 && cfg.theory_rounds > 0) {
    const Rng tr = trial_stream(cfg, trial);
    const NodeMatrix data = generate_data(cfg.data, g.num_nodes(), tr.split("data"));
    const double rho = draw_rho(cfg, tr.split("rho"));
    const auto objs = pinballs(data, cfg.alpha);
    const double x_star = exact_quantile(column_span(data), cfg.alpha);
    const auto report = sync_theory_trace(g, objs, x_star, rho, cfg.theory_rounds, dist, tr.split("theory"));
    if (report.worst_decrement_excess > 1e-9)
      throw InvariantViolation("Lyapunov decrement violated by " + format_number(report.worst_decrement_excess));
    for (const auto& p : report.trace)
      out.rows["theory_trace"].push_back({std::to_string(p.round), format_number(p.lyapunov),
                                          format_number(p.residual_sq), format_number(p.gap), format_number(p.A)});
  }
  return out;
}

TrialOutput regress_trial(const ExperimentConfig& cfg, const Graph& g, const EdgeDistribution& dist,
                          const std::vector<std::int64_t>& grid, int trial) {
  const Rng tr = trial_stream(cfg, trial);
  RegressionSpec spec = cfg.regression;
  spec.n = g.num_nodes();
  const auto problem = generate_regression(spec, tr.split("data"));
  const auto schedule = cfg.regress_schedule == "sequential" ? TrimSchedule::sequential : TrimSchedule::simultaneous;
  require(schedule == TrimSchedule::sequential || cfg.regress_schedule == "simultaneous",
          "regress_schedule must be 'simultaneous' or 'sequential'");
  auto configure = [&](TrimmedGdOptions o) {
    o.alpha = cfg.alpha;
    o.rho = cfg.regress_rho;
    o.quantile_rho = cfg.regress_quantile_rho;
    o.schedule = schedule;
    o.estimation_steps = cfg.estimation_steps;
    return o;
  };
  TrialOutput out;
  TrimmedGdOptions oracle;
  oracle.rule = GradientRule::oracle;
  out.runs.push_back(
      record("OracleTrimming", trial, run_trimmed_gd(problem, g, configure(oracle), dist, grid, tr.split("edges"))));
  for (const double p : cfg.p_values) {
    const std::string suffix = "(p=" + format_number(p) + ")";
    for (const GradientRule rule : {GradientRule::rank, GradientRule::quantile}) {
      const auto opts = configure(options_for_p(rule, p, problem.size()));
      const std::string name = rule == GradientRule::rank ? "RankTrimming" : "QuantileTrimming";
      out.runs.push_back(record(name + suffix, trial, run_trimmed_gd(problem, g, opts, dist, grid, tr.split("edges"))));
    }
  }
  const auto base = oracle_baselines(problem, cfg.alpha);
  auto err = [&](const RowVector& theta) { return format_number((theta - problem.theta_star).norm()); };
  out.rows["baselines"].push_back({std::to_string(trial), err(base.oracle_regression), err(base.oracle_trimming),
                                   err(base.corrupted), err(base.huber)});
  return out;
}

// ---------------------------------------------------------------------------

void collect(ExperimentResult& result, std::vector<TrialOutput>& outputs,
             const std::map<std::string, std::vector<std::string>>& headers) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<MetricSeries>> by_label;
  for (auto& o : outputs) {
    for (auto& r : o.runs) {
      r.series.config_hash = result.hash;
      if (!by_label.count(r.label)) order.push_back(r.label);
      by_label[r.label].push_back(r.series);
      result.runs.push_back(std::move(r));
    }
  }
  for (const auto& label : order) {
    auto agg = aggregate(by_label[label], label);
    agg.config_hash = result.hash;
    result.aggregates.push_back(std::move(agg));
  }
  for (const auto& [name, header] : headers) {
    Table t{name, header, {}};
    for (auto& o : outputs)
      for (auto& row : o.rows[name]) t.rows.push_back(std::move(row));
    if (!t.rows.empty()) result.tables.push_back(std::move(t));
  }
}

void run_spectral(const ExperimentConfig& cfg, ExperimentResult& result) {
  const Graph g = shared_topology(cfg);
  Table gaps{"gap_identity", {"n", "edges", "edge_list", "c", "gap_chain", "abs_diff", "agree"}, {}};
  require(cfg.spectral_max_n >= 2 && cfg.spectral_max_n <= 6, "spectral_max_n must lie in [2, 6]");
  for (Index n = 2; n <= cfg.spectral_max_n; ++n) {
    for (const auto& h : all_connected_graphs(n)) {
      const auto rep = verify_gap_identity(h, edge_probabilities(h));
      std::string list;
      for (const auto& e : h.edges()) list += (list.empty() ? "" : " ") + std::to_string(e.i) + "-" + std::to_string(e.j);
      gaps.rows.push_back({std::to_string(n), std::to_string(h.num_edges()), list, format_number(rep.c),
                           format_number(rep.gap_chain), format_number(std::abs(rep.c - rep.gap_chain)),
                           rep.agree ? "1" : "0"});
      if (!rep.agree) throw InvariantViolation("gap identity failed on " + list);
    }
  }
  result.tables.push_back(std::move(gaps));
}

void run_bounds(const ExperimentConfig& cfg, ExperimentResult& result) {
  Table t{"bounds",
          {"graph", "n", "t", "node", "rank", "gamma", "frequency", "half_width", "hoeffding", "bernstein", "ok"},
          {}};
  const Rng master = Rng(cfg.seed).split("bounds");
  for (std::size_t gi = 0; gi < cfg.bound_graphs.size(); ++gi) {
    const auto& spec = cfg.bound_graphs[gi];
    const Graph g = build_topology(spec, master.split("topology").split(gi));
    NodeMatrix data = generate_data({DataKind::gaussian, 0.0, 0.0, 1.0}, g.num_nodes(), master.split("data").split(gi));
    const auto ranks = true_ranks(column_span(data));
    const auto dist = edge_probabilities(g);
    for (const auto t_val : cfg.bound_times) {
      const auto rep = empirical_deviation(g, column_span(data), cfg.alpha, t_val, cfg.bound_trials, dist,
                                           master.split("mc").split(gi).split(static_cast<std::uint64_t>(t_val)));
      for (Index k = 0; k < g.num_nodes(); ++k) {
        const bool ok = rep.frequency(k) <= rep.hoeffding(k) + rep.half_width(k);
        t.rows.push_back({to_string(spec.kind) + std::to_string(spec.n), std::to_string(g.num_nodes()),
                          std::to_string(t_val), std::to_string(k), std::to_string(ranks[static_cast<std::size_t>(k)]),
                          format_number(rep.gamma(k)), format_number(rep.frequency(k)),
                          format_number(rep.half_width(k)), format_number(rep.hoeffding(k)),
                          format_number(rep.bernstein(k)), ok ? "1" : "0"});
      }
    }
  }
  result.tables.push_back(std::move(t));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  require(cfg.trials > 0, "trials must be positive");
  require(cfg.budget >= 0, "budget must be non-negative");
  ExperimentResult result;
  result.config = cfg;
  result.hash = config_hash(cfg);
  result.meta = {{"config", config_to_json(cfg)}, {"config_hash", result.hash}};

  const std::string& c = cfg.command;
  if (c == "spectral" || c == "bounds") {
    if (c == "spectral") {
      const Graph g = shared_topology(cfg);
      const auto sum = spectral_summary(g, edge_probabilities(g));
      result.meta["graph"] = {{"n", g.num_nodes()},
                              {"edges", g.num_edges()},
                              {"lambda2", sum.lambda2},
                              {"c", sum.c},
                              {"connectivity", sum.connectivity}};
      if (g.radius()) result.meta["graph"]["radius"] = *g.radius();
      run_spectral(cfg, result);
    } else {
      run_bounds(cfg, result);
    }
    return result;
  }

  const Graph g = shared_topology(cfg);
  const auto dist = edge_probabilities(g);
  result.meta["graph"] = {{"n", g.num_nodes()}, {"edges", g.num_edges()}};
  if (g.radius()) result.meta["graph"]["radius"] = *g.radius();

  std::vector<std::int64_t> grid;
  if (c == "sync-compare") {
    const std::int64_t rounds = cfg.budget / g.num_edges();
    const std::int64_t stride = std::max<std::int64_t>(1, rounds / std::max(1, cfg.grid_points));
    for (std::int64_t r = 0; r < rounds; r += stride) grid.push_back(r * g.num_edges());
    grid.push_back(rounds * g.num_edges());
  } else {
    grid = checkpoint_grid(cfg);
  }

  std::map<std::string, std::vector<std::string>> headers;
  std::vector<TrialOutput> outputs;
  if (c == "simulate" || c == "geomed") {
    headers["trials"] = {"trial", "rho", "target0", "target1"};
    outputs = run_trials(cfg.trials, cfg.threads, [&](int t) { return consensus_trial(cfg, g, dist, grid, t); });
  } else if (c == "sync-compare") {
    headers["trials"] = {"trial", "rho", "target0", "target1"};
    headers["theory_trace"] = {"round", "lyapunov", "residual_sq", "objective_gap", "A"};
    outputs = run_trials(cfg.trials, cfg.threads, [&](int t) { return sync_compare_trial(cfg, g, dist, grid, t); });
  } else if (c == "trim") {
    headers["targets"] = {"trial", "rho", "exact_trimmed_mean_error", "exact_median_error", "exact_mean_error"};
    outputs = run_trials(cfg.trials, cfg.threads, [&](int t) { return trim_trial(cfg, g, dist, grid, t); });
  } else if (c == "depth") {
    headers["targets"] = {"trial", "rho", "exact_depth_trimmed_mean_error", "weiszfeld_error", "exact_mean_error"};
    outputs = run_trials(cfg.trials, cfg.threads, [&](int t) { return depth_trial(cfg, g, dist, grid, t); });
  } else if (c == "regress") {
    headers["baselines"] = {"trial", "oracle_regression", "oracle_trimming", "corrupted_ls", "huber"};
    outputs = run_trials(cfg.trials, cfg.threads, [&](int t) { return regress_trial(cfg, g, dist, grid, t); });
  } else {
    throw InvalidArgument("unknown command: " + c);
  }
  collect(result, outputs, headers);
  return result;
}

}  // namespace gq
