#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "gossipq/data.hpp"
#include "gossipq/experiment.hpp"
#include "gossipq/io.hpp"

using namespace gq;

namespace {

std::string csv_of(const ExperimentResult& r) {
  std::ostringstream out;
  write_trials_csv(out, r.runs);
  write_aggregate_csv(out, r.aggregates);
  for (const auto& t : r.tables) write_table_csv(out, t);
  return out.str();
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("config JSON round trip and validation") {
  for (const auto& cmd : experiment_commands()) {
    const auto cfg = default_config(cmd);
    const auto back = config_from_json(config_to_json(cfg), cmd);
    CHECK(config_to_json(back) == config_to_json(cfg));
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(config_hash(back).size() == 16);
  }
  nlohmann::json j = {{"budget", 10}, {"bogus", 1}};
  CHECK_THROWS_AS(config_from_json(j, "simulate"), InvalidArgument);
  nlohmann::json nested = {{"topology", {{"kind", "cycle"}, {"size", 5}}}};
  CHECK_THROWS_AS(config_from_json(nested, "simulate"), InvalidArgument);
  nlohmann::json other = {{"command", "trim"}};
  CHECK_THROWS_AS(config_from_json(other, "simulate"), InvalidArgument);
  auto a = default_config("simulate");
  auto b = a;
  b.seed = 2;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("algorithm entries") {
  const auto plain = parse_algorithm_entry("DAPD");
  CHECK(plain.algorithm == Algorithm::dapd);
  CHECK_FALSE(plain.step.has_value());
  const auto fixed = parse_algorithm_entry("WeiADMM@0.5");
  CHECK(fixed.algorithm == Algorithm::wei);
  CHECK(*fixed.step == 0.5);
  CHECK(fixed.label == "WeiADMM@0.5");
  CHECK_THROWS(parse_algorithm_entry("Nope"));
}

TEST_CASE("checkpoint grids") {
  auto cfg = default_config("simulate");
  cfg.budget = 2500;
  cfg.eval_every = 1000;
  CHECK(checkpoint_grid(cfg) == std::vector<std::int64_t>{0, 1000, 2000, 2500});
  cfg.grid = "geometric";
  cfg.grid_points = 10;
  const auto g = checkpoint_grid(cfg);
  CHECK(g.front() == 0);
  CHECK(g.back() == 2500);
  CHECK(std::is_sorted(g.begin(), g.end()));
  CHECK(std::adjacent_find(g.begin(), g.end()) == g.end());
}

TEST_CASE("budget zero gives one checkpoint per algorithm") {
  auto cfg = default_config("simulate");
  cfg.trials = 1;
  cfg.budget = 0;
  const auto r = run_experiment(cfg);
  REQUIRE(r.aggregates.size() == 4);
  for (const auto& a : r.aggregates) CHECK(a.checkpoints.size() == 1);
}

TEST_CASE("same config, same bytes; thread count does not matter") {
  auto cfg = default_config("simulate");
  cfg.trials = 3;
  cfg.budget = 3000;
  const auto one = csv_of(run_experiment(cfg));
  CHECK(one == csv_of(run_experiment(cfg)));
  cfg.threads = 3;
  CHECK(one == csv_of(run_experiment(cfg)));
  cfg.seed = 99;
  CHECK(one != csv_of(run_experiment(cfg)));
}

TEST_CASE("CSV layout") {
  auto cfg = default_config("simulate");
  cfg.trials = 2;
  cfg.budget = 1000;
  cfg.algorithms = {"AsylADMM"};
  const auto r = run_experiment(cfg);
  std::ostringstream t, a;
  write_trials_csv(t, r.runs);
  write_aggregate_csv(a, r.aggregates);
  std::istringstream ts(t.str()), as(a.str());
  std::string line;
  std::getline(ts, line);
  CHECK(line == "algorithm,trial,activation,mae,mae_std");
  std::getline(ts, line);
  CHECK(line.rfind("AsylADMM,0,0,", 0) == 0);
  std::getline(as, line);
  CHECK(line == "algorithm,activation,mean,std,diverged");
  int rows = 0;
  while (std::getline(as, line)) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("graph JSON round trip") {
  const auto g = build_topology({TopologyKind::geometric, 20, 0.0, 40}, Rng(1));
  const auto back = graph_from_json(graph_to_json(g));
  CHECK(back.edges() == g.edges());
  CHECK(back.num_nodes() == 20);
  REQUIRE(back.positions());
  CHECK((*back.positions() - *g.positions()).norm() == 0.0);
  CHECK(*back.radius() == *g.radius());
  CHECK_THROWS(graph_from_json(nlohmann::json{{"n", 3}, {"edges", {{0, 1}}}}));
}

TEST_CASE("AsylADMM state JSON round trip") {
  std::vector<Pinball> f{Pinball(1.0, 0.5), Pinball(3.0, 0.5), Pinball(2.0, 0.5)};
  const Graph g(3, {{0, 1}, {1, 2}});
  auto s = asyl_init(std::span<const Pinball>(f));
  asyladmm_step(s, g, 0, 0.7, std::span<const Pinball>(f));
  const auto back = asyl_state_from_json(state_to_json(s));
  CHECK(back.x == s.x);
  CHECK(back.mu_hat == s.mu_hat);
}

TEST_CASE("data generator: counts, ranges, no ties") {
  DataSpec spec;
  const auto x = generate_data(spec, 101, Rng(3));
  REQUIRE(x.rows() == 101);
  std::set<double> distinct(x.data(), x.data() + x.size());
  CHECK(distinct.size() == 101);
  const auto y = generate_data(spec, 101, Rng(3));
  CHECK(x == y);
  // 20 outliers around 30 and 81 clean points around 10 separate cleanly at 20
  const auto far = std::count_if(x.data(), x.data() + 101, [](double v) { return v > 20.0; });
  CHECK(far >= 17);
  CHECK(far <= 23);

  spec.kind = DataKind::arc2d;
  const auto a = generate_data(spec, 50, Rng(4));
  CHECK(a.cols() == 2);
  int on_arc = 0;
  for (Index k = 0; k < 50; ++k) {
    const Eigen::Vector2d d = a.row(k).transpose() - spec.mu;
    if (std::abs(d.norm() - spec.arc_radius) < 1e-9) {
      ++on_arc;
      CHECK(d(0) >= -1e-9);
      CHECK(d(1) >= -1e-9);
    }
  }
  CHECK(on_arc == 10);
}

TEST_CASE("Weiszfeld output is a stationary point") {
  DataSpec spec;
  spec.kind = DataKind::arc2d;
  const auto pts = generate_data(spec, 60, Rng(5));
  const RowVector m = geometric_median(pts);
  CHECK(geometric_median_gradient_norm(pts, m) < 1e-8);
  // sum of distances is no larger at small perturbations
  auto total = [&](const RowVector& x) {
    double s = 0;
    for (Index k = 0; k < pts.rows(); ++k) s += (pts.row(k) - x).norm();
    return s;
  };
  for (const double dx : {-1e-3, 1e-3})
    for (const double dy : {-1e-3, 1e-3}) {
      RowVector q = m;
      q(0) += dx;
      q(1) += dy;
      CHECK(total(q) >= total(m));
    }
}

TEST_CASE("exact targets") {
  NodeMatrix x(101, 1);
  for (Index k = 0; k < 101; ++k) x(k, 0) = static_cast<double>(k + 1);
  CHECK(exact_target({TargetKind::quantile, 0.5}, x)(0) == 51.0);
  CHECK(exact_target({TargetKind::mean, 0.5}, x)(0) == 51.0);
  CHECK(exact_target({TargetKind::trimmed_mean, 0.3}, x)(0) == doctest::Approx(51.0));
  // summed pinball loss at the returned quantile is no larger than at any data point
  const double q = exact_target({TargetKind::quantile, 0.3}, x)(0);
  auto total = [&](double w) {
    double s = 0;
    for (Index k = 0; k < 101; ++k) s += Pinball(x(k, 0), 0.3).value(w);
    return s;
  };
  for (Index k = 0; k < 101; ++k) CHECK(total(q) <= total(x(k, 0)) + 1e-9);
}
