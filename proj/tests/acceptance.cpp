// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "gossipq/data.hpp"
#include "gossipq/experiment.hpp"
#include "gossipq/io.hpp"
#include "gossipq/prox.hpp"
#include "gossipq/ranktrim.hpp"
#include "gossipq/theory.hpp"
#include "oracles.hpp"

using namespace gq;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

unsigned workers() { return std::max(1U, std::thread::hardware_concurrency()); }

std::string fmt(double v) { return format_number(v); }

const MetricSeries& series(const ExperimentResult& r, const std::string& label) {
  for (const auto& a : r.aggregates)
    if (a.label == label) return a;
  throw InvalidArgument("no series " + label);
}

std::vector<const SeriesRecord*> runs_of(const ExperimentResult& r, const std::string& label) {
  std::vector<const SeriesRecord*> out;
  for (const auto& s : r.runs)
    if (s.label == label) out.push_back(&s);
  return out;
}

double column_mean(const ExperimentResult& r, const std::string& table, const std::string& column) {
  for (const auto& t : r.tables) {
    if (t.name != table) continue;
    const auto idx = static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), column) - t.header.begin());
    double acc = 0;
    for (const auto& row : t.rows) acc += std::stod(row.at(idx));
    return acc / static_cast<double>(t.rows.size());
  }
  throw InvalidArgument("no table " + table);
}

// 1 ------------------------------------------------------------------------
Verdict prox_oracles() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> loc(-50, 50), lvl(0.01, 0.99), step(0.01, 20), coord(-10, 10), lam(0.05, 15);
  double worst_pin = 0, worst_euc = 0;
  for (int t = 0; t < 1000; ++t) {
    const double a = loc(gen), alpha = lvl(gen), gamma = step(gen), z = loc(gen);
    worst_pin = std::max(worst_pin, std::abs(pinball_prox(Pinball(a, alpha), z, gamma) -
                                             oracle::pinball_prox(a, alpha, gamma, z)));
  }
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index d = 1 + t % 3;
    Eigen::VectorXd a(d), v(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      a(c) = coord(gen);
      v(c) = coord(gen);
    }
    const double l = lam(gen);
    const RowVector got = Euclidean(RowVector(a.transpose())).prox(RowVector(v.transpose()), l);
    worst_euc = std::max(worst_euc, (got.transpose() - oracle::euclidean_prox(a, l, v)).norm());
  }
  return {worst_pin < 1e-8 && worst_euc < 1e-6,
          "max pinball deviation " + fmt(worst_pin) + ", max euclidean deviation " + fmt(worst_euc)};
}

// 2 ------------------------------------------------------------------------
Verdict sync_theory() {
  double worst_excess = -1e300, worst_r = 0, worst_gap_ratio = 0, worst_budget = 0;
  int cases = 0;
  std::uint64_t seed = 0;
  for (const Index n : {5, 11, 21}) {
    for (const auto kind : {TopologyKind::geometric, TopologyKind::cycle}) {
      const Graph g = build_topology({kind, n, 0.0, n == 5 ? 7 : 2 * n}, Rng(100 + seed));
      const NodeMatrix data = generate_data(DataSpec{}, n, Rng(200 + seed));
      ++seed;
      for (const double alpha : {0.5, 0.3}) {
        std::vector<Pinball> f;
        for (Index k = 0; k < n; ++k) f.emplace_back(data(k, 0), alpha);
        const double xs = exact_quantile(column_span(data), alpha);
        double fstar = 0;
        for (const auto& p : f) fstar += p.value(xs);
        for (const double rho : {0.1, 0.5, 1.0}) {
          const auto rep = sync_theory_trace(g, f, xs, rho, 10000, edge_probabilities(g), Rng(seed));
          worst_excess = std::max(worst_excess, rep.worst_decrement_excess);
          worst_r = std::max(worst_r, std::sqrt(rep.trace.back().residual_sq));
          worst_gap_ratio = std::max(worst_gap_ratio, rep.trace.back().gap / (1e-4 * (1.0 + std::abs(fstar))));
          worst_budget = std::max(worst_budget, rep.residual_budget / rep.initial_lyapunov);
          ++cases;
        }
      }
    }
  }
  return {worst_excess <= 1e-9 && worst_r < 1e-4 && worst_gap_ratio < 1.0 && worst_budget <= 1.0 + 1e-9,
          std::to_string(cases) + " cases; max decrement excess " + fmt(worst_excess) + ", max ||r|| at 1e4 rounds " +
              fmt(worst_r) + ", max gap / (1e-4 (1+|f*|)) " + fmt(worst_gap_ratio) +
              ", max residual budget / V0 " + fmt(worst_budget)};
}

// 3 ------------------------------------------------------------------------
Verdict gap_identity() {
  double worst = 0;
  int graphs = 0;
  for (Index n = 2; n <= 5; ++n)
    for (const auto& g : all_connected_graphs(n)) {
      const auto rep = verify_gap_identity(g, edge_probabilities(g));
      worst = std::max(worst, std::abs(rep.gap_chain - rep.c));
      ++graphs;
    }
  const auto k3 = build_topology({TopologyKind::complete, 3}, Rng(0));
  const auto r3 = verify_gap_identity(k3, edge_probabilities(k3));
  return {worst <= 1e-10 && std::abs(r3.c - 1.0) <= 1e-10 && std::abs(r3.gap_chain - 1.0) <= 1e-10,
          std::to_string(graphs) + " graphs, max |gap - c| " + fmt(worst) + "; K3 c = " + fmt(r3.c) +
              ", chain gap = " + fmt(r3.gap_chain)};
}

// 4 ------------------------------------------------------------------------
Verdict concentration() {
  auto cfg = default_config("bounds");
  const auto r = run_experiment(cfg);
  const auto& t = r.tables.at(0);
  const auto ok = static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), "ok") - t.header.begin());
  int bad = 0;
  for (const auto& row : t.rows) bad += row[ok] != "1";
  return {bad == 0 && cfg.bound_trials >= 2000,
          std::to_string(t.rows.size()) + " (graph, t, node) checks with " + std::to_string(cfg.bound_trials) +
              " trials, " + std::to_string(bad) + " above the bound"};
}

// 5 ------------------------------------------------------------------------
Verdict simulate_ordering() {
  auto cfg = default_config("simulate");
  cfg.threads = workers();
  const auto r = run_experiment(cfg);
  const auto& asyl = series(r, "AsylADMM");
  const double a = asyl.final(), d = series(r, "DAPD").final(), s = series(r, "AsyncADMM").final();
  return {a <= d && a <= s && a <= 0.1 * asyl.initial(),
          "final MAE AsylADMM " + fmt(a) + ", DAPD " + fmt(d) + ", AsyncADMM " + fmt(s) + ", AsylADMM initial " +
              fmt(asyl.initial())};
}

// 6 ------------------------------------------------------------------------
Verdict wei_stalls() {
  auto cfg = default_config("simulate");
  cfg.threads = workers();
  cfg.budget = 100000;
  cfg.algorithms = {"AsylADMM", "WeiADMM@0.5", "WeiADMM@1", "WeiADMM@2"};
  const auto r = run_experiment(cfg);
  const auto& asyl = series(r, "AsylADMM");
  bool pass = asyl.final() < 0.1 * asyl.initial();
  std::string detail = "AsylADMM final/initial " + fmt(asyl.final() / asyl.initial());
  for (const char* label : {"WeiADMM@0.5", "WeiADMM@1", "WeiADMM@2"}) {
    const auto& w = series(r, label);
    pass = pass && w.final() > 0.5 * w.initial();
    detail += std::string(", ") + label + " " + fmt(w.final() / w.initial());
  }
  return {pass, detail};
}

// 7 ------------------------------------------------------------------------
Verdict trimming() {
  auto cfg = default_config("trim");
  cfg.threads = workers();
  const auto r = run_experiment(cfg);
  int exact = 0;
  const auto weights = runs_of(r, "GoTrimWeights-quantile");
  for (const auto* w : weights) exact += w->series.final() == 0.0;
  const double trimmed = series(r, "GoTrim-quantile").final(), median = series(r, "Median").final(),
               corrupted = series(r, "CorruptedMean").final();
  return {cfg.data.contamination == 0.2 && cfg.alpha == 0.3 && weights.size() == 20 && exact >= 18 &&
              trimmed < corrupted && median < corrupted,
          "exact quantile weights on " + std::to_string(exact) + "/" + std::to_string(weights.size()) +
              " trials; final error trimmed mean " + fmt(trimmed) + ", median " + fmt(median) + ", corrupted mean " +
              fmt(corrupted)};
}

// 8 ------------------------------------------------------------------------
Verdict godepth() {
  DataSpec spec;
  spec.kind = DataKind::arc2d;
  const NodeMatrix data = generate_data(spec, 50, Rng(31));
  const Graph g = build_topology({TopologyKind::geometric, 50, 0.0, 250}, Rng(32));
  const double alpha = 0.25;
  auto s = depth_quantile_init(data, alpha);
  const auto dist = edge_probabilities(g);
  Rng edges(33);
  for (int t = 0; t < 100000; ++t) asyladmm_godepth_step(s, g, dist.sample(edges), default_config("depth").depth_rho);
  const Eigen::VectorXd exact = l2_depths(data);
  const double depth_err = (s.depth.depth - exact).cwiseAbs().maxCoeff();
  const double q = exact_quantile({exact.data(), static_cast<std::size_t>(exact.size())}, alpha);
  const double q_err = (s.quantile.x.array() - q).abs().maxCoeff();
  return {depth_err < 1e-2 && q_err < 5e-2,
          "max depth error " + fmt(depth_err) + ", max depth-quantile error " + fmt(q_err) + " (exact quantile " +
              fmt(q) + ")"};
}

// 9 ------------------------------------------------------------------------
Verdict geomed() {
  auto cfg = default_config("geomed");
  cfg.threads = workers();
  const auto r = run_experiment(cfg);
  const double a = series(r, "MultiAsylADMM").final(), d = series(r, "MultiDAPD").final(),
               s = series(r, "MultiAsyncADMM").final();
  return {cfg.trials == 20 && a <= d && a <= s && a < 0.5,
          "final error to Weiszfeld: MultiAsylADMM " + fmt(a) + ", MultiDAPD " + fmt(d) + ", MultiAsyncADMM " + fmt(s)};
}

// 10 -----------------------------------------------------------------------
Verdict regression() {
  auto cfg = default_config("regress");
  cfg.threads = workers();
  cfg.p_values = {3.0, 4.0};
  const auto r = run_experiment(cfg);
  const double oracle = series(r, "OracleTrimming").final();
  const double rank3 = series(r, "RankTrimming(p=3)").final(), quant3 = series(r, "QuantileTrimming(p=3)").final();
  const auto rank4 = runs_of(r, "RankTrimming(p=4)");
  int diverged4 = 0;
  for (const auto* s : rank4) diverged4 += s->series.diverged;
  const double corrupted = column_mean(r, "baselines", "corrupted_ls");
  const double central = column_mean(r, "baselines", "oracle_trimming");
  return {rank3 <= 2 * oracle && quant3 <= 2 * oracle && diverged4 > 0 && corrupted >= 5 * oracle &&
              corrupted >= 5 * central,
          "final parameter error OracleTrimming " + fmt(oracle) + ", Rank(p=3) " + fmt(rank3) + ", Quantile(p=3) " +
              fmt(quant3) + "; Rank(p=4) diverged on " + std::to_string(diverged4) + "/" +
              std::to_string(rank4.size()) + " trials; corrupted LS " + fmt(corrupted) + ", centralized oracle " +
              fmt(central)};
}

// 11 -----------------------------------------------------------------------
Verdict sync_compare() {
  auto cfg = default_config("sync-compare");
  cfg.threads = workers();
  const auto r = run_experiment(cfg);
  const auto& a = series(r, "AsylADMM");
  const auto& s = series(r, "SyncADMM");
  return {a.checkpoints.back().activations == s.checkpoints.back().activations && a.final() <= s.final(),
          "final MAE after " + std::to_string(a.checkpoints.back().activations) + " activations: AsylADMM " +
              fmt(a.final()) + ", SyncADMM " + fmt(s.final())};
}

// 12 -----------------------------------------------------------------------
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism() {
  const auto root = std::filesystem::temp_directory_path() / "gossipq_acceptance";
  std::filesystem::remove_all(root);
  int files = 0;
  std::string mismatch;
  for (const auto& cmd : experiment_commands()) {
    auto cfg = default_config(cmd);
    cfg.trials = std::min(cfg.trials, 3);
    cfg.budget = std::min<std::int64_t>(cfg.budget, 20000);
    cfg.eval_every = std::min<std::int64_t>(cfg.eval_every, 5000);
    cfg.theory_rounds = std::min<std::int64_t>(cfg.theory_rounds, 200);
    cfg.bound_trials = std::min<std::int64_t>(cfg.bound_trials, 100);
    auto again = cfg;
    again.threads = 4;
    write_result(run_experiment(cfg), root / cmd / "a", false);
    write_result(run_experiment(again), root / cmd / "b", false);
    for (const auto& entry : std::filesystem::directory_iterator(root / cmd / "a")) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      if (slurp(entry.path()) != slurp(root / cmd / "b" / entry.path().filename()))
        mismatch += " " + cmd + "/" + entry.path().filename().string();
    }
  }
  std::filesystem::remove_all(root);
  return {mismatch.empty() && files > 0,
          std::to_string(experiment_commands().size()) + " commands, " + std::to_string(files) + " CSV files compared" +
              (mismatch.empty() ? "" : ", differing:" + mismatch)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"prox oracle equivalence", prox_oracles},
      {"synchronous theory suite", sync_theory},
      {"interchange gap identity", gap_identity},
      {"concentration bound", concentration},
      {"median estimation ordering", simulate_ordering},
      {"edge-ADMM stalls", wei_stalls},
      {"trimmed mean", trimming},
      {"GoDepth", godepth},
      {"geometric median", geomed},
      {"trimmed regression", regression},
      {"sync vs async", sync_compare},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    std::printf("%s %2zu %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
