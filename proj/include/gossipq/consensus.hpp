#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gossipq/graph.hpp"
#include "gossipq/metrics.hpp"
#include "gossipq/prox.hpp"
#include "gossipq/rng.hpp"

namespace gq {

/// Gossip consensus algorithms for min_x sum_k f_k(x).
enum class Algorithm { asyl_admm, sync_admm, async_admm, dapd, subgradient, wei };

std::string to_string(Algorithm alg);
Algorithm algorithm_from_string(const std::string& name);

/// Any |x_k| beyond this flags a run as diverged.
inline constexpr double kDivergenceThreshold = 1e12;

template <LocalObjective F>
NodeMatrix anchor_matrix(std::span<const F> objectives) {
  require(!objectives.empty(), "no objectives");
  NodeMatrix a(static_cast<Index>(objectives.size()), objectives.front().dim());
  for (std::size_t k = 0; k < objectives.size(); ++k) a.row(static_cast<Index>(k)) = objectives[k].anchor_row();
  return a;
}

/// True when every entry of the listed rows is finite and below the
/// divergence threshold.
bool rows_bounded(const NodeMatrix& x, std::initializer_list<Index> rows);
bool all_bounded(const NodeMatrix& x);

// ---------------------------------------------------------------------------
// AsylADMM: two variables per node, estimate x_k and dual aggregate mu_hat_k.

struct AsylState {
  NodeMatrix x;
  NodeMatrix mu_hat;
};

template <LocalObjective F>
AsylState asyl_init(std::span<const F> objectives) {
  AsylState s;
  s.x = anchor_matrix(objectives);
  s.mu_hat = NodeMatrix::Zero(s.x.rows(), s.x.cols());
  return s;
}

/// One activation of edge e: z = (x_i + x_j) / 2, then for k in {i, j}
/// mu_hat_k += rho (z - x_k) / d_k and x_k = prox_{f_k / (rho d_k)}(z + mu_hat_k / rho).
template <LocalObjective F>
void asyladmm_step(AsylState& s, const Graph& g, Index e, double rho, std::span<const F> objectives) {
  const auto [i, j] = g.edge(e);
  const RowVector z = 0.5 * (s.x.row(i) + s.x.row(j));
  for (const Index k : {i, j}) {
    const double dk = static_cast<double>(g.degree(k));
    s.mu_hat.row(k) += (rho / dk) * (z - s.x.row(k));
    const RowVector arg = z + s.mu_hat.row(k) / rho;
    objectives[static_cast<std::size_t>(k)].prox(arg, 1.0 / (rho * dk), s.x.row(k));
  }
}

// ---------------------------------------------------------------------------
// Synchronous variant, optionally carrying the full per-(edge, endpoint) duals
// y_{e,k} it is a reparameterization of.

struct SyncState {
  NodeMatrix x;
  NodeMatrix mu_hat;
  bool track_duals = false;
  NodeMatrix y;       ///< 2|E| x dim, slot order of Graph::slot_of (tracked only)
  NodeMatrix z_edge;  ///< |E| x dim, consensus values of the latest round (tracked only)
  std::int64_t rounds = 0;
};

template <LocalObjective F>
SyncState sync_init(const Graph& g, std::span<const F> objectives, bool track_duals) {
  SyncState s;
  s.x = anchor_matrix(objectives);
  s.mu_hat = NodeMatrix::Zero(s.x.rows(), s.x.cols());
  s.track_duals = track_duals;
  if (track_duals) {
    s.y = NodeMatrix::Zero(2 * g.num_edges(), s.x.cols());
    s.z_edge.resize(g.num_edges(), s.x.cols());
    for (Index e = 0; e < g.num_edges(); ++e) s.z_edge.row(e) = 0.5 * (s.x.row(g.edge(e).i) + s.x.row(g.edge(e).j));
  }
  return s;
}

/// Checks mu_hat_k = mean_{e in N_k} y_{e,k} and y_{e,i} + y_{e,j} = 0.
/// Throws InvariantViolation beyond `tol` (relative to 1 + magnitude).
void check_dual_identities(const SyncState& s, const Graph& g, double tol = 1e-9);

/// One synchronous round: every node averages its neighbors, updates its dual
/// aggregate and takes a prox step, all from the previous round's values.
template <LocalObjective F>
void sync_step(SyncState& s, const Graph& g, double rho, std::span<const F> objectives, bool track_duals) {
  require(rho > 0.0, "rho must be positive");
  require(track_duals == s.track_duals, "dual tracking must be fixed at initialization");
  const NodeMatrix prev = s.x;
  RowVector xhat(prev.cols());
  for (Index k = 0; k < g.num_nodes(); ++k) {
    const double dk = static_cast<double>(g.degree(k));
    xhat.setZero();
    for (const Index l : g.neighbors(k)) xhat += prev.row(l);
    xhat /= dk;
    const RowVector zhat = 0.5 * (xhat + prev.row(k));
    s.mu_hat.row(k) += rho * (zhat - prev.row(k));
    const RowVector arg = zhat + s.mu_hat.row(k) / rho;
    objectives[static_cast<std::size_t>(k)].prox(arg, 1.0 / (rho * dk), s.x.row(k));
  }
  if (track_duals) {
    for (Index e = 0; e < g.num_edges(); ++e) {
      const auto [i, j] = g.edge(e);
      s.z_edge.row(e) = 0.5 * (prev.row(i) + prev.row(j));
      s.y.row(Graph::slot(e, false)) += rho * (s.z_edge.row(e) - prev.row(i));
      s.y.row(Graph::slot(e, true)) += rho * (s.z_edge.row(e) - prev.row(j));
    }
    check_dual_identities(s, g);
  }
  ++s.rounds;
}

// ---------------------------------------------------------------------------
// Async-ADMM and DAPD: per incident edge, a dual lambda_{kl} and a stored
// neighbor value xbar_{kl}, both held in 2|E| x dim matrices where slot(e, k)
// is node k's copy for edge e.

struct AsyncAdmmState {
  NodeMatrix x;
  NodeMatrix lambda;
  NodeMatrix xbar;
};

using DapdState = AsyncAdmmState;

template <LocalObjective F>
AsyncAdmmState edge_dual_init(const Graph& g, std::span<const F> objectives) {
  AsyncAdmmState s;
  s.x = anchor_matrix(objectives);
  s.lambda = NodeMatrix::Zero(2 * g.num_edges(), s.x.cols());
  s.xbar.resize(2 * g.num_edges(), s.x.cols());
  for (Index e = 0; e < g.num_edges(); ++e) {
    s.xbar.row(Graph::slot(e, false)) = s.x.row(g.edge(e).i);
    s.xbar.row(Graph::slot(e, true)) = s.x.row(g.edge(e).j);
  }
  return s;
}

template <LocalObjective F>
void async_admm_step(AsyncAdmmState& s, const Graph& g, Index e, double rho, std::span<const F> objectives) {
  const auto [i, j] = g.edge(e);
  RowVector arg(s.x.cols());
  for (const Index k : {i, j}) {
    const double dk = static_cast<double>(g.degree(k));
    arg.setZero();
    for (const Index f : g.incident_edges(k)) {
      const Index slot = g.slot_of(f, k);
      arg += s.xbar.row(slot) - s.lambda.row(slot);
    }
    arg /= dk;
    objectives[static_cast<std::size_t>(k)].prox(arg, 1.0 / (rho * dk), s.x.row(k));
  }
  const RowVector avg = 0.5 * (s.x.row(i) + s.x.row(j));
  const Index si = Graph::slot(e, false), sj = Graph::slot(e, true);
  s.lambda.row(si) += rho * (s.x.row(i) - avg);
  s.lambda.row(sj) += rho * (s.x.row(j) - avg);
  s.xbar.row(si) = avg;
  s.xbar.row(sj) = avg;
}

template <LocalObjective F>
void dapd_step(DapdState& s, const Graph& g, Index e, double rho, std::span<const F> objectives) {
  const auto [i, j] = g.edge(e);
  const Index si = Graph::slot(e, false), sj = Graph::slot(e, true);
  s.lambda.row(si) = 0.5 * (s.lambda.row(si) - s.lambda.row(sj)) + (0.5 * rho) * (s.x.row(i) - s.x.row(j));
  s.lambda.row(sj) = -s.lambda.row(si);
  RowVector arg(s.x.cols());
  for (const Index k : {i, j}) {
    const double dk = static_cast<double>(g.degree(k));
    arg.setZero();
    for (const Index f : g.incident_edges(k)) {
      const Index slot = g.slot_of(f, k);
      arg += s.xbar.row(slot) - s.lambda.row(slot) / rho;
    }
    arg = 0.5 * s.x.row(k) + arg / (2.0 * dk);
    objectives[static_cast<std::size_t>(k)].prox(arg, 1.0 / (rho * dk), s.x.row(k));
  }
  s.xbar.row(si) = s.x.row(j);
  s.xbar.row(sj) = s.x.row(i);
}

// ---------------------------------------------------------------------------
// Distributed subgradient descent: global diminishing step, then the sampled
// edge averages. Not fully asynchronous (every node steps each activation).

struct SubgradState {
  NodeMatrix x;
  std::int64_t t = 0;
};

template <LocalObjective F>
SubgradState subgrad_init(std::span<const F> objectives) {
  return {anchor_matrix(objectives), 0};
}

template <LocalObjective F>
void subgradient_step(SubgradState& s, const Graph& g, Index e, double rho, std::span<const F> objectives) {
  const double step = rho / std::sqrt(static_cast<double>(s.t + 1));
  RowVector grad(s.x.cols());
  for (Index k = 0; k < s.x.rows(); ++k) {
    objectives[static_cast<std::size_t>(k)].subgradient(s.x.row(k), grad);
    s.x.row(k) -= step * grad;
  }
  const auto [i, j] = g.edge(e);
  const RowVector avg = 0.5 * (s.x.row(i) + s.x.row(j));
  s.x.row(i) = avg;
  s.x.row(j) = avg;
  ++s.t;
}

// ---------------------------------------------------------------------------
// Edge-based asynchronous ADMM with constraints A_{eq} x_q = z_{eq},
// z_{ei} + z_{ej} = 0, where A = +1 for the smaller endpoint and -1 for the
// larger one.

struct WeiState {
  NodeMatrix x;
  NodeMatrix z;  ///< 2|E| x dim
  NodeMatrix p;  ///< 2|E| x dim
};

inline double incidence_sign(bool larger_endpoint) { return larger_endpoint ? -1.0 : 1.0; }

template <LocalObjective F>
WeiState wei_init(const Graph& g, std::span<const F> objectives) {
  WeiState s;
  s.x = anchor_matrix(objectives);
  s.z.resize(2 * g.num_edges(), s.x.cols());
  s.p = NodeMatrix::Zero(2 * g.num_edges(), s.x.cols());
  for (Index e = 0; e < g.num_edges(); ++e) {
    s.z.row(Graph::slot(e, false)) = s.x.row(g.edge(e).i);
    s.z.row(Graph::slot(e, true)) = -s.x.row(g.edge(e).j);
  }
  return s;
}

/// Minimizes f(x) - p A x + (beta / 2)(A x - z)^2 for A in {-1, +1}. Since
/// A^2 = 1 this equals prox_{f / beta}(A (z + p / beta)); for A = -1 it is
/// the reflected prox.
template <LocalObjective F>
void wei_primal(const F& f, double sign, ConstRowRef z, ConstRowRef p, double beta, RowRef out) {
  const RowVector arg = sign * (z + p / beta);
  f.prox(arg, 1.0 / beta, out);
}

template <LocalObjective F>
void wei_step(WeiState& s, const Graph& g, Index e, double beta, std::span<const F> objectives) {
  require(beta > 0.0, "beta must be positive");
  const auto [i, j] = g.edge(e);
  const Index si = Graph::slot(e, false), sj = Graph::slot(e, true);
  const double ai = incidence_sign(false), aj = incidence_sign(true);
  wei_primal(objectives[static_cast<std::size_t>(i)], ai, s.z.row(si), s.p.row(si), beta, s.x.row(i));
  wei_primal(objectives[static_cast<std::size_t>(j)], aj, s.z.row(sj), s.p.row(sj), beta, s.x.row(j));
  const RowVector v = 0.5 * (-s.p.row(si) - s.p.row(sj)) + (0.5 * beta) * (ai * s.x.row(i) + aj * s.x.row(j));
  s.z.row(si) = (-s.p.row(si) - v) / beta + ai * s.x.row(i);
  s.z.row(sj) = (-s.p.row(sj) - v) / beta + aj * s.x.row(j);
  s.p.row(si) = -v;
  s.p.row(sj) = -v;
}

// ---------------------------------------------------------------------------
// Uniform driver over all algorithms.

template <LocalObjective F>
class Solver {
 public:
  using State = std::variant<AsylState, SyncState, AsyncAdmmState, SubgradState, WeiState>;

  Solver(Algorithm alg, const Graph& g, std::span<const F> objectives, double rho)
      : alg_(alg), g_(&g), objectives_(objectives), rho_(rho) {
    require(rho > 0.0, "step size must be positive");
    require(static_cast<Index>(objectives.size()) == g.num_nodes(), "one objective per node required");
    switch (alg) {
      case Algorithm::asyl_admm: state_ = asyl_init(objectives); break;
      case Algorithm::sync_admm: state_ = sync_init(g, objectives, false); break;
      case Algorithm::async_admm:
      case Algorithm::dapd: state_ = edge_dual_init(g, objectives); break;
      case Algorithm::subgradient: state_ = subgrad_init(objectives); break;
      case Algorithm::wei: state_ = wei_init(g, objectives); break;
    }
  }

  Algorithm algorithm() const { return alg_; }
  bool synchronous() const { return alg_ == Algorithm::sync_admm; }
  /// Activations charged per call to advance(): |E| for the synchronous round.
  std::int64_t cost() const { return synchronous() ? g_->num_edges() : 1; }

  /// Activates edge e (ignored by the synchronous variant, which runs a full
  /// round). Returns false once the touched state leaves the bounded region.
  bool advance(Index e) {
    switch (alg_) {
      case Algorithm::asyl_admm:
        asyladmm_step(std::get<AsylState>(state_), *g_, e, rho_, objectives_);
        break;
      case Algorithm::sync_admm:
        sync_step(std::get<SyncState>(state_), *g_, rho_, objectives_, false);
        return all_bounded(estimates());
      case Algorithm::async_admm:
        async_admm_step(std::get<AsyncAdmmState>(state_), *g_, e, rho_, objectives_);
        break;
      case Algorithm::dapd:
        dapd_step(std::get<AsyncAdmmState>(state_), *g_, e, rho_, objectives_);
        break;
      case Algorithm::subgradient:
        subgradient_step(std::get<SubgradState>(state_), *g_, e, rho_, objectives_);
        return all_bounded(estimates());
      case Algorithm::wei:
        wei_step(std::get<WeiState>(state_), *g_, e, rho_, objectives_);
        break;
    }
    return rows_bounded(estimates(), {g_->edge(e).i, g_->edge(e).j});
  }

  const NodeMatrix& estimates() const {
    return std::visit([](const auto& s) -> const NodeMatrix& { return s.x; }, state_);
  }
  const State& state() const { return state_; }

 private:
  Algorithm alg_;
  const Graph* g_;
  std::span<const F> objectives_;
  double rho_;
  State state_;
};

struct RunOptions {
  double rho = 1.0;  ///< step size (beta for the edge-based ADMM)
  std::int64_t budget = 0;
  std::int64_t eval_every = 1000;
  /// Explicit checkpoint grid; overrides eval_every when non-empty.
  std::vector<std::int64_t> checkpoints;
  /// Stop at the first out-of-bounds state; remaining checkpoints record +inf.
  bool abort_on_divergence = true;
};

/// Runs one algorithm from its initial state and records the node-wise error
/// to `truth` on the checkpoint grid. Deterministic given `edge_rng`.
template <LocalObjective F>
MetricSeries run(Algorithm alg, const Graph& g, std::span<const F> objectives, const RowVector& truth,
                 const EdgeDistribution& dist, const RunOptions& opts, Rng edge_rng) {
  require(opts.budget >= 0, "budget must be non-negative");
  const auto grid = opts.checkpoints.empty() ? linear_checkpoints(opts.budget, opts.eval_every) : opts.checkpoints;
  Solver<F> solver(alg, g, objectives, opts.rho);
  MetricSeries out;
  out.label = to_string(alg);
  out.seed = edge_rng.key();
  std::int64_t done = 0;
  for (const std::int64_t cp : grid) {
    if (!out.diverged) {
      if (solver.synchronous()) {
        const std::int64_t rounds = cp / g.num_edges();
        while (done / g.num_edges() < rounds) {
          done += g.num_edges();
          if (!solver.advance(0)) out.diverged = true;
          if (out.diverged && opts.abort_on_divergence) break;
        }
      } else {
        while (done < cp) {
          const Index e = dist.sample(edge_rng);
          ++done;
          if (!solver.advance(e)) out.diverged = true;
          if (out.diverged && opts.abort_on_divergence) break;
        }
      }
    }
    if (out.diverged && opts.abort_on_divergence) {
      out.checkpoints.push_back({cp, std::numeric_limits<double>::infinity(), 0.0});
    } else {
      out.checkpoints.push_back(node_error(solver.estimates(), truth, cp));
    }
  }
  return out;
}

}  // namespace gq
