#include "gossipq/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "gossipq/ranktrim.hpp"

namespace gq {

SaddlePoint solve_saddle_dual(const Graph& g, std::span<const Pinball> objectives, double x_star, double tol) {
  const Index n = g.num_nodes();
  require(static_cast<Index>(objectives.size()) == n, "one objective per node required");

  // Node slopes at x*; at most one anchor sits exactly at x* for distinct data.
  Eigen::VectorXd slope(n);
  Index anchor = -1;
  for (Index k = 0; k < n; ++k) {
    const auto& f = objectives[static_cast<std::size_t>(k)];
    if (f.anchor() == x_star) {
      require(anchor < 0, "several anchors coincide with the optimum");
      anchor = k;
      slope(k) = 0.0;
    } else {
      slope(k) = x_star < f.anchor() ? -f.beta() : 1.0;
    }
  }
  if (anchor >= 0) {
    slope(anchor) = -(slope.sum());
    const double beta = objectives[static_cast<std::size_t>(anchor)].beta();
    if (slope(anchor) < -beta - tol || slope(anchor) > 1.0 + tol)
      throw InvalidArgument("balancing slope outside the subdifferential: x_star is not optimal");
  } else if (std::abs(slope.sum()) > tol) {
    throw InvalidArgument("slopes do not balance: x_star is not optimal");
  }

  // BFS tree from node 0, then accumulate subtree sums leaf to root.
  std::vector<Index> parent_edge(static_cast<std::size_t>(n), -1);
  std::vector<Index> order;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<Index> queue;
  queue.push(0);
  seen[0] = 1;
  while (!queue.empty()) {
    const Index k = queue.front();
    queue.pop();
    order.push_back(k);
    const auto edges = g.incident_edges(k);
    const auto nbrs = g.neighbors(k);
    for (std::size_t a = 0; a < edges.size(); ++a) {
      const Index l = nbrs[a];
      if (seen[static_cast<std::size_t>(l)]) continue;
      seen[static_cast<std::size_t>(l)] = 1;
      parent_edge[static_cast<std::size_t>(l)] = edges[a];
      queue.push(l);
    }
  }

  SaddlePoint out;
  out.x_star = x_star;
  out.y_star = Eigen::VectorXd::Zero(2 * g.num_edges());
  Eigen::VectorXd subtree = slope;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Index c = *it;
    const Index e = parent_edge[static_cast<std::size_t>(c)];
    if (e < 0) continue;
    const Index p = g.edge(e).i == c ? g.edge(e).j : g.edge(e).i;
    out.y_star(g.slot_of(e, c)) = subtree(c);
    out.y_star(g.slot_of(e, p)) = -subtree(c);
    subtree(p) += subtree(c);
  }
  return out;
}

double lyapunov(const SyncState& s, const Graph& g, const SaddlePoint& saddle, double rho) {
  require(s.track_duals, "Lyapunov function needs tracked duals");
  long double v = 0.0L;
  for (Index e = 0; e < g.num_edges(); ++e) {
    for (const bool larger : {false, true}) {
      const Index k = larger ? g.edge(e).j : g.edge(e).i;
      const Index slot = Graph::slot(e, larger);
      const long double term = static_cast<long double>(s.y(slot, 0)) - saddle.y_star(slot) -
                               static_cast<long double>(rho) * (static_cast<long double>(s.x(k, 0)) - saddle.x_star);
      v += term * term;
    }
  }
  return static_cast<double>(v);
}

double residual_sq(const SyncState& s, const Graph& g) {
  require(s.track_duals, "residual needs tracked edge values");
  long double r = 0.0L;
  for (Index e = 0; e < g.num_edges(); ++e) {
    for (const Index k : {g.edge(e).i, g.edge(e).j}) {
      const long double d = static_cast<long double>(s.z_edge(e, 0)) - s.x(k, 0);
      r += d * d;
    }
  }
  return static_cast<double>(r);
}

double objective_gap(const NodeMatrix& x, std::span<const Pinball> objectives, double x_star) {
  require(static_cast<Index>(objectives.size()) == x.rows(), "one objective per node required");
  long double fx = 0.0L, fstar = 0.0L;
  for (Index k = 0; k < x.rows(); ++k) {
    fx += objectives[static_cast<std::size_t>(k)].value(x(k, 0));
    fstar += objectives[static_cast<std::size_t>(k)].value(x_star);
  }
  return static_cast<double>(std::abs(fx - fstar));
}

double track_A(const AsylState& s, const Graph& g) {
  double a = 0.0;
  RowVector zsum(s.x.cols());
  for (Index k = 0; k < g.num_nodes(); ++k) {
    zsum.setZero();
    for (const Index l : g.neighbors(k)) zsum += 0.5 * (s.x.row(k) + s.x.row(l));
    a += s.mu_hat.row(k).dot(zsum) / static_cast<double>(g.degree(k));
  }
  return std::abs(a);
}

SyncTheoryReport sync_theory_trace(const Graph& g, std::span<const Pinball> objectives, double x_star, double rho,
                                   std::int64_t rounds, const EdgeDistribution& dist, Rng edge_rng) {
  require(rounds >= 0, "round count must be non-negative");
  const auto saddle = solve_saddle_dual(g, objectives, x_star);
  auto sync = sync_init(g, objectives, true);
  auto asyl = asyl_init(objectives);
  SyncTheoryReport out;
  double v = lyapunov(sync, g, saddle, rho);
  out.initial_lyapunov = v;
  out.worst_decrement_excess = -std::numeric_limits<double>::infinity();
  out.trace.push_back({0, v, residual_sq(sync, g), objective_gap(sync.x, objectives, x_star), track_A(asyl, g)});
  for (std::int64_t t = 1; t <= rounds; ++t) {
    sync_step(sync, g, rho, objectives, true);
    for (Index a = 0; a < g.num_edges(); ++a) asyladmm_step(asyl, g, dist.sample(edge_rng), rho, objectives);
    const double next = lyapunov(sync, g, saddle, rho);
    const double r2 = residual_sq(sync, g);
    out.worst_decrement_excess = std::max(out.worst_decrement_excess, next - v + rho * rho * r2);
    out.residual_budget += rho * rho * r2;
    v = next;
    out.trace.push_back({t, v, r2, objective_gap(sync.x, objectives, x_star), track_A(asyl, g)});
  }
  if (rounds == 0) out.worst_decrement_excess = 0.0;
  return out;
}

// ---------------------------------------------------------------------------

std::size_t permutation_index(std::span<const int> perm) {
  const std::size_t n = perm.size();
  std::size_t index = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t smaller = 0;
    for (std::size_t j = i + 1; j < n; ++j) smaller += perm[j] < perm[i] ? 1 : 0;
    index = index * (n - i) + smaller;
  }
  return index;
}

InterchangeChain build_interchange_chain(const Graph& g, const EdgeDistribution& dist) {
  require(g.num_nodes() <= kMaxChainNodes, "interchange chain limited to 7 nodes");
  require(dist.size() == g.num_edges(), "distribution does not match the graph");
  InterchangeChain chain;
  chain.n = static_cast<int>(g.num_nodes());
  std::vector<int> perm(static_cast<std::size_t>(chain.n));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    chain.states.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  const auto size = static_cast<Index>(chain.states.size());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(chain.states.size() * static_cast<std::size_t>(g.num_edges()));
  for (Index s = 0; s < size; ++s) {
    auto next = chain.states[static_cast<std::size_t>(s)];
    for (Index e = 0; e < g.num_edges(); ++e) {
      const auto [i, j] = g.edge(e);
      std::swap(next[static_cast<std::size_t>(i)], next[static_cast<std::size_t>(j)]);
      entries.emplace_back(s, static_cast<Index>(permutation_index(next)), dist.prob(e));
      std::swap(next[static_cast<std::size_t>(i)], next[static_cast<std::size_t>(j)]);
    }
  }
  chain.P.resize(size, size);
  chain.P.setFromTriplets(entries.begin(), entries.end());
  return chain;
}

double chain_spectral_gap(const InterchangeChain& chain) {
  const Eigen::MatrixXd dense(chain.P);
  const Eigen::VectorXd ev = symmetric_eigenvalues(dense);
  return 1.0 - ev(ev.size() - 2);
}

GapReport verify_gap_identity(const Graph& g, const EdgeDistribution& dist, double tol) {
  GapReport r;
  r.gap_chain = chain_spectral_gap(build_interchange_chain(g, dist));
  r.c = spectral_summary(g, dist).c;
  r.agree = std::abs(r.gap_chain - r.c) <= tol;
  return r;
}

std::vector<Graph> all_connected_graphs(Index n) {
  require(n >= 2 && n <= 6, "graph enumeration limited to 2..6 nodes");
  std::vector<Edge> pairs;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) pairs.push_back({i, j});
  std::vector<Graph> out;
  const std::uint64_t total = std::uint64_t{1} << pairs.size();
  for (std::uint64_t mask = 1; mask < total; ++mask) {
    std::vector<Edge> edges;
    for (std::size_t b = 0; b < pairs.size(); ++b)
      if (mask >> b & 1U) edges.push_back(pairs[b]);
    if (static_cast<Index>(edges.size()) < n - 1 || !Graph::is_connected(n, edges)) continue;
    out.emplace_back(n, std::move(edges));
  }
  return out;
}

// ---------------------------------------------------------------------------

double hoeffding_bound(double c, double t, double gamma, double n) {
  require(c > 0.0 && c < 2.0, "spectral gap must lie in (0, 2)");
  require(t >= 1.0 && n > 0.0, "t >= 1 and n > 0 required");
  return 2.0 * std::exp(-(2.0 / (2.0 - c)) * c * t * gamma * gamma / (n * n));
}

double bernstein_bound(double c, double t, double u, double v_f, double n) {
  require(c > 0.0 && c < 2.0, "spectral gap must lie in (0, 2)");
  require(t >= 1.0 && n > 0.0 && u > 0.0, "t >= 1, n > 0 and u > 0 required");
  return 2.0 * std::exp(-c * t * u * u / (n * n) / (4.0 * v_f + 10.0 * u / n));
}

DeviationReport empirical_deviation(const Graph& g, std::span<const double> data, double alpha, std::int64_t t,
                                    std::int64_t trials, const EdgeDistribution& dist, Rng rng) {
  require(trials > 0, "at least one trial required");
  require(t >= 1, "t >= 1 required");
  const Index n = g.num_nodes();
  require(static_cast<Index>(data.size()) == n, "one observation per node required");
  const auto ranks = true_ranks(data);
  const auto interval = TrimInterval::make(n, alpha);

  DeviationReport out;
  out.t = t;
  out.trials = trials;
  out.c = spectral_summary(g, dist).c;
  out.gamma.resize(n);
  out.hoeffding.resize(n);
  out.bernstein.resize(n);
  for (Index k = 0; k < n; ++k) {
    const double r = static_cast<double>(ranks[static_cast<std::size_t>(k)]);
    const double rprime = (r - 1.0) / static_cast<double>(n);
    out.gamma(k) = interval.margin(r);
    out.hoeffding(k) = hoeffding_bound(out.c, double(t), out.gamma(k), double(n));
    out.bernstein(k) = bernstein_bound(out.c, double(t), out.gamma(k), rprime * (1.0 - rprime), double(n));
  }

  Eigen::VectorXd hits = Eigen::VectorXd::Zero(n);
  std::vector<double> aux(data.begin(), data.end());
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    Rng stream = rng.split(static_cast<std::uint64_t>(trial));
    std::copy(data.begin(), data.end(), aux.begin());
    std::shuffle(aux.begin(), aux.end(), stream);
    auto s = gorank_init(data, aux);
    for (std::int64_t round = 0; round < t; ++round) gorank_sync_round(s, g, dist, stream);
    for (Index k = 0; k < n; ++k) {
      const double dev = std::abs(s.rank(k) - static_cast<double>(ranks[static_cast<std::size_t>(k)]));
      if (dev >= out.gamma(k)) hits(k) += 1.0;
    }
  }
  out.frequency = hits / static_cast<double>(trials);
  out.half_width =
      1.96 * (out.frequency.array() * (1.0 - out.frequency.array()) / static_cast<double>(trials)).sqrt();
  return out;
}

}  // namespace gq
