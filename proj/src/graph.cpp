#include "gossipq/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

namespace gq {

namespace {

std::size_t uz(Index i) { return static_cast<std::size_t>(i); }

}  // namespace

Graph::Graph(Index n, std::vector<Edge> edges, std::optional<Eigen::MatrixX2d> positions,
             std::optional<double> radius)
    : n_(n), edges_(std::move(edges)), positions_(std::move(positions)), radius_(radius) {
  require(n_ >= 2, "graph needs at least two nodes");
  for (auto& e : edges_) {
    require(e.i >= 0 && e.j >= 0 && e.i < n_ && e.j < n_, "edge endpoint out of range");
    require(e.i != e.j, "self-loop");
    if (e.i > e.j) std::swap(e.i, e.j);
  }
  std::sort(edges_.begin(), edges_.end());
  require(std::adjacent_find(edges_.begin(), edges_.end()) == edges_.end(), "duplicate edge");
  require(is_connected(n_, edges_), "graph is not connected");
  if (positions_) require(positions_->rows() == n_, "positions must have one row per node");

  degrees_.assign(uz(n_), 0);
  for (const auto& e : edges_) {
    ++degrees_[uz(e.i)];
    ++degrees_[uz(e.j)];
  }
  adj_offsets_.assign(uz(n_) + 1, 0);
  for (Index k = 0; k < n_; ++k) adj_offsets_[uz(k) + 1] = adj_offsets_[uz(k)] + degrees_[uz(k)];
  adj_edges_.resize(2 * edges_.size());
  adj_nodes_.resize(2 * edges_.size());
  std::vector<Index> fill(adj_offsets_.begin(), adj_offsets_.end() - 1);
  for (Index e = 0; e < num_edges(); ++e) {
    const auto [i, j] = edges_[uz(e)];
    adj_edges_[uz(fill[uz(i)])] = e;
    adj_nodes_[uz(fill[uz(i)]++)] = j;
    adj_edges_[uz(fill[uz(j)])] = e;
    adj_nodes_[uz(fill[uz(j)]++)] = i;
  }
}

std::span<const Index> Graph::incident_edges(Index k) const {
  return {adj_edges_.data() + adj_offsets_[uz(k)], uz(degrees_[uz(k)])};
}

std::span<const Index> Graph::neighbors(Index k) const {
  return {adj_nodes_.data() + adj_offsets_[uz(k)], uz(degrees_[uz(k)])};
}

bool Graph::is_connected(Index n, std::span<const Edge> edges) {
  if (n <= 0) return false;
  std::vector<Index> parent(uz(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[uz(x)] != x) x = parent[uz(x)] = parent[uz(parent[uz(x)])];
    return x;
  };
  Index components = n;
  for (const auto& e : edges) {
    const Index a = find(e.i), b = find(e.j);
    if (a != b) {
      parent[uz(a)] = b;
      --components;
    }
  }
  return components == 1;
}

bool Graph::is_bipartite() const {
  std::vector<int> color(uz(n_), -1);
  std::queue<Index> q;
  color[0] = 0;
  q.push(0);
  while (!q.empty()) {
    const Index u = q.front();
    q.pop();
    for (Index v : neighbors(u)) {
      if (color[uz(v)] < 0) {
        color[uz(v)] = 1 - color[uz(u)];
        q.push(v);
      } else if (color[uz(v)] == color[uz(u)]) {
        return false;
      }
    }
  }
  return true;
}

Eigen::MatrixXd Graph::laplacian() const {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n_, n_);
  for (const auto& [i, j] : edges_) {
    l(i, i) += 1.0;
    l(j, j) += 1.0;
    l(i, j) -= 1.0;
    l(j, i) -= 1.0;
  }
  return l;
}

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::cycle: return "cycle";
    case TopologyKind::complete: return "complete";
    case TopologyKind::path: return "path";
    case TopologyKind::star: return "star";
    case TopologyKind::geometric: return "geometric";
    case TopologyKind::watts_strogatz: return "watts_strogatz";
  }
  return "?";
}

TopologyKind topology_from_string(const std::string& name) {
  for (auto k : {TopologyKind::cycle, TopologyKind::complete, TopologyKind::path, TopologyKind::star,
                 TopologyKind::geometric, TopologyKind::watts_strogatz}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown topology: " + name);
}

namespace {

Graph build_geometric(const TopologySpec& spec, Rng& rng) {
  const Index n = spec.n;
  const Index max_pairs = n * (n - 1) / 2;
  if (spec.target_edges > 0) {
    require(spec.target_edges >= n - 1 && spec.target_edges < max_pairs,
            "geometric target_edges must lie in [n-1, n(n-1)/2)");
  } else {
    require(spec.radius > 0.0 && spec.radius < std::sqrt(2.0), "geometric radius must lie in (0, sqrt 2)");
  }
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    Rng draw = rng.split(static_cast<std::uint64_t>(attempt));
    Eigen::MatrixX2d pos(n, 2);
    for (Index k = 0; k < n; ++k) {
      pos(k, 0) = draw.uniform();
      pos(k, 1) = draw.uniform();
    }
    struct Pair {
      double dist;
      Edge edge;
    };
    std::vector<Pair> pairs;
    pairs.reserve(uz(max_pairs));
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) pairs.push_back({(pos.row(i) - pos.row(j)).norm(), {i, j}});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.dist < b.dist; });

    double radius = spec.radius;
    if (spec.target_edges > 0) {
      const auto t = uz(spec.target_edges);
      radius = 0.5 * (pairs[t - 1].dist + pairs[t].dist);
    }
    std::vector<Edge> edges;
    for (const auto& p : pairs) {
      if (p.dist > radius) break;
      edges.push_back(p.edge);
    }
    if (Graph::is_connected(n, edges)) return Graph(n, std::move(edges), std::move(pos), radius);
  }
  throw InvalidArgument("geometric graph: no connected draw within the retry cap (radius too small?)");
}

Graph build_watts_strogatz(const TopologySpec& spec, Rng& rng) {
  const Index n = spec.n;
  const Index k = spec.ring_degree;
  require(k >= 2 && k % 2 == 0 && k < n, "watts_strogatz ring degree must be even and < n");
  require(spec.rewire >= 0.0 && spec.rewire <= 1.0, "watts_strogatz rewiring probability must lie in [0,1]");
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    Rng draw = rng.split(static_cast<std::uint64_t>(attempt));
    std::set<Edge> edges;
    auto canon = [](Index a, Index b) { return a < b ? Edge{a, b} : Edge{b, a}; };
    for (Index u = 0; u < n; ++u)
      for (Index s = 1; s <= k / 2; ++s) edges.insert(canon(u, (u + s) % n));
    // Rewire each lattice edge (u, u+s) with probability `rewire`, keeping u.
    for (Index s = 1; s <= k / 2; ++s) {
      for (Index u = 0; u < n; ++u) {
        if (draw.uniform() >= spec.rewire) continue;
        const Edge old = canon(u, (u + s) % n);
        if (!edges.contains(old)) continue;
        Index degree_u = 0;
        for (const auto& e : edges) degree_u += (e.i == u || e.j == u);
        if (degree_u >= n - 1) continue;
        Index w;
        do {
          w = static_cast<Index>(draw.below(static_cast<std::uint64_t>(n)));
        } while (w == u || edges.contains(canon(u, w)));
        edges.erase(old);
        edges.insert(canon(u, w));
      }
    }
    std::vector<Edge> list(edges.begin(), edges.end());
    if (Graph::is_connected(n, list)) return Graph(n, std::move(list));
  }
  throw InvalidArgument("watts_strogatz: no connected draw within the retry cap");
}

}  // namespace

Graph build_topology(const TopologySpec& spec, Rng rng) {
  const Index n = spec.n;
  require(n >= 3, "topology needs n >= 3");
  std::vector<Edge> edges;
  switch (spec.kind) {
    case TopologyKind::cycle:
      for (Index k = 0; k < n; ++k) edges.push_back({k, (k + 1) % n});
      return Graph(n, std::move(edges));
    case TopologyKind::path:
      for (Index k = 0; k + 1 < n; ++k) edges.push_back({k, k + 1});
      return Graph(n, std::move(edges));
    case TopologyKind::star:
      for (Index k = 1; k < n; ++k) edges.push_back({0, k});
      return Graph(n, std::move(edges));
    case TopologyKind::complete:
      for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) edges.push_back({i, j});
      return Graph(n, std::move(edges));
    case TopologyKind::geometric:
      return build_geometric(spec, rng);
    case TopologyKind::watts_strogatz:
      return build_watts_strogatz(spec, rng);
  }
  throw InvalidArgument("unknown topology kind");
}

EdgeDistribution::EdgeDistribution(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  require(probs_.size() > 0, "edge distribution is empty");
  require((probs_.array() > 0.0).all(), "edge probabilities must be positive");
  require(std::abs(probs_.sum() - 1.0) <= 1e-12, "edge probabilities must sum to 1");
  cumulative_.resize(uz(probs_.size()));
  double acc = 0.0;
  for (Index e = 0; e < probs_.size(); ++e) cumulative_[uz(e)] = (acc += probs_(e));
}

Index EdgeDistribution::sample(Rng& rng) const {
  const double u = rng.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto idx = std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                            static_cast<std::ptrdiff_t>(cumulative_.size()) - 1);
  return static_cast<Index>(idx);
}

EdgeDistribution edge_probabilities(const Graph& g) {
  const double n = static_cast<double>(g.num_nodes());
  Eigen::VectorXd p(g.num_edges());
  for (Index e = 0; e < g.num_edges(); ++e) {
    const auto [i, j] = g.edge(e);
    p(e) = (1.0 / static_cast<double>(g.degree(i)) + 1.0 / static_cast<double>(g.degree(j))) / n;
  }
  return EdgeDistribution(std::move(p));
}

EdgeDistribution uniform_edge_probabilities(const Graph& g) {
  return EdgeDistribution(Eigen::VectorXd::Constant(g.num_edges(), 1.0 / static_cast<double>(g.num_edges())));
}

Eigen::MatrixXd weighted_laplacian(const Graph& g, const EdgeDistribution& dist) {
  require(dist.size() == g.num_edges(), "edge distribution size does not match the graph");
  const Index n = g.num_nodes();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Index e = 0; e < g.num_edges(); ++e) {
    const auto [i, j] = g.edge(e);
    const double p = dist.prob(e);
    l(i, i) += p;
    l(j, j) += p;
    l(i, j) -= p;
    l(j, i) -= p;
  }
  return l;
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InvariantViolation("symmetric eigen-solver did not converge");
  return solver.eigenvalues();
}

SpectralSummary spectral_summary(const Graph& g, const EdgeDistribution& dist) {
  SpectralSummary s;
  s.lambda2 = symmetric_eigenvalues(g.laplacian())(1);
  s.c = symmetric_eigenvalues(weighted_laplacian(g, dist))(1);
  s.connectivity = s.lambda2 / static_cast<double>(g.num_edges());
  return s;
}

}  // namespace gq
