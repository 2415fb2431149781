#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gossipq/rng.hpp"
#include "gossipq/types.hpp"

namespace gq {

/// Undirected edge stored as (min, max).
struct Edge {
  Index i = 0;
  Index j = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Connected simple undirected graph. Edges are canonicalized to (min, max)
/// and sorted lexicographically; every per-edge array in the library is indexed
/// in this order. Immutable after construction.
class Graph {
 public:
  Graph(Index n, std::vector<Edge> edges,
        std::optional<Eigen::MatrixX2d> positions = std::nullopt,
        std::optional<double> radius = std::nullopt);

  Index num_nodes() const { return n_; }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(Index e) const { return edges_[static_cast<std::size_t>(e)]; }
  Index degree(Index k) const { return degrees_[static_cast<std::size_t>(k)]; }
  const std::vector<Index>& degrees() const { return degrees_; }

  /// Indices of edges incident to node k, ascending.
  std::span<const Index> incident_edges(Index k) const;
  /// Neighbors of k, in the same order as incident_edges(k).
  std::span<const Index> neighbors(Index k) const;

  /// Slot of (edge, endpoint) in the stacked 2|E| representation: 2e for the
  /// smaller endpoint, 2e+1 for the larger one.
  static Index slot(Index e, bool larger_endpoint) { return 2 * e + (larger_endpoint ? 1 : 0); }
  Index slot_of(Index e, Index k) const { return slot(e, edge(e).j == k); }

  const std::optional<Eigen::MatrixX2d>& positions() const { return positions_; }
  /// Connection radius used for geometric graphs.
  std::optional<double> radius() const { return radius_; }

  bool is_bipartite() const;
  Eigen::MatrixXd laplacian() const;

  static bool is_connected(Index n, std::span<const Edge> edges);

 private:
  Index n_;
  std::vector<Edge> edges_;
  std::vector<Index> degrees_;
  std::vector<Index> adj_offsets_;
  std::vector<Index> adj_edges_;
  std::vector<Index> adj_nodes_;
  std::optional<Eigen::MatrixX2d> positions_;
  std::optional<double> radius_;
};

enum class TopologyKind { cycle, complete, path, star, geometric, watts_strogatz };

std::string to_string(TopologyKind kind);
TopologyKind topology_from_string(const std::string& name);

struct TopologySpec {
  TopologyKind kind = TopologyKind::geometric;
  Index n = 101;
  /// Geometric: connection radius in (0, sqrt 2). Ignored when target_edges > 0.
  double radius = 0.0;
  /// Geometric: when > 0, pick the radius so the graph has exactly this many
  /// edges (midpoint between the target-th and next pairwise distance).
  Index target_edges = 0;
  /// Watts-Strogatz ring degree (even) and rewiring probability.
  Index ring_degree = 4;
  double rewire = 0.43;
  /// Regeneration cap for random topologies that come out disconnected.
  int max_attempts = 100;
};

/// Builds one of the test topologies. Random kinds draw from `rng`;
/// disconnected draws are regenerated up to `max_attempts` times.
Graph build_topology(const TopologySpec& spec, Rng rng);

/// Per-edge sampling probabilities plus a cumulative table for O(log |E|) draws.
class EdgeDistribution {
 public:
  explicit EdgeDistribution(Eigen::VectorXd probs);

  const Eigen::VectorXd& probs() const { return probs_; }
  double prob(Index e) const { return probs_(e); }
  Index size() const { return probs_.size(); }

  /// Draws edge e with probability p_e.
  Index sample(Rng& rng) const;

 private:
  Eigen::VectorXd probs_;
  std::vector<double> cumulative_;
};

/// Standard edge sampling: p_e = (1/n)(1/d_i + 1/d_j).
EdgeDistribution edge_probabilities(const Graph& g);
EdgeDistribution uniform_edge_probabilities(const Graph& g);

inline Index sample_edge(const EdgeDistribution& dist, Rng& rng) { return dist.sample(rng); }

/// L(P) = sum_e p_e (e_i - e_j)(e_i - e_j)^T.
Eigen::MatrixXd weighted_laplacian(const Graph& g, const EdgeDistribution& dist);

struct SpectralSummary {
  double lambda2 = 0.0;       ///< second-smallest eigenvalue of the unweighted Laplacian
  double c = 0.0;             ///< second-smallest eigenvalue of L(P)
  double connectivity = 0.0;  ///< lambda2 / |E|
};

SpectralSummary spectral_summary(const Graph& g, const EdgeDistribution& dist);

/// Ascending eigenvalues of a symmetric matrix.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m);

}  // namespace gq
