#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gossipq/consensus.hpp"
#include "gossipq/graph.hpp"
#include "gossipq/metrics.hpp"
#include "gossipq/prox.hpp"
#include "gossipq/rng.hpp"

namespace gq {

/// r_k = 1 + #{l : a_k > a_l}. Throws InvalidArgument on ties.
std::vector<Index> true_ranks(std::span<const double> data);

/// Inclusion interval [m + 1/2, n - m + 1/2], m = floor(alpha n).
struct TrimInterval {
  Index n = 0;
  Index m = 0;
  double b1 = 0.0;
  double b2 = 0.0;

  static TrimInterval make(Index n, double alpha);
  bool contains(double rank) const { return rank >= b1 && rank <= b2; }
  /// Distance from an integer rank to the nearest interval boundary.
  double margin(double rank) const;
};

inline int rank_weight(double rank, const TrimInterval& interval) { return interval.contains(rank) ? 1 : 0; }

/// 1 iff x lies in [lo, hi]; crossed estimates (lo > hi) give 0.
inline int quantile_weight(double x, double lo, double hi) { return (x >= lo && x <= hi) ? 1 : 0; }

// ---------------------------------------------------------------------------
// GoRank

struct GoRankState {
  Eigen::VectorXd data;     ///< X_k
  Eigen::VectorXd aux;      ///< Y_k, a permutation of data at all times
  Eigen::VectorXd rprime;   ///< R'_k in [0, 1]
  Eigen::VectorXd counter;  ///< C_k >= 1 (asynchronous variant)
  std::int64_t rounds = 0;  ///< s (synchronous variant)

  Index size() const { return data.size(); }
  /// R_k = n R'_k + 1.
  double rank(Index k) const { return static_cast<double>(size()) * rprime(k) + 1.0; }
  Eigen::VectorXd ranks() const { return static_cast<double>(size()) * rprime.array() + 1.0; }
};

GoRankState gorank_init(std::span<const double> data);
/// Starts from a given auxiliary assignment instead of Y = X.
GoRankState gorank_init(std::span<const double> data, std::span<const double> aux);

/// Running-average update of node k followed by C_k += 1.
void gorank_update(GoRankState& s, Index k);
/// Both endpoints update, then swap Y_i <-> Y_j.
void gorank_async_step(GoRankState& s, const Graph& g, Index e);
/// Every node updates with weight 1/s, then one edge drawn from `swap_dist`
/// swaps. Uniform edge draws reproduce the textbook variant.
void gorank_sync_round(GoRankState& s, const Graph& g, const EdgeDistribution& swap_dist, Rng& rng);

// ---------------------------------------------------------------------------
// Adaptive GoTrim: weighted partial sums N_k and masses M_k with delta
// corrections, averaged over the activated edge.

struct TrimAverager {
  NodeMatrix values;  ///< X_k (n x dim)
  NodeMatrix sums;    ///< N_k
  Eigen::VectorXd mass;  ///< M_k
  Eigen::VectorXi weight;  ///< W_k in {0, 1}

  explicit TrimAverager(NodeMatrix x);
  /// N_k += (w - W_k) X_k, M_k += (w - W_k), W_k = w.
  void refresh(Index k, int w);
  void average(Index i, Index j);
  /// N_k / max(1/n, M_k).
  RowVector estimate(Index k) const;
  NodeMatrix estimates() const;
};

enum class TrimRule { rank, quantile };

/// Two AsylADMM instances tracking the alpha and 1 - alpha quantiles on the
/// same edge stream.
struct QuantilePair {
  std::vector<Pinball> lo_objectives;
  std::vector<Pinball> hi_objectives;
  AsylState lo;
  AsylState hi;
};

QuantilePair quantile_pair_init(std::span<const double> data, double alpha);
void quantile_pair_step(QuantilePair& q, const Graph& g, Index e, double rho);

struct GoTrimState {
  TrimRule rule = TrimRule::quantile;
  TrimInterval interval;
  double rho = 1.0;
  TrimAverager trim;
  std::optional<GoRankState> rank;
  std::optional<QuantilePair> quantiles;
};

GoTrimState gotrim_init(std::span<const double> data, double alpha, TrimRule rule, double rho);
void gotrim_step(GoTrimState& s, const Graph& g, Index e);

/// Oracle weights: 1 iff the true rank lies in the inclusion interval.
Eigen::VectorXi oracle_weights(std::span<const double> data, double alpha);
/// Mean of |W_k - w_k| across nodes.
double weight_error(const Eigen::VectorXi& estimated, const Eigen::VectorXi& oracle);

/// The ceil(alpha n)-th order statistic, the unique minimizer of the summed
/// pinball loss. Throws InvalidArgument when alpha n is an integer.
double exact_quantile(std::span<const double> values, double alpha);

/// Mean of the sorted middle block (ranks m+1 .. n-m).
double exact_trimmed_mean(std::span<const double> data, double alpha);

struct GoTrimTrace {
  MetricSeries estimate_error;  ///< |N_k / M_k - reference| across nodes
  MetricSeries weight_error;    ///< |W_k - w_k| across nodes
};

GoTrimTrace run_gotrim(TrimRule rule, const Graph& g, std::span<const double> data, double alpha, double rho,
                       double reference, const EdgeDistribution& dist, const std::vector<std::int64_t>& grid,
                       Rng edge_rng);

// ---------------------------------------------------------------------------
// GoDepth: running L2-depth estimates from swapped partner observations.

struct GoDepthState {
  NodeMatrix data;         ///< x_k
  NodeMatrix aux;          ///< y_k
  Eigen::VectorXd mean_distance;  ///< z_k
  Eigen::VectorXd counter;        ///< c_k
  Eigen::VectorXd depth;          ///< d_k = 1 / (1 + z_k)
};

GoDepthState godepth_init(const NodeMatrix& data);
/// Swap y_i <-> y_j, then both endpoints refresh their running mean and depth.
void godepth_step(GoDepthState& s, const Graph& g, Index e);

/// Exact L2 depth (1 + (1/n) sum_i ||x_k - x_i||)^-1 of every data point.
Eigen::VectorXd l2_depths(const NodeMatrix& data);

/// AsylADMM on the alpha-quantile of the running depth estimates, with each
/// activated node's anchor replaced by its fresh depth.
struct DepthQuantileState {
  GoDepthState depth;
  std::vector<Pinball> objectives;
  AsylState quantile;
};

DepthQuantileState depth_quantile_init(const NodeMatrix& data, double alpha);
void asyladmm_godepth_step(DepthQuantileState& s, const Graph& g, Index e, double rho);

/// Depth-based trimmed mean: include node k iff d_k >= its depth-quantile
/// estimate, averaged with the GoTrim skeleton.
struct DepthTrimState {
  DepthQuantileState joint;
  TrimAverager trim;
  double rho = 1.0;
};

DepthTrimState depth_trim_init(const NodeMatrix& data, double alpha, double rho);
void depth_trim_step(DepthTrimState& s, const Graph& g, Index e);

/// Mean of the points whose exact depth is at least the exact alpha-quantile
/// of the depths.
RowVector exact_depth_trimmed_mean(const NodeMatrix& data, double alpha);

}  // namespace gq
