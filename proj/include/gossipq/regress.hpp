#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gossipq/consensus.hpp"
#include "gossipq/graph.hpp"
#include "gossipq/metrics.hpp"
#include "gossipq/ranktrim.hpp"
#include "gossipq/rng.hpp"

namespace gq {

/// Synthetic line-fit data: clean points y = slope x + intercept + noise and a
/// fixed number of contaminated points with Gaussian labels far off the line.
struct RegressionSpec {
  Index n = 101;
  double contamination = 0.1;
  /// x_k = x_lo + (x_hi - x_lo) u_k^x_power with u_k = (k + U_k) / n jittered
  /// stratified levels, assigned to nodes in random order.
  double x_lo = 1.0;
  double x_hi = 5.0;
  double x_power = 2.0;
  double slope_lo = 0.5;  ///< theta* = (slope, intercept), uniform on these ranges
  double slope_hi = 2.0;
  double intercept_lo = 0.5;
  double intercept_hi = 2.0;
  double noise_sd = 0.5;
  /// Contaminated labels are replaced by N(outlier_y_mean, outlier_y_sd^2).
  double outlier_y_mean = 60.0;
  double outlier_y_sd = 10.0;
};

struct RegressionProblem {
  NodeMatrix features;         ///< n x 2 rows (x_k, 1)
  Eigen::VectorXd labels;      ///< y_k
  std::vector<bool> contaminated;
  Eigen::VectorXd scores;      ///< d_k = -|x_k| |y_k|
  RowVector theta_star;        ///< (slope, intercept)

  Index size() const { return labels.size(); }
};

/// Draws a problem; regenerates on tied scores. Contaminated nodes are a
/// uniformly random subset of size floor(contamination * n).
RegressionProblem generate_regression(const RegressionSpec& spec, Rng rng);

/// Least squares on the rows with mask[k] true.
RowVector least_squares(const RegressionProblem& p, const std::vector<bool>& mask);
/// Huber M-estimate via iteratively reweighted least squares, threshold
/// 1.345 times the normalized MAD of the current residuals.
RowVector huber_regression(const RegressionProblem& p, double threshold = 1.345, int max_iter = 200,
                           double tol = 1e-10);

struct OracleBaselines {
  RowVector oracle_regression;  ///< clean points only
  RowVector oracle_trimming;    ///< all but the m lowest scores
  RowVector corrupted;          ///< every point
  RowVector huber;
};

/// Inclusion mask of OracleTrimming: false for the m = floor(alpha n) lowest scores.
std::vector<bool> oracle_trimming_mask(const RegressionProblem& p, double alpha);
OracleBaselines oracle_baselines(const RegressionProblem& p, double alpha);

enum class GradientRule { rank, quantile, oracle };
enum class TrimSchedule { simultaneous, sequential };

struct TrimmedGdOptions {
  GradientRule rule = GradientRule::rank;
  TrimSchedule schedule = TrimSchedule::simultaneous;
  double alpha = 0.2;
  double rho = 0.09;        ///< gradient step
  double quantile_rho = 1.0;  ///< AsylADMM step on the scores
  /// Rank rule: include iff R_k > m + kappa / sqrt(c_k).
  double kappa = 0.0;
  /// Quantile rule: include iff c_k > burn_in and d_k > q_k + quantile_kappa / sqrt(c_k).
  double burn_in = 0.0;
  double quantile_kappa = 0.0;
  /// Sequential schedule: activations spent estimating before the weights freeze.
  std::int64_t estimation_steps = 0;
  double divergence_threshold = kDivergenceThreshold;
};

/// kappa = burn_in = 4 n / p.
TrimmedGdOptions options_for_p(GradientRule rule, double p, Index n);

struct TrimmedGdState {
  NodeMatrix theta;            ///< n x 2
  Eigen::VectorXd updates;     ///< c_k, activations of node k so far
  Eigen::VectorXi include;     ///< b_k of the latest step
  std::optional<GoRankState> rank;
  std::optional<AsylState> quantile;
  std::vector<Pinball> score_objectives;
  std::vector<bool> oracle;    ///< fixed weights of the oracle rule
  std::int64_t steps = 0;
  bool frozen = false;
  bool diverged = false;
};

TrimmedGdState trimmed_gd_init(const RegressionProblem& p, const TrimmedGdOptions& opts);

/// Current b_k from the rule state.
int inclusion(const TrimmedGdState& s, const RegressionProblem& p, const TrimmedGdOptions& opts, Index k);

/// Advances the rule state on edge e, refreshes b_k for all nodes, takes the
/// trimmed gradient step theta_k -= rho b_k x_k (x_k^T theta_k - y_k) at every
/// node, then averages theta over e.
void trimmed_gd_step(TrimmedGdState& s, const RegressionProblem& p, const Graph& g, Index e,
                     const TrimmedGdOptions& opts);

/// Parameter error ||theta_k - theta_star|| across nodes on the grid; +inf
/// after divergence.
MetricSeries run_trimmed_gd(const RegressionProblem& p, const Graph& g, const TrimmedGdOptions& opts,
                            const EdgeDistribution& dist, const std::vector<std::int64_t>& grid, Rng edge_rng);

}  // namespace gq
