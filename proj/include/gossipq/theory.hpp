#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gossipq/consensus.hpp"
#include "gossipq/graph.hpp"
#include "gossipq/prox.hpp"
#include "gossipq/rng.hpp"

namespace gq {

// ---------------------------------------------------------------------------
// Saddle point and Lyapunov diagnostics for the synchronous variant.

struct SaddlePoint {
  double x_star = 0.0;
  Eigen::VectorXd y_star;  ///< 2|E|, slot order of Graph::slot
};

/// Antisymmetric edge duals whose node sums are a subgradient selection of
/// f_k at x_star, routed leaf-to-root along a BFS spanning tree. Throws
/// InvalidArgument when no such selection exists (x_star is not optimal).
SaddlePoint solve_saddle_dual(const Graph& g, std::span<const Pinball> objectives, double x_star,
                              double tol = 1e-9);

/// V = ||(y - y*) - rho M (x - x*)||^2 over the stacked (edge, endpoint) slots.
double lyapunov(const SyncState& s, const Graph& g, const SaddlePoint& saddle, double rho);
/// ||z - M x||^2 with z the edge consensus values of the latest round.
double residual_sq(const SyncState& s, const Graph& g);
inline double residual_norm(const SyncState& s, const Graph& g) { return std::sqrt(residual_sq(s, g)); }

/// |sum_k f_k(x_k) - sum_k f_k(x*)|.
double objective_gap(const NodeMatrix& x, std::span<const Pinball> objectives, double x_star);

/// A = |sum_k (mu_hat_k / d_k)^T sum_{e in N_k} z_e| with z_e = (x_i + x_j) / 2
/// evaluated at the current iterate.
double track_A(const AsylState& s, const Graph& g);

struct TheoryTracePoint {
  std::int64_t round = 0;
  double lyapunov = 0.0;
  double residual_sq = 0.0;
  double gap = 0.0;
  double A = 0.0;
};

struct SyncTheoryReport {
  std::vector<TheoryTracePoint> trace;
  /// max_t (V^{t+1} - V^t + rho^2 ||r^{t+1}||^2); <= 0 when every round decreases V by at least rho^2 ||r||^2.
  double worst_decrement_excess = 0.0;
  /// rho^2 sum_t ||r^{t+1}||^2, bounded by the initial V.
  double residual_budget = 0.0;
  double initial_lyapunov = 0.0;
};

/// Runs the instrumented synchronous variant for `rounds` rounds and, in
/// parallel, AsylADMM for |E| activations per round on `edge_rng`, recording
/// V, ||r||^2 and the objective gap of the former and A(t) of the latter.
SyncTheoryReport sync_theory_trace(const Graph& g, std::span<const Pinball> objectives, double x_star, double rho,
                                   std::int64_t rounds, const EdgeDistribution& dist, Rng edge_rng);

// ---------------------------------------------------------------------------
// Interchange process.

struct InterchangeChain {
  int n = 0;
  std::vector<std::vector<int>> states;  ///< all n! permutations, lexicographic
  Eigen::SparseMatrix<double> P;
};

inline constexpr int kMaxChainNodes = 7;

/// P[sigma, sigma o tau_ij] = p_ij. Throws InvalidArgument for n > 7.
InterchangeChain build_interchange_chain(const Graph& g, const EdgeDistribution& dist);

/// Lexicographic index of a permutation of 0..n-1.
std::size_t permutation_index(std::span<const int> perm);

/// 1 - (second-largest signed eigenvalue of P).
double chain_spectral_gap(const InterchangeChain& chain);

struct GapReport {
  double gap_chain = 0.0;
  double c = 0.0;
  bool agree = false;
};

GapReport verify_gap_identity(const Graph& g, const EdgeDistribution& dist, double tol = 1e-10);

/// Every connected labeled simple graph on n nodes (n <= 6), by edge bitmask.
std::vector<Graph> all_connected_graphs(Index n);

// ---------------------------------------------------------------------------
// Concentration of synchronous GoRank.

/// 2 exp(-(2 / (2 - c)) c t gamma^2 / n^2).
double hoeffding_bound(double c, double t, double gamma, double n);
/// 2 exp(-c t u^2 n^-2 / (4 V_f + 10 u / n)).
double bernstein_bound(double c, double t, double u, double v_f, double n);

struct DeviationReport {
  std::int64_t t = 0;
  std::int64_t trials = 0;
  double c = 0.0;
  Eigen::VectorXd gamma;       ///< per-node distance of r_k to the interval boundary
  Eigen::VectorXd frequency;   ///< Monte Carlo estimate of P(|R_k(t) - r_k| >= gamma_k)
  Eigen::VectorXd half_width;  ///< 95% normal-approximation binomial half-width
  Eigen::VectorXd hoeffding;
  Eigen::VectorXd bernstein;
};

/// Synchronous GoRank from a uniformly random initial assignment, swapping
/// along `dist`, repeated `trials` times.
DeviationReport empirical_deviation(const Graph& g, std::span<const double> data, double alpha, std::int64_t t,
                                    std::int64_t trials, const EdgeDistribution& dist, Rng rng);

}  // namespace gq
