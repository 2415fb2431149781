#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gossipq/types.hpp"

namespace gq {

struct Checkpoint {
  std::int64_t activations = 0;
  double mae_mean = 0.0;
  double mae_std = 0.0;
};

/// Error trace of one run (mean/std across nodes) or of an aggregate over
/// trials (mean/std across trials of the per-run mean).
struct MetricSeries {
  std::string label;
  std::vector<Checkpoint> checkpoints;
  bool diverged = false;
  std::uint64_t seed = 0;
  std::string config_hash;

  double initial() const { return checkpoints.front().mae_mean; }
  double final() const { return checkpoints.back().mae_mean; }
};

/// 0, every, 2*every, ..., budget (budget always included).
std::vector<std::int64_t> linear_checkpoints(std::int64_t budget, std::int64_t every);
/// 0 plus `count` roughly log-spaced activation counts ending at budget.
std::vector<std::int64_t> geometric_checkpoints(std::int64_t budget, int count);

/// Mean and population standard deviation of ||x_k - truth|| across rows.
Checkpoint node_error(const NodeMatrix& x, const RowVector& truth, std::int64_t activations);

/// Point-wise mean/std of the per-run means across trials. All series must
/// share the same checkpoint grid.
MetricSeries aggregate(const std::vector<MetricSeries>& runs, std::string label);

}  // namespace gq
