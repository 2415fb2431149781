#include "gossipq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gq {

std::vector<std::int64_t> linear_checkpoints(std::int64_t budget, std::int64_t every) {
  require(budget >= 0, "budget must be non-negative");
  require(every > 0, "evaluation interval must be positive");
  std::vector<std::int64_t> grid;
  for (std::int64_t t = 0; t < budget; t += every) grid.push_back(t);
  grid.push_back(budget);
  return grid;
}

std::vector<std::int64_t> geometric_checkpoints(std::int64_t budget, int count) {
  require(budget >= 0, "budget must be non-negative");
  require(count > 0, "checkpoint count must be positive");
  std::vector<std::int64_t> grid{0};
  const double top = std::log(static_cast<double>(std::max<std::int64_t>(budget, 1)));
  for (int i = 1; i <= count; ++i) {
    const auto t = static_cast<std::int64_t>(std::llround(std::exp(top * i / count)));
    const auto clamped = std::min(t, budget);
    if (clamped > grid.back()) grid.push_back(clamped);
  }
  if (grid.back() != budget) grid.push_back(budget);
  return grid;
}

Checkpoint node_error(const NodeMatrix& x, const RowVector& truth, std::int64_t activations) {
  require(truth.size() == x.cols(), "truth dimension does not match the state");
  const Eigen::VectorXd err = (x.rowwise() - truth).rowwise().norm();
  const double mean = err.mean();
  const double var = (err.array() - mean).square().mean();
  return {activations, mean, std::sqrt(var)};
}

MetricSeries aggregate(const std::vector<MetricSeries>& runs, std::string label) {
  require(!runs.empty(), "nothing to aggregate");
  MetricSeries out;
  out.label = std::move(label);
  out.seed = runs.front().seed;
  out.config_hash = runs.front().config_hash;
  const std::size_t points = runs.front().checkpoints.size();
  for (const auto& r : runs) {
    require(r.checkpoints.size() == points, "runs have different checkpoint grids");
    out.diverged = out.diverged || r.diverged;
  }
  const double count = static_cast<double>(runs.size());
  for (std::size_t c = 0; c < points; ++c) {
    double sum = 0.0, sq = 0.0;
    for (const auto& r : runs) {
      require(r.checkpoints[c].activations == runs.front().checkpoints[c].activations,
              "runs have different checkpoint grids");
      sum += r.checkpoints[c].mae_mean;
    }
    const double mean = sum / count;
    for (const auto& r : runs) sq += (r.checkpoints[c].mae_mean - mean) * (r.checkpoints[c].mae_mean - mean);
    const double sd = std::isfinite(mean) ? std::sqrt(sq / count) : std::numeric_limits<double>::infinity();
    out.checkpoints.push_back({runs.front().checkpoints[c].activations, mean, sd});
  }
  return out;
}

}  // namespace gq
