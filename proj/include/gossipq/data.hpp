#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>

#include "gossipq/rng.hpp"
#include "gossipq/types.hpp"

namespace gq {

enum class DataKind { gaussian, cauchy, arc2d };

std::string to_string(DataKind kind);
DataKind data_kind_from_string(const std::string& name);

/// Contaminated samples. `gaussian`: floor(eps n) points from
/// N(outlier_mean, outlier_sd^2), the rest from N(clean_mean, clean_sd^2).
/// `cauchy`: Cauchy(clean_mean, cauchy_scale), no contamination.
/// `arc2d`: N(mu, Sigma) in the plane, floor(eps n) points uniform on the arc
/// of radius arc_radius around mu between angles arc_lo and arc_hi.
struct DataSpec {
  DataKind kind = DataKind::gaussian;
  double contamination = 0.2;
  double clean_mean = 10.0;
  double clean_sd = 3.0;
  double outlier_mean = 30.0;
  double outlier_sd = 5.0;
  double cauchy_scale = 10.0;
  Eigen::Vector2d mu{10.0, 10.0};
  Eigen::Matrix2d sigma{{5.0, 3.0}, {3.0, 5.0}};
  double arc_radius = 30.0;
  double arc_lo = 0.0;
  double arc_hi = 1.5707963267948966;

  Index dim() const { return kind == DataKind::arc2d ? 2 : 1; }
  /// Location of the clean distribution, the target robust estimators chase.
  RowVector clean_location() const;
};

/// n observations (n x dim), assigned to nodes in a uniformly random order.
/// Draws with tied values (or tied rows) are regenerated.
NodeMatrix generate_data(const DataSpec& spec, Index n, Rng rng);

inline std::span<const double> column_span(const NodeMatrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

/// Weiszfeld iteration with the Vardi-Zhang step at data points, run until
/// the step falls below tol.
RowVector geometric_median(const NodeMatrix& points, double tol = 1e-12, int max_iter = 100000);

/// Norm of a subgradient of x -> sum_i ||x - a_i|| of minimal norm.
double geometric_median_gradient_norm(const NodeMatrix& points, const RowVector& x);

enum class TargetKind { quantile, geometric_median, trimmed_mean, depth_quantile, mean };

struct TargetSpec {
  TargetKind kind = TargetKind::quantile;
  double alpha = 0.5;
};

/// Exact reference values: quantile by sorting (unique order statistic),
/// geometric median by Weiszfeld, trimmed mean over ranks m+1..n-m, depth
/// quantile from exact L2 depths, and the plain mean.
RowVector exact_target(const TargetSpec& spec, const NodeMatrix& data);

}  // namespace gq
