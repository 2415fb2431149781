#include "gossipq/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "gossipq/ranktrim.hpp"

namespace gq {

std::string to_string(DataKind kind) {
  switch (kind) {
    case DataKind::gaussian: return "gaussian";
    case DataKind::cauchy: return "cauchy";
    case DataKind::arc2d: return "arc2d";
  }
  return "?";
}

DataKind data_kind_from_string(const std::string& name) {
  if (name == "gaussian") return DataKind::gaussian;
  if (name == "cauchy") return DataKind::cauchy;
  if (name == "arc2d") return DataKind::arc2d;
  throw InvalidArgument("unknown data distribution: " + name);
}

RowVector DataSpec::clean_location() const {
  if (kind == DataKind::arc2d) return mu.transpose();
  return RowVector::Constant(1, clean_mean);
}

namespace {

bool has_tied_rows(const NodeMatrix& m) {
  std::vector<Index> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  auto less = [&](Index a, Index b) {
    for (Index c = 0; c < m.cols(); ++c)
      if (m(a, c) != m(b, c)) return m(a, c) < m(b, c);
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t k = 1; k < order.size(); ++k)
    if (!less(order[k - 1], order[k])) return true;
  return false;
}

bool has_tied_values(const NodeMatrix& m) {
  std::vector<double> v(m.data(), m.data() + m.size());
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

NodeMatrix draw(const DataSpec& spec, Index n, Rng& rng) {
  const auto bad = static_cast<Index>(std::floor(spec.contamination * static_cast<double>(n)));
  NodeMatrix out(n, spec.dim());
  switch (spec.kind) {
    case DataKind::gaussian: {
      std::normal_distribution<double> clean(spec.clean_mean, spec.clean_sd);
      std::normal_distribution<double> outlier(spec.outlier_mean, spec.outlier_sd);
      for (Index k = 0; k < n; ++k) out(k, 0) = k < bad ? outlier(rng) : clean(rng);
      break;
    }
    case DataKind::cauchy: {
      std::cauchy_distribution<double> dist(spec.clean_mean, spec.cauchy_scale);
      for (Index k = 0; k < n; ++k) out(k, 0) = dist(rng);
      break;
    }
    case DataKind::arc2d: {
      const Eigen::Matrix2d chol = spec.sigma.llt().matrixL();
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Index k = 0; k < n; ++k) {
        if (k < bad) {
          const double angle = rng.uniform(spec.arc_lo, spec.arc_hi);
          out.row(k) = spec.mu.transpose() + spec.arc_radius * Eigen::RowVector2d(std::cos(angle), std::sin(angle));
        } else {
          const Eigen::Vector2d g(normal(rng), normal(rng));
          out.row(k) = (spec.mu + chol * g).transpose();
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace

NodeMatrix generate_data(const DataSpec& spec, Index n, Rng rng) {
  require(n > 0, "sample size must be positive");
  require(spec.contamination >= 0.0 && spec.contamination < 1.0, "contamination must lie in [0, 1)");
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Rng stream = rng.split(attempt);
    NodeMatrix samples = draw(spec, n, stream);
    const bool tied = spec.dim() == 1 ? has_tied_values(samples) : has_tied_rows(samples);
    if (tied) continue;
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), stream);
    NodeMatrix out(n, spec.dim());
    for (Index k = 0; k < n; ++k) out.row(k) = samples.row(perm[static_cast<std::size_t>(k)]);
    return out;
  }
  throw InvariantViolation("could not draw tie-free data");
}

RowVector geometric_median(const NodeMatrix& points, double tol, int max_iter) {
  require(points.rows() > 0, "no points");
  RowVector x = points.colwise().mean();
  for (int it = 0; it < max_iter; ++it) {
    RowVector num = RowVector::Zero(points.cols());
    RowVector pull = RowVector::Zero(points.cols());
    double den = 0.0;
    bool at_point = false;
    for (Index k = 0; k < points.rows(); ++k) {
      const RowVector diff = points.row(k) - x;
      const double dist = diff.norm();
      if (dist < 1e-14) {
        at_point = true;
        continue;
      }
      num += points.row(k) / dist;
      den += 1.0 / dist;
      pull += diff / dist;
    }
    RowVector next = num / den;
    if (at_point) {
      // Vardi-Zhang: mix the Weiszfeld map with the current anchor point.
      const double r = pull.norm();
      if (r <= 1.0) return x;
      const double eta = 1.0 / r;
      next = (1.0 - eta) * next + eta * x;
    }
    const double step = (next - x).norm();
    x = next;
    if (step < tol * (1.0 + x.norm())) break;
  }
  return x;
}

double geometric_median_gradient_norm(const NodeMatrix& points, const RowVector& x) {
  RowVector grad = RowVector::Zero(points.cols());
  int hits = 0;
  for (Index k = 0; k < points.rows(); ++k) {
    const RowVector diff = x - points.row(k);
    const double dist = diff.norm();
    if (dist < 1e-14) {
      ++hits;
      continue;
    }
    grad += diff / dist;
  }
  const double norm = grad.norm();
  return std::max(0.0, norm - static_cast<double>(hits));
}

RowVector exact_target(const TargetSpec& spec, const NodeMatrix& data) {
  switch (spec.kind) {
    case TargetKind::quantile:
      require(data.cols() == 1, "quantile target needs scalar data");
      return RowVector::Constant(1, exact_quantile(column_span(data), spec.alpha));
    case TargetKind::geometric_median: return geometric_median(data);
    case TargetKind::trimmed_mean:
      require(data.cols() == 1, "trimmed mean target needs scalar data");
      return RowVector::Constant(1, exact_trimmed_mean(column_span(data), spec.alpha));
    case TargetKind::depth_quantile: {
      const Eigen::VectorXd d = l2_depths(data);
      return RowVector::Constant(1, exact_quantile({d.data(), static_cast<std::size_t>(d.size())}, spec.alpha));
    }
    case TargetKind::mean: return data.colwise().mean();
  }
  return {};
}

}  // namespace gq
