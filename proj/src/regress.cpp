#include "gossipq/regress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace gq {

RegressionProblem generate_regression(const RegressionSpec& spec, Rng rng) {
  require(spec.n >= 3, "need at least three points");
  require(spec.contamination >= 0.0 && spec.contamination < 1.0, "contamination must lie in [0, 1)");
  const auto bad = static_cast<Index>(std::floor(spec.contamination * static_cast<double>(spec.n)));
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng stream = rng.split(static_cast<std::uint64_t>(attempt));
    RegressionProblem p;
    p.theta_star.resize(2);
    p.theta_star(0) = stream.uniform(spec.slope_lo, spec.slope_hi);
    p.theta_star(1) = stream.uniform(spec.intercept_lo, spec.intercept_hi);
    std::vector<Index> order(static_cast<std::size_t>(spec.n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), stream);
    p.contaminated.assign(static_cast<std::size_t>(spec.n), false);
    for (Index b = 0; b < bad; ++b) p.contaminated[static_cast<std::size_t>(order[static_cast<std::size_t>(b)])] = true;

    std::normal_distribution<double> noise(0.0, spec.noise_sd);
    std::normal_distribution<double> outlier(spec.outlier_y_mean, spec.outlier_y_sd);
    p.features.resize(spec.n, 2);
    p.labels.resize(spec.n);
    std::vector<Index> slot(static_cast<std::size_t>(spec.n));
    std::iota(slot.begin(), slot.end(), Index{0});
    std::shuffle(slot.begin(), slot.end(), stream);
    for (Index k = 0; k < spec.n; ++k) {
      const double u = (static_cast<double>(slot[static_cast<std::size_t>(k)]) + stream.uniform(0.0, 1.0)) /
                       static_cast<double>(spec.n);
      p.features(k, 0) = spec.x_lo + (spec.x_hi - spec.x_lo) * std::pow(u, spec.x_power);
      p.features(k, 1) = 1.0;
      p.labels(k) = p.contaminated[static_cast<std::size_t>(k)]
                        ? outlier(stream)
                        : p.theta_star(0) * p.features(k, 0) + p.theta_star(1) + noise(stream);
    }
    p.scores = -(p.features.col(0).cwiseAbs().array() * p.labels.cwiseAbs().array()).matrix();
    std::vector<double> sorted(p.scores.data(), p.scores.data() + p.scores.size());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) return p;
  }
  throw InvariantViolation("could not draw tie-free regression scores");
}

RowVector least_squares(const RegressionProblem& p, const std::vector<bool>& mask) {
  require(static_cast<Index>(mask.size()) == p.size(), "mask size mismatch");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  for (Index k = 0; k < p.size(); ++k) {
    if (!mask[static_cast<std::size_t>(k)]) continue;
    const Eigen::Vector2d x = p.features.row(k).transpose();
    a += x * x.transpose();
    b += x * p.labels(k);
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || std::abs(a.determinant()) < 1e-12)
    throw InvariantViolation("singular least-squares design");
  return ldlt.solve(b).transpose();
}

namespace {

double median_of(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1, v.end());
  return 0.5 * (upper + v[mid - 1]);
}

}  // namespace

RowVector huber_regression(const RegressionProblem& p, double threshold, int max_iter, double tol) {
  RowVector theta = least_squares(p, std::vector<bool>(static_cast<std::size_t>(p.size()), true));
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd resid = p.labels - p.features * theta.transpose();
    std::vector<double> abs_resid(static_cast<std::size_t>(p.size()));
    for (Index k = 0; k < p.size(); ++k) abs_resid[static_cast<std::size_t>(k)] = std::abs(resid(k));
    const double med = median_of(abs_resid);
    const double scale = std::max(med / 0.6745, 1e-12);
    const double cut = threshold * scale;
    Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    for (Index k = 0; k < p.size(); ++k) {
      const double w = std::abs(resid(k)) <= cut ? 1.0 : cut / std::abs(resid(k));
      const Eigen::Vector2d x = p.features.row(k).transpose();
      a += w * x * x.transpose();
      b += w * x * p.labels(k);
    }
    const RowVector next = a.ldlt().solve(b).transpose();
    const double step = (next - theta).norm();
    theta = next;
    if (step < tol) break;
  }
  return theta;
}

std::vector<bool> oracle_trimming_mask(const RegressionProblem& p, double alpha) {
  const auto interval = TrimInterval::make(p.size(), alpha);
  const auto ranks = true_ranks({p.scores.data(), static_cast<std::size_t>(p.size())});
  std::vector<bool> mask(static_cast<std::size_t>(p.size()));
  for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = ranks[k] > interval.m;
  return mask;
}

OracleBaselines oracle_baselines(const RegressionProblem& p, double alpha) {
  OracleBaselines out;
  std::vector<bool> clean(p.contaminated.size());
  for (std::size_t k = 0; k < clean.size(); ++k) clean[k] = !p.contaminated[k];
  out.oracle_regression = least_squares(p, clean);
  out.oracle_trimming = least_squares(p, oracle_trimming_mask(p, alpha));
  out.corrupted = least_squares(p, std::vector<bool>(static_cast<std::size_t>(p.size()), true));
  out.huber = huber_regression(p);
  return out;
}

TrimmedGdOptions options_for_p(GradientRule rule, double p, Index n) {
  require(p > 0.0, "p must be positive");
  TrimmedGdOptions opts;
  opts.rule = rule;
  opts.kappa = 4.0 * static_cast<double>(n) / p;
  opts.burn_in = 4.0 * static_cast<double>(n) / p;
  return opts;
}

TrimmedGdState trimmed_gd_init(const RegressionProblem& p, const TrimmedGdOptions& opts) {
  require(opts.rho > 0.0, "step size must be positive");
  TrimmedGdState s;
  s.theta = NodeMatrix::Zero(p.size(), 2);
  s.updates = Eigen::VectorXd::Zero(p.size());
  s.include = Eigen::VectorXi::Zero(p.size());
  const std::span<const double> scores{p.scores.data(), static_cast<std::size_t>(p.size())};
  switch (opts.rule) {
    case GradientRule::rank: s.rank = gorank_init(scores); break;
    case GradientRule::quantile:
      for (const double d : scores) s.score_objectives.emplace_back(d, opts.alpha);
      s.quantile = asyl_init(std::span<const Pinball>(s.score_objectives));
      break;
    case GradientRule::oracle: s.oracle = oracle_trimming_mask(p, opts.alpha); break;
  }
  return s;
}

int inclusion(const TrimmedGdState& s, const RegressionProblem& p, const TrimmedGdOptions& opts, Index k) {
  const double c = s.updates(k);
  const bool sequential = opts.schedule == TrimSchedule::sequential;
  switch (opts.rule) {
    case GradientRule::oracle: return s.oracle[static_cast<std::size_t>(k)] ? 1 : 0;
    case GradientRule::rank: {
      if (c <= 0.0) return 0;
      const double m = std::floor(opts.alpha * static_cast<double>(p.size()));
      const double delta = sequential ? 0.0 : opts.kappa / std::sqrt(c);
      return s.rank->rank(k) > m + delta ? 1 : 0;
    }
    case GradientRule::quantile: {
      if (!sequential && c <= opts.burn_in) return 0;
      const double delta = sequential || c <= 0.0 ? 0.0 : opts.quantile_kappa / std::sqrt(c);
      return p.scores(k) > s.quantile->x(k, 0) + delta ? 1 : 0;
    }
  }
  return 0;
}

void trimmed_gd_step(TrimmedGdState& s, const RegressionProblem& p, const Graph& g, Index e,
                     const TrimmedGdOptions& opts) {
  if (s.diverged) return;
  const auto [i, j] = g.edge(e);
  const bool estimating = opts.schedule == TrimSchedule::sequential && s.steps < opts.estimation_steps;
  if (!s.frozen) {
    if (s.rank) gorank_async_step(*s.rank, g, e);
    if (s.quantile) asyladmm_step(*s.quantile, g, e, opts.quantile_rho, std::span<const Pinball>(s.score_objectives));
    s.updates(i) += 1.0;
    s.updates(j) += 1.0;
  }
  ++s.steps;
  if (estimating) return;
  if (!s.frozen) {
    for (Index k = 0; k < p.size(); ++k) s.include(k) = inclusion(s, p, opts, k);
    if (opts.schedule == TrimSchedule::sequential) s.frozen = true;
  }
  for (Index k = 0; k < p.size(); ++k) {
    if (s.include(k) == 0) continue;
    const double resid = p.features.row(k).dot(s.theta.row(k)) - p.labels(k);
    s.theta.row(k) -= (opts.rho * resid) * p.features.row(k);
  }
  const RowVector avg = 0.5 * (s.theta.row(i) + s.theta.row(j));
  s.theta.row(i) = avg;
  s.theta.row(j) = avg;
  const double peak = s.theta.cwiseAbs().maxCoeff();
  if (!std::isfinite(peak) || peak > opts.divergence_threshold) s.diverged = true;
}

MetricSeries run_trimmed_gd(const RegressionProblem& p, const Graph& g, const TrimmedGdOptions& opts,
                            const EdgeDistribution& dist, const std::vector<std::int64_t>& grid, Rng edge_rng) {
  require(g.num_nodes() == p.size(), "one data point per node required");
  auto s = trimmed_gd_init(p, opts);
  MetricSeries out;
  switch (opts.rule) {
    case GradientRule::rank: out.label = "RankTrimming"; break;
    case GradientRule::quantile: out.label = "QuantileTrimming"; break;
    case GradientRule::oracle: out.label = "OracleTrimming"; break;
  }
  out.seed = edge_rng.key();
  std::int64_t done = 0;
  for (const std::int64_t cp : grid) {
    for (; done < cp && !s.diverged; ++done) trimmed_gd_step(s, p, g, dist.sample(edge_rng), opts);
    if (s.diverged) {
      out.diverged = true;
      out.checkpoints.push_back({cp, std::numeric_limits<double>::infinity(), 0.0});
    } else {
      out.checkpoints.push_back(node_error(s.theta, p.theta_star, cp));
    }
  }
  return out;
}

}  // namespace gq
