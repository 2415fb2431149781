#include "gossipq/ranktrim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gq {

namespace {

std::span<const Pinball> as_span(const std::vector<Pinball>& v) { return {v.data(), v.size()}; }

void check_distinct(std::span<const double> data) {
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidArgument("data contains ties");
}

}  // namespace

std::vector<Index> true_ranks(std::span<const double> data) {
  check_distinct(data);
  std::vector<Index> order(data.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return data[a] < data[b]; });
  std::vector<Index> ranks(data.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<Index>(r) + 1;
  return ranks;
}

TrimInterval TrimInterval::make(Index n, double alpha) {
  require(n > 0, "sample size must be positive");
  require(alpha >= 0.0 && alpha < 0.5, "trimming level must lie in [0, 1/2)");
  TrimInterval t;
  t.n = n;
  t.m = static_cast<Index>(std::floor(alpha * static_cast<double>(n)));
  t.b1 = static_cast<double>(t.m) + 0.5;
  t.b2 = static_cast<double>(n - t.m) + 0.5;
  return t;
}

double TrimInterval::margin(double rank) const { return std::min(std::abs(rank - b1), std::abs(rank - b2)); }

// ---------------------------------------------------------------------------

GoRankState gorank_init(std::span<const double> data) { return gorank_init(data, data); }

GoRankState gorank_init(std::span<const double> data, std::span<const double> aux) {
  require(!data.empty(), "no data");
  require(aux.size() == data.size(), "auxiliary assignment must match the data size");
  GoRankState s;
  const auto n = static_cast<Index>(data.size());
  s.data = Eigen::Map<const Eigen::VectorXd>(data.data(), n);
  s.aux = Eigen::Map<const Eigen::VectorXd>(aux.data(), n);
  s.rprime = Eigen::VectorXd::Zero(n);
  s.counter = Eigen::VectorXd::Ones(n);
  return s;
}

void gorank_update(GoRankState& s, Index k) {
  const double c = s.counter(k);
  const double ind = s.data(k) > s.aux(k) ? 1.0 : 0.0;
  s.rprime(k) = (1.0 - 1.0 / c) * s.rprime(k) + ind / c;
  s.counter(k) = c + 1.0;
}

void gorank_async_step(GoRankState& s, const Graph& g, Index e) {
  const auto [i, j] = g.edge(e);
  gorank_update(s, i);
  gorank_update(s, j);
  std::swap(s.aux(i), s.aux(j));
}

void gorank_sync_round(GoRankState& s, const Graph& g, const EdgeDistribution& swap_dist, Rng& rng) {
  require(swap_dist.size() == g.num_edges(), "swap distribution does not match the graph");
  ++s.rounds;
  const double w = 1.0 / static_cast<double>(s.rounds);
  for (Index k = 0; k < s.size(); ++k) {
    const double ind = s.data(k) > s.aux(k) ? 1.0 : 0.0;
    s.rprime(k) = (1.0 - w) * s.rprime(k) + w * ind;
  }
  const auto [i, j] = g.edge(swap_dist.sample(rng));
  std::swap(s.aux(i), s.aux(j));
}

// ---------------------------------------------------------------------------

TrimAverager::TrimAverager(NodeMatrix x)
    : values(std::move(x)),
      sums(NodeMatrix::Zero(values.rows(), values.cols())),
      mass(Eigen::VectorXd::Zero(values.rows())),
      weight(Eigen::VectorXi::Zero(values.rows())) {}

void TrimAverager::refresh(Index k, int w) {
  const int delta = w - weight(k);
  if (delta != 0) {
    sums.row(k) += static_cast<double>(delta) * values.row(k);
    mass(k) += static_cast<double>(delta);
  }
  weight(k) = w;
}

void TrimAverager::average(Index i, Index j) {
  const RowVector n = 0.5 * (sums.row(i) + sums.row(j));
  sums.row(i) = n;
  sums.row(j) = n;
  const double m = 0.5 * (mass(i) + mass(j));
  mass(i) = m;
  mass(j) = m;
}

RowVector TrimAverager::estimate(Index k) const {
  const double floor = 1.0 / static_cast<double>(values.rows());
  return sums.row(k) / std::max(floor, mass(k));
}

NodeMatrix TrimAverager::estimates() const {
  NodeMatrix out(values.rows(), values.cols());
  for (Index k = 0; k < values.rows(); ++k) out.row(k) = estimate(k);
  return out;
}

QuantilePair quantile_pair_init(std::span<const double> data, double alpha) {
  require(alpha > 0.0 && alpha < 0.5, "trimming level must lie in (0, 1/2)");
  QuantilePair q;
  for (const double a : data) {
    q.lo_objectives.emplace_back(a, alpha);
    q.hi_objectives.emplace_back(a, 1.0 - alpha);
  }
  q.lo = asyl_init(as_span(q.lo_objectives));
  q.hi = asyl_init(as_span(q.hi_objectives));
  return q;
}

void quantile_pair_step(QuantilePair& q, const Graph& g, Index e, double rho) {
  asyladmm_step(q.lo, g, e, rho, as_span(q.lo_objectives));
  asyladmm_step(q.hi, g, e, rho, as_span(q.hi_objectives));
}

GoTrimState gotrim_init(std::span<const double> data, double alpha, TrimRule rule, double rho) {
  require(rho > 0.0, "step size must be positive");
  const auto n = static_cast<Index>(data.size());
  GoTrimState s{rule, TrimInterval::make(n, alpha), rho,
                TrimAverager(Eigen::Map<const NodeMatrix>(data.data(), n, 1)), std::nullopt, std::nullopt};
  if (rule == TrimRule::rank) {
    s.rank = gorank_init(data);
  } else {
    s.quantiles = quantile_pair_init(data, alpha);
  }
  return s;
}

void gotrim_step(GoTrimState& s, const Graph& g, Index e) {
  const auto [i, j] = g.edge(e);
  if (s.rule == TrimRule::rank) {
    for (const Index k : {i, j}) {
      gorank_update(*s.rank, k);
      s.trim.refresh(k, rank_weight(s.rank->rank(k), s.interval));
    }
  } else {
    quantile_pair_step(*s.quantiles, g, e, s.rho);
    for (const Index k : {i, j}) {
      s.trim.refresh(k, quantile_weight(s.trim.values(k, 0), s.quantiles->lo.x(k, 0), s.quantiles->hi.x(k, 0)));
    }
  }
  s.trim.average(i, j);
  if (s.rule == TrimRule::rank) std::swap(s.rank->aux(i), s.rank->aux(j));
}

Eigen::VectorXi oracle_weights(std::span<const double> data, double alpha) {
  const auto interval = TrimInterval::make(static_cast<Index>(data.size()), alpha);
  const auto ranks = true_ranks(data);
  Eigen::VectorXi w(static_cast<Index>(data.size()));
  for (std::size_t k = 0; k < data.size(); ++k) w(static_cast<Index>(k)) = rank_weight(double(ranks[k]), interval);
  return w;
}

double weight_error(const Eigen::VectorXi& estimated, const Eigen::VectorXi& oracle) {
  require(estimated.size() == oracle.size() && oracle.size() > 0, "weight vectors must match");
  return (estimated - oracle).cwiseAbs().cast<double>().mean();
}

double exact_trimmed_mean(std::span<const double> data, double alpha) {
  const auto interval = TrimInterval::make(static_cast<Index>(data.size()), alpha);
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const auto lo = sorted.begin() + interval.m;
  const auto hi = sorted.end() - interval.m;
  return std::accumulate(lo, hi, 0.0) / static_cast<double>(hi - lo);
}

namespace {

Checkpoint weight_checkpoint(const Eigen::VectorXi& w, const Eigen::VectorXi& oracle, std::int64_t t) {
  const Eigen::VectorXd err = (w - oracle).cwiseAbs().cast<double>();
  const double mean = err.mean();
  return {t, mean, std::sqrt((err.array() - mean).square().mean())};
}

}  // namespace

GoTrimTrace run_gotrim(TrimRule rule, const Graph& g, std::span<const double> data, double alpha, double rho,
                       double reference, const EdgeDistribution& dist, const std::vector<std::int64_t>& grid,
                       Rng edge_rng) {
  require(static_cast<Index>(data.size()) == g.num_nodes(), "one observation per node required");
  auto s = gotrim_init(data, alpha, rule, rho);
  const auto oracle = oracle_weights(data, alpha);
  const RowVector truth = RowVector::Constant(1, reference);
  GoTrimTrace out;
  out.estimate_error.label = rule == TrimRule::rank ? "GoTrim-rank" : "GoTrim-quantile";
  out.weight_error.label = out.estimate_error.label;
  out.estimate_error.seed = out.weight_error.seed = edge_rng.key();
  std::int64_t done = 0;
  for (const std::int64_t cp : grid) {
    for (; done < cp; ++done) gotrim_step(s, g, dist.sample(edge_rng));
    out.estimate_error.checkpoints.push_back(node_error(s.trim.estimates(), truth, cp));
    out.weight_error.checkpoints.push_back(weight_checkpoint(s.trim.weight, oracle, cp));
  }
  return out;
}

// ---------------------------------------------------------------------------

GoDepthState godepth_init(const NodeMatrix& data) {
  require(data.rows() > 0, "no data");
  GoDepthState s;
  s.data = data;
  s.aux = data;
  s.mean_distance = Eigen::VectorXd::Zero(data.rows());
  s.counter = Eigen::VectorXd::Ones(data.rows());
  s.depth = Eigen::VectorXd::Ones(data.rows());
  return s;
}

void godepth_step(GoDepthState& s, const Graph& g, Index e) {
  const auto [i, j] = g.edge(e);
  s.aux.row(i).swap(s.aux.row(j));
  for (const Index k : {i, j}) {
    s.counter(k) += 1.0;
    const double c = s.counter(k);
    s.mean_distance(k) = (1.0 - 1.0 / c) * s.mean_distance(k) + (s.data.row(k) - s.aux.row(k)).norm() / c;
    s.depth(k) = 1.0 / (1.0 + s.mean_distance(k));
  }
}

Eigen::VectorXd l2_depths(const NodeMatrix& data) {
  const Index n = data.rows();
  Eigen::VectorXd d(n);
  for (Index k = 0; k < n; ++k) {
    const double mean = (data.rowwise() - data.row(k)).rowwise().norm().mean();
    d(k) = 1.0 / (1.0 + mean);
  }
  return d;
}

DepthQuantileState depth_quantile_init(const NodeMatrix& data, double alpha) {
  DepthQuantileState s;
  s.depth = godepth_init(data);
  for (Index k = 0; k < data.rows(); ++k) s.objectives.emplace_back(s.depth.depth(k), alpha);
  s.quantile = asyl_init(as_span(s.objectives));
  return s;
}

void asyladmm_godepth_step(DepthQuantileState& s, const Graph& g, Index e, double rho) {
  godepth_step(s.depth, g, e);
  for (const Index k : {g.edge(e).i, g.edge(e).j}) {
    auto& obj = s.objectives[static_cast<std::size_t>(k)];
    obj = obj.with_anchor(s.depth.depth(k));
  }
  asyladmm_step(s.quantile, g, e, rho, as_span(s.objectives));
}

DepthTrimState depth_trim_init(const NodeMatrix& data, double alpha, double rho) {
  require(rho > 0.0, "step size must be positive");
  return {depth_quantile_init(data, alpha), TrimAverager(data), rho};
}

void depth_trim_step(DepthTrimState& s, const Graph& g, Index e) {
  asyladmm_godepth_step(s.joint, g, e, s.rho);
  const auto [i, j] = g.edge(e);
  for (const Index k : {i, j}) s.trim.refresh(k, s.joint.depth.depth(k) >= s.joint.quantile.x(k, 0) ? 1 : 0);
  s.trim.average(i, j);
}

double exact_quantile(std::span<const double> values, double alpha) {
  require(!values.empty(), "no data");
  require(alpha > 0.0 && alpha < 1.0, "quantile level must lie in (0, 1)");
  const double pos = alpha * static_cast<double>(values.size());
  if (pos == std::floor(pos)) throw InvalidArgument("quantile is not unique: alpha * n is an integer");
  std::vector<double> sorted(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(std::ceil(pos)) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), sorted.end());
  return sorted[idx];
}

RowVector exact_depth_trimmed_mean(const NodeMatrix& data, double alpha) {
  const Eigen::VectorXd d = l2_depths(data);
  const double q = exact_quantile({d.data(), static_cast<std::size_t>(d.size())}, alpha);
  RowVector sum = RowVector::Zero(data.cols());
  Index count = 0;
  for (Index k = 0; k < data.rows(); ++k) {
    if (d(k) >= q) {
      sum += data.row(k);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace gq
