#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "gossipq/regress.hpp"

using namespace gq;

namespace {

// 2x2 normal equations by Cramer's rule
RowVector normal_equations(const RegressionProblem& p, const std::vector<bool>& mask) {
  double sxx = 0, sx = 0, s1 = 0, sxy = 0, sy = 0;
  for (Index k = 0; k < p.size(); ++k) {
    if (!mask[static_cast<std::size_t>(k)]) continue;
    const double x = p.features(k, 0), y = p.labels(k);
    sxx += x * x;
    sx += x;
    s1 += 1;
    sxy += x * y;
    sy += y;
  }
  const double det = sxx * s1 - sx * sx;
  RowVector out(2);
  out << (sxy * s1 - sx * sy) / det, (sxx * sy - sx * sxy) / det;
  return out;
}

}  // namespace

TEST_CASE("generator layout") {
  const RegressionSpec spec;
  const auto p = generate_regression(spec, Rng(1));
  REQUIRE(p.size() == 101);
  CHECK(std::count(p.contaminated.begin(), p.contaminated.end(), true) == 10);
  for (Index k = 0; k < p.size(); ++k) {
    CHECK(p.features(k, 1) == 1.0);
    CHECK(p.features(k, 0) >= spec.x_lo);
    CHECK(p.features(k, 0) <= spec.x_hi);
    CHECK(p.scores(k) == -std::abs(p.features(k, 0)) * std::abs(p.labels(k)));
  }
  CHECK(p.theta_star(0) >= spec.slope_lo);
  CHECK(p.theta_star(0) <= spec.slope_hi);
  CHECK(p.theta_star(1) >= spec.intercept_lo);
  CHECK(p.theta_star(1) <= spec.intercept_hi);
  const auto again = generate_regression(spec, Rng(1));
  CHECK(again.labels == p.labels);
}

TEST_CASE("least squares agrees with the normal equations") {
  const auto p = generate_regression(RegressionSpec{}, Rng(2));
  std::vector<bool> all(static_cast<std::size_t>(p.size()), true);
  CHECK((least_squares(p, all) - normal_equations(p, all)).norm() < 1e-9);
  std::vector<bool> clean(p.contaminated.size());
  std::transform(p.contaminated.begin(), p.contaminated.end(), clean.begin(), [](bool c) { return !c; });
  CHECK((least_squares(p, clean) - normal_equations(p, clean)).norm() < 1e-9);
}

TEST_CASE("baselines coincide without contamination") {
  RegressionSpec spec;
  spec.contamination = 0.0;
  const auto p = generate_regression(spec, Rng(3));
  const auto b = oracle_baselines(p, 0.0);
  CHECK((b.oracle_regression - b.corrupted).norm() < 1e-12);
  CHECK((b.oracle_trimming - b.corrupted).norm() < 1e-12);
  CHECK((b.huber - b.corrupted).norm() < 0.1);
}

TEST_CASE("oracle trimming drops exactly the m lowest scores") {
  const auto p = generate_regression(RegressionSpec{}, Rng(4));
  const auto mask = oracle_trimming_mask(p, 0.2);
  CHECK(std::count(mask.begin(), mask.end(), false) == 20);
  std::vector<double> sorted(p.scores.data(), p.scores.data() + p.size());
  std::sort(sorted.begin(), sorted.end());
  for (Index k = 0; k < p.size(); ++k) CHECK(mask[static_cast<std::size_t>(k)] == (p.scores(k) > sorted[19]));
}

TEST_CASE("corrupted least squares is far worse than the clean fit") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = generate_regression(RegressionSpec{}, Rng(seed));
    const auto b = oracle_baselines(p, 0.2);
    const double clean = (b.oracle_trimming - p.theta_star).norm();
    CHECK((b.corrupted - p.theta_star).norm() >= 5.0 * clean);
    CHECK((b.huber - p.theta_star).norm() < (b.corrupted - p.theta_star).norm());
  }
}

TEST_CASE("p parametrization") {
  const auto o = options_for_p(GradientRule::rank, 4.0, 101);
  CHECK(o.kappa == doctest::Approx(101.0));
  CHECK(o.burn_in == doctest::Approx(101.0));
  CHECK_THROWS_AS(options_for_p(GradientRule::rank, 0.0, 101), InvalidArgument);
}

TEST_CASE("a trimmed gradient step moves the parameter sum by the gradient sum") {
  const auto p = generate_regression(RegressionSpec{}, Rng(5));
  const auto g = build_topology({TopologyKind::geometric, 101, 0.0, 507}, Rng(6));
  TrimmedGdOptions opts;
  opts.rule = GradientRule::oracle;
  auto s = trimmed_gd_init(p, opts);
  const auto dist = edge_probabilities(g);
  Rng rng(7);
  for (int t = 0; t < 500; ++t) {
    RowVector expected = s.theta.colwise().sum();
    for (Index k = 0; k < p.size(); ++k) {
      if (!s.oracle[static_cast<std::size_t>(k)]) continue;
      const double r = p.features.row(k).dot(s.theta.row(k)) - p.labels(k);
      expected -= opts.rho * r * p.features.row(k);
    }
    trimmed_gd_step(s, p, g, dist.sample(rng), opts);
    REQUIRE((RowVector(s.theta.colwise().sum()) - expected).norm() < 1e-9 * (1.0 + expected.norm()));
  }
}

TEST_CASE("inclusion rules") {
  const auto p = generate_regression(RegressionSpec{}, Rng(8));
  const auto g = build_topology({TopologyKind::geometric, 101, 0.0, 507}, Rng(9));
  auto rank_opts = options_for_p(GradientRule::rank, 3.0, 101);
  auto s = trimmed_gd_init(p, rank_opts);
  for (Index k = 0; k < p.size(); ++k) CHECK(inclusion(s, p, rank_opts, k) == 0);
  auto q_opts = options_for_p(GradientRule::quantile, 3.0, 101);
  auto q = trimmed_gd_init(p, q_opts);
  q.updates.setConstant(q_opts.burn_in);
  for (Index k = 0; k < p.size(); ++k) CHECK(inclusion(q, p, q_opts, k) == 0);
  TrimmedGdOptions oracle;
  oracle.rule = GradientRule::oracle;
  const auto o = trimmed_gd_init(p, oracle);
  const auto mask = oracle_trimming_mask(p, oracle.alpha);
  for (Index k = 0; k < p.size(); ++k) CHECK(inclusion(o, p, oracle, k) == (mask[static_cast<std::size_t>(k)] ? 1 : 0));
}

TEST_CASE("decentralized oracle trimming lands near the centralized fit") {
  const auto p = generate_regression(RegressionSpec{}, Rng(10));
  const auto g = build_topology({TopologyKind::geometric, 101, 0.0, 507}, Rng(11));
  TrimmedGdOptions opts;
  opts.rule = GradientRule::oracle;
  const auto grid = linear_checkpoints(60000, 20000);
  const auto run = run_trimmed_gd(p, g, opts, edge_probabilities(g), grid, Rng(12));
  CHECK_FALSE(run.diverged);
  const double central = (oracle_baselines(p, 0.2).oracle_trimming - p.theta_star).norm();
  CHECK(run.final() < run.initial());
  CHECK(run.final() < central + 0.5);
}

TEST_CASE("divergence is flagged and recorded as infinity") {
  const auto p = generate_regression(RegressionSpec{}, Rng(13));
  const auto g = build_topology({TopologyKind::geometric, 101, 0.0, 507}, Rng(14));
  TrimmedGdOptions opts;
  opts.rule = GradientRule::oracle;
  opts.alpha = 0.0;
  opts.rho = 1.0;  // rho ||x||^2 > 2 at every node
  const auto run = run_trimmed_gd(p, g, opts, edge_probabilities(g), linear_checkpoints(20000, 10000), Rng(15));
  CHECK(run.diverged);
  CHECK(std::isinf(run.final()));
}
