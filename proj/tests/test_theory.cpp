#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gossipq/data.hpp"
#include "gossipq/ranktrim.hpp"
#include "gossipq/theory.hpp"

using namespace gq;

namespace {

std::vector<Pinball> pinballs(const NodeMatrix& data, double alpha) {
  std::vector<Pinball> out;
  for (Index k = 0; k < data.rows(); ++k) out.emplace_back(data(k, 0), alpha);
  return out;
}

}  // namespace

TEST_CASE("saddle duals on two nodes") {
  const Graph g(2, {{0, 1}});
  const std::vector<Pinball> f{Pinball(0.0, 0.5), Pinball(2.0, 0.5)};
  const auto s = solve_saddle_dual(g, f, 0.0);
  // node 1 sits above x* with slope -beta = -1; node 0 balances with +1
  CHECK(s.y_star(g.slot_of(0, 1)) == -1.0);
  CHECK(s.y_star(g.slot_of(0, 0)) == 1.0);
  CHECK_THROWS_AS(solve_saddle_dual(g, f, -1.0), InvalidArgument);
}

TEST_CASE("saddle duals are antisymmetric and sum to a subgradient at every node") {
  for (const auto kind : {TopologyKind::geometric, TopologyKind::cycle, TopologyKind::star}) {
    const auto g = build_topology({kind, 11, 0.0, 25}, Rng(3));
    const auto data = generate_data(DataSpec{}, 11, Rng(4));
    for (const double alpha : {0.3, 0.5}) {
      const auto f = pinballs(data, alpha);
      const double xs = exact_quantile(column_span(data), alpha);
      const auto s = solve_saddle_dual(g, f, xs);
      Eigen::VectorXd node_sum = Eigen::VectorXd::Zero(11);
      for (Index e = 0; e < g.num_edges(); ++e) {
        const auto [i, j] = g.edge(e);
        CHECK(s.y_star(Graph::slot(e, false)) + s.y_star(Graph::slot(e, true)) == 0.0);
        node_sum(i) += s.y_star(g.slot_of(e, i));
        node_sum(j) += s.y_star(g.slot_of(e, j));
      }
      for (Index k = 0; k < 11; ++k) {
        const double a = data(k, 0), beta = f[static_cast<std::size_t>(k)].beta();
        if (a > xs) CHECK(node_sum(k) == doctest::Approx(-beta));
        if (a < xs) CHECK(node_sum(k) == doctest::Approx(1.0));
        if (a == xs) {
          CHECK(node_sum(k) >= -beta - 1e-10);
          CHECK(node_sum(k) <= 1.0 + 1e-10);
        }
      }
    }
  }
}

TEST_CASE("synchronous Lyapunov decrement and residual budget") {
  const auto g = build_topology({TopologyKind::geometric, 11, 0.0, 22}, Rng(8));
  const auto data = generate_data(DataSpec{}, 11, Rng(9));
  const auto f = pinballs(data, 0.5);
  const double xs = exact_quantile(column_span(data), 0.5);
  for (const double rho : {0.1, 1.0}) {
    const auto rep = sync_theory_trace(g, f, xs, rho, 3000, edge_probabilities(g), Rng(10));
    CHECK(rep.worst_decrement_excess <= 1e-9);
    CHECK(rep.residual_budget <= rep.initial_lyapunov * (1 + 1e-9) + 1e-9);
    CHECK(rep.trace.size() == 3001);
    CHECK(rep.trace.front().A == 0.0);
    CHECK(std::sqrt(rep.trace.back().residual_sq) < 1e-3);
    for (std::size_t t = 1; t < rep.trace.size(); ++t) REQUIRE(rep.trace[t].lyapunov <= rep.trace[t - 1].lyapunov + 1e-9);
  }
}

TEST_CASE("residual and gap vanish at consensus on the optimum") {
  const auto g = build_topology({TopologyKind::cycle, 5}, Rng(0));
  const auto data = generate_data(DataSpec{}, 5, Rng(1));
  const auto f = pinballs(data, 0.5);
  const double xs = exact_quantile(column_span(data), 0.5);
  auto s = sync_init(g, std::span<const Pinball>(f), true);
  s.x.setConstant(xs);
  s.z_edge.setConstant(xs);
  CHECK(residual_sq(s, g) == 0.0);
  CHECK(objective_gap(s.x, f, xs) == 0.0);
}

TEST_CASE("permutation index is a bijection onto 0..n!-1") {
  std::vector<int> p{0, 1, 2, 3};
  std::set<std::size_t> seen;
  std::size_t expect = 0;
  do {
    CHECK(permutation_index(p) == expect++);
    seen.insert(permutation_index(p));
  } while (std::next_permutation(p.begin(), p.end()));
  CHECK(seen.size() == 24);
}

TEST_CASE("interchange chain gap equals the Laplacian gap") {
  const auto k3 = build_topology({TopologyKind::complete, 3}, Rng(0));
  const auto r3 = verify_gap_identity(k3, edge_probabilities(k3));
  CHECK(r3.gap_chain == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r3.c == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r3.agree);

  const Graph path(3, {{0, 1}, {1, 2}});
  const auto chain = build_interchange_chain(path, uniform_edge_probabilities(path));
  CHECK(chain.states.size() == 6);
  const Eigen::MatrixXd dense(chain.P);
  CHECK((dense.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK(chain_spectral_gap(chain) == doctest::Approx(0.5).epsilon(1e-12));

  const auto k4 = build_topology({TopologyKind::complete, 4}, Rng(0));
  CHECK(verify_gap_identity(k4, edge_probabilities(k4)).agree);
  CHECK_THROWS_AS(build_interchange_chain(build_topology({TopologyKind::cycle, 8}, Rng(0)),
                                          edge_probabilities(build_topology({TopologyKind::cycle, 8}, Rng(0)))),
                  InvalidArgument);
}

TEST_CASE("connected labeled graph counts") {
  // OEIS A001187
  CHECK(all_connected_graphs(2).size() == 1);
  CHECK(all_connected_graphs(3).size() == 4);
  CHECK(all_connected_graphs(4).size() == 38);
  CHECK(all_connected_graphs(5).size() == 728);
}

TEST_CASE("concentration bound closed forms") {
  const long double expo = (2.0L / 1.5L) * 0.5L * 1e4L * 100.0L / (101.0L * 101.0L);
  CHECK(static_cast<double>(expo) == doctest::Approx(65.35).epsilon(1e-4));
  const double h = hoeffding_bound(0.5, 1e4, 10.0, 101.0);
  CHECK(h == doctest::Approx(static_cast<double>(2.0L * std::exp(-expo))).epsilon(1e-12));

  const double b = bernstein_bound(0.5, 1e4, 10.0, 0.25, 101.0);
  const double want = 2.0 * std::exp(-0.5 * 1e4 * 100.0 / (101.0 * 101.0) / (4.0 * 0.25 + 10.0 * 10.0 / 101.0));
  CHECK(b == doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS_AS(hoeffding_bound(0.0, 10, 1, 5), InvalidArgument);
  CHECK_THROWS_AS(bernstein_bound(0.5, 10, 0.0, 0.1, 5), InvalidArgument);
}

TEST_CASE("empirical deviation stays under the Hoeffding bound") {
  const auto g = build_topology({TopologyKind::complete, 4}, Rng(0));
  const std::vector<double> data{0.3, 2.0, -1.0, 5.0};
  const auto rep = empirical_deviation(g, data, 0.25, 200, 1000, edge_probabilities(g), Rng(5));
  for (Index k = 0; k < 4; ++k) CHECK(rep.frequency(k) <= rep.hoeffding(k) + rep.half_width(k));
  CHECK_THROWS_AS(empirical_deviation(g, data, 0.25, 200, 0, edge_probabilities(g), Rng(5)), InvalidArgument);
  const auto late = empirical_deviation(g, data, 0.25, 5000, 200, edge_probabilities(g), Rng(6));
  CHECK(late.frequency.maxCoeff() == 0.0);
}

TEST_CASE("stationary expectation of the rank indicator is r'_k") {
  // From a uniformly random assignment the chain is stationary, so E[1{X_k > Y_k}] = r'_k.
  const std::vector<double> data{4.0, 1.0, 3.0, 2.0, 0.0};
  const auto g = build_topology({TopologyKind::cycle, 5}, Rng(0));
  const auto dist = edge_probabilities(g);
  Rng rng(12);
  Eigen::VectorXd hits = Eigen::VectorXd::Zero(5);
  const int trials = 40000;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> aux = data;
    std::shuffle(aux.begin(), aux.end(), rng);
    auto s = gorank_init(data, aux);
    gorank_sync_round(s, g, dist, rng);
    hits += s.rprime;
  }
  const auto ranks = true_ranks(data);
  for (Index k = 0; k < 5; ++k) {
    const double rp = static_cast<double>(ranks[static_cast<std::size_t>(k)] - 1) / 5.0;
    CHECK(std::abs(hits(k) / trials - rp) < 4.0 * std::sqrt(0.25 / trials));
  }
}
