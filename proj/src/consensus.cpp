#include "gossipq/consensus.hpp"

namespace gq {

std::string to_string(Algorithm alg) {
  switch (alg) {
    case Algorithm::asyl_admm: return "AsylADMM";
    case Algorithm::sync_admm: return "SyncADMM";
    case Algorithm::async_admm: return "AsyncADMM";
    case Algorithm::dapd: return "DAPD";
    case Algorithm::subgradient: return "Subgradient";
    case Algorithm::wei: return "WeiADMM";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& name) {
  for (auto a : {Algorithm::asyl_admm, Algorithm::sync_admm, Algorithm::async_admm, Algorithm::dapd,
                 Algorithm::subgradient, Algorithm::wei}) {
    if (to_string(a) == name) return a;
  }
  throw InvalidArgument("unknown algorithm: " + name);
}

bool rows_bounded(const NodeMatrix& x, std::initializer_list<Index> rows) {
  for (const Index r : rows) {
    for (Index c = 0; c < x.cols(); ++c) {
      const double v = x(r, c);
      if (!(std::abs(v) <= kDivergenceThreshold)) return false;
    }
  }
  return true;
}

bool all_bounded(const NodeMatrix& x) {
  return (x.array().abs() <= kDivergenceThreshold).all();
}

void check_dual_identities(const SyncState& s, const Graph& g, double tol) {
  if (!s.track_duals) return;
  RowVector mean(s.x.cols());
  for (Index k = 0; k < g.num_nodes(); ++k) {
    mean.setZero();
    for (const Index e : g.incident_edges(k)) mean += s.y.row(g.slot_of(e, k));
    mean /= static_cast<double>(g.degree(k));
    const double scale = 1.0 + s.mu_hat.row(k).norm();
    if ((mean - s.mu_hat.row(k)).norm() > tol * scale)
      throw InvariantViolation("dual aggregate differs from the mean of the tracked edge duals");
  }
  for (Index e = 0; e < g.num_edges(); ++e) {
    const auto yi = s.y.row(Graph::slot(e, false));
    const auto yj = s.y.row(Graph::slot(e, true));
    if ((yi + yj).norm() > tol * (1.0 + yi.norm())) throw InvariantViolation("edge duals are not antisymmetric");
  }
}

}  // namespace gq
