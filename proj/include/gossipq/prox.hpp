#pragma once

#include <cmath>
#include <concepts>

#include <Eigen/Dense>

#include "gossipq/types.hpp"

namespace gq {

/// A node's convex loss, reachable only through value, prox and subgradient
/// queries on a row of node state. Every consensus algorithm is written
/// against this concept, so scalar and vector problems share one skeleton.
template <class F>
concept LocalObjective = requires(const F f, ConstRowRef x, RowRef out, double gamma) {
  { f.dim() } -> std::convertible_to<Index>;
  { f.value(x) } -> std::convertible_to<double>;
  f.prox(x, gamma, out);
  f.subgradient(x, out);
  { f.anchor_row() } -> std::convertible_to<RowVector>;
};

/// Rescaled pinball loss x -> L_alpha(a - x) / (1 - alpha), i.e. slope -beta
/// left of the anchor and +1 right of it, with beta = alpha / (1 - alpha).
template <typename Scalar>
class PinballLoss {
 public:
  PinballLoss(Scalar anchor, Scalar alpha) : anchor_(anchor), alpha_(alpha) {
    require(alpha > Scalar(0) && alpha < Scalar(1), "quantile level must lie in (0, 1)");
    beta_ = alpha_ / (Scalar(1) - alpha_);
  }

  Scalar anchor() const { return anchor_; }
  Scalar alpha() const { return alpha_; }
  Scalar beta() const { return beta_; }
  Index dim() const { return 1; }

  PinballLoss with_anchor(Scalar a) const {
    PinballLoss copy = *this;
    copy.anchor_ = a;
    return copy;
  }

  Scalar value(Scalar x) const {
    const Scalar u = anchor_ - x;
    return (alpha_ - (u <= Scalar(0) ? Scalar(1) : Scalar(0))) * u / (Scalar(1) - alpha_);
  }

  /// argmin_w f(w) + (w - z)^2 / (2 gamma), closed form.
  Scalar prox(Scalar z, Scalar gamma) const {
    if (z < anchor_ - gamma * beta_) return z + gamma * beta_;
    if (z > anchor_ + gamma) return z - gamma;
    return anchor_;
  }

  /// Selection from [-beta, 1] at the kink: the midpoint (1 - beta) / 2.
  Scalar subgradient(Scalar x) const {
    if (x < anchor_) return -beta_;
    if (x > anchor_) return Scalar(1);
    return (Scalar(1) - beta_) / Scalar(2);
  }

  double value(ConstRowRef x) const { return static_cast<double>(value(Scalar(x(0)))); }
  void prox(ConstRowRef v, double gamma, RowRef out) const { out(0) = prox(Scalar(v(0)), Scalar(gamma)); }
  void subgradient(ConstRowRef x, RowRef out) const { out(0) = subgradient(Scalar(x(0))); }
  RowVector anchor_row() const { return RowVector::Constant(1, static_cast<double>(anchor_)); }

 private:
  Scalar anchor_;
  Scalar alpha_;
  Scalar beta_;
};

/// x -> ||x - a||_2, the per-node term of the geometric median objective.
template <typename Scalar>
class EuclideanDistance {
 public:
  using Vector = RowVectorT<Scalar>;

  explicit EuclideanDistance(Vector anchor) : anchor_(std::move(anchor)) {
    require(anchor_.size() > 0, "anchor must be non-empty");
  }

  const Vector& anchor() const { return anchor_; }
  Index dim() const { return anchor_.size(); }

  template <typename Derived>
  Scalar value(const Eigen::MatrixBase<Derived>& x) const {
    return (x - anchor_).norm();
  }

  /// a + (1 - lambda / ||v - a||)_+ (v - a). The shrink factor is evaluated
  /// only when ||v - a|| > lambda, so v == a never divides by zero.
  template <typename Derived>
  Vector prox(const Eigen::MatrixBase<Derived>& v, Scalar lambda) const {
    Vector out(anchor_.size());
    prox_into(v, lambda, out);
    return out;
  }

  template <typename Derived, typename OutDerived>
  void prox_into(const Eigen::MatrixBase<Derived>& v, Scalar lambda, OutDerived&& out) const {
    const Scalar dist = (v - anchor_).norm();
    if (dist <= lambda) {
      out = anchor_;
      return;
    }
    const Scalar shrink = Scalar(1) - lambda / dist;
    // Element-wise expression: safe when `out` aliases `v`.
    out = anchor_ + shrink * (v - anchor_);
  }

  double value(ConstRowRef x) const { return static_cast<double>((x - anchor_).norm()); }
  void prox(ConstRowRef v, double gamma, RowRef out) const { prox_into(v, Scalar(gamma), out); }
  /// Unit vector away from the anchor; zero at the anchor.
  void subgradient(ConstRowRef x, RowRef out) const {
    const Scalar dist = (x - anchor_).norm();
    if (dist == Scalar(0)) {
      out.setZero();
    } else {
      out = (x - anchor_) / dist;
    }
  }
  RowVector anchor_row() const { return anchor_.template cast<double>(); }

 private:
  Vector anchor_;
};

using Pinball = PinballLoss<double>;
using Euclidean = EuclideanDistance<double>;

template <typename Scalar>
Scalar pinball_value(const PinballLoss<Scalar>& obj, Scalar x) {
  return obj.value(x);
}

template <typename Scalar>
Scalar pinball_prox(const PinballLoss<Scalar>& obj, Scalar z, Scalar gamma) {
  require(gamma > Scalar(0), "prox step must be positive");
  return obj.prox(z, gamma);
}

template <typename Scalar, typename Derived>
RowVectorT<Scalar> euclidean_prox(const EuclideanDistance<Scalar>& obj, const Eigen::MatrixBase<Derived>& v,
                                  Scalar lambda) {
  require(lambda > Scalar(0), "prox step must be positive");
  require(v.size() == obj.dim(), "dimension mismatch");
  return obj.prox(v, lambda);
}

}  // namespace gq
