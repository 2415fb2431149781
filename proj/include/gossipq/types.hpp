#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gq {

using Index = Eigen::Index;

// One row per node, one column per problem dimension. Row-major so that a
// node's value is a contiguous row and binds to Eigen::Ref<RowVector> without
// a temporary.
template <typename Scalar>
using NodeMatrixT =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVectorT = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using NodeMatrix = NodeMatrixT<double>;
using RowVector = RowVectorT<double>;
using RowRef = Eigen::Ref<RowVector>;
using ConstRowRef = Eigen::Ref<const RowVector>;

/// Raised when a caller violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an internal consistency check fails at runtime (an identity
/// that must hold by construction, a non-finite state, a failed solve).
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace gq
