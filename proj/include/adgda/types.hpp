#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace adgda {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VectorX<double>;
using Mat = MatrixX<double>;

// Sample indices local to one node's shard.
using Batch = std::span<const Index>;

}  // namespace adgda
