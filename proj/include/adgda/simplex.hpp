#pragma once

#include "adgda/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace adgda {

namespace detail {

template <typename Scalar>
VectorX<Scalar> sort_threshold_projection(const VectorX<Scalar>& v) {
  const Index m = v.size();
  VectorX<Scalar> sorted = v;
  std::sort(sorted.data(), sorted.data() + m, std::greater<Scalar>());
  Scalar cumsum = 0;
  Scalar threshold = 0;
  for (Index k = 0; k < m; ++k) {
    cumsum += sorted(k);
    const Scalar t = (cumsum - Scalar(1)) / static_cast<Scalar>(k + 1);
    if (sorted(k) - t > Scalar(0)) threshold = t;
  }
  return (v.array() - threshold).cwiseMax(Scalar(0)).matrix();
}

}  // namespace detail

/// Euclidean projection onto the probability simplex {x >= 0, sum x = 1}.
/// Sort descending, take the largest k with u_k > (sum_{j<=k} u_j - 1) / k,
/// shift by that threshold and clip at zero. O(m log m).
template <typename Derived>
VectorX<typename Derived::Scalar> project_simplex(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
#ifdef ADGDA_MUTATION_NEGATED_PROJECTION
  // Mutation-testing build only: a deliberately wrong projection that still
  // lands on the simplex.
  return detail::sort_threshold_projection<Scalar>(-v);
#else
  return detail::sort_threshold_projection<Scalar>(v);
#endif
}

// True when x lies on the simplex within `tol`.
template <typename Derived>
bool on_simplex(const Eigen::MatrixBase<Derived>& x, double tol = 1e-10) {
  return x.allFinite() && x.minCoeff() >= -tol && std::abs(x.sum() - 1) <= tol;
}

}  // namespace adgda
