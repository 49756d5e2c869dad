#pragma once

#include "adgda/errors.hpp"
#include "adgda/rng.hpp"
#include "adgda/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace adgda {

enum class CompressionKind { kIdentity, kRandomQuantization, kTopK };

// Operator choice resolved against the message dimension.
struct CompressionSpec {
  CompressionKind kind = CompressionKind::kIdentity;
  int bits = 0;  // quantization: 2^bits levels
  Index k = 0;   // top-K: retained components
  Index dim = 0;

  static CompressionSpec identity(Index dim);
  static CompressionSpec random_quantization(int bits, Index dim);
  static CompressionSpec top_k(Index k, Index dim);

  bool operator==(const CompressionSpec&) const = default;
};

// Accepts "identity", "quant:<b>", "topk:<count>" and "topk:<fraction>" where
// a fraction (value below 1 or containing '.') is rounded against `dim`.
CompressionSpec parse_compression(std::string_view text, Index dim);
std::string to_string(const CompressionSpec& spec);

void validate(const CompressionSpec& spec);

// tau = 1 + min(d / 2^(2b), sqrt(d) / 2^b)
double quantization_tau(int bits, Index dim);

// Contract constant of E||Q(x) - x||^2 <= (1 - delta) ||x||^2.
double delta_of(const CompressionSpec& spec);

// Payload bits of one message of dimension spec.dim with all selected entries
// nonzero: identity 32 d, quantization 32 + d (b + 1), top-K K (32 + ceil(log2 d)).
std::uint64_t message_bits(const CompressionSpec& spec);

// Bits to address one coordinate of a d-vector.
int index_bits(Index dim);

struct CompressedMessage {
  Vec reconstruction;
  std::uint64_t bits = 0;
};

// Applies Q to x. Randomized operators draw from `rng` only; identity and
// top-K leave it untouched. A zero vector compresses to zero carrying only the
// norm header for quantization and no entries for top-K.
CompressedMessage compress(const Vec& x, const CompressionSpec& spec, Rng& rng);

/// Scaled random quantization with 2^bits levels:
///   sign(x) ||x|| / (2^b tau) * floor(2^b |x| / ||x|| + xi),  xi ~ U[0,1]^d.
/// The 1/tau shrinkage is what makes the operator satisfy the contraction
/// bound with delta = 1/tau; it is biased by that factor.
template <typename Derived>
VectorX<typename Derived::Scalar> random_quantize(const Eigen::MatrixBase<Derived>& x, int bits,
                                                  Rng& rng) {
  using Scalar = typename Derived::Scalar;
  const Index d = x.size();
  VectorX<Scalar> out = VectorX<Scalar>::Zero(d);
  const Scalar norm = x.norm();
  if (norm == Scalar(0)) return out;
  const Scalar levels = std::ldexp(Scalar(1), bits);
  const Scalar tau = static_cast<Scalar>(quantization_tau(bits, d));
  const Scalar scale = norm / (levels * tau);
  for (Index i = 0; i < d; ++i) {
    const Scalar xi = static_cast<Scalar>(uniform01(rng));
    const Scalar level = std::floor(levels * std::abs(x(i)) / norm + xi);
    const Scalar sign = x(i) > Scalar(0) ? Scalar(1) : (x(i) < Scalar(0) ? Scalar(-1) : Scalar(0));
    out(i) = sign * scale * level;
  }
  return out;
}

// Indices of the k largest-magnitude entries; ties go to the smaller index.
template <typename Derived>
std::vector<Index> top_k_indices(const Eigen::MatrixBase<Derived>& x, Index k) {
  std::vector<Index> idx(static_cast<std::size_t>(x.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  const auto before = [&x](Index a, Index b) {
    const auto ma = std::abs(x(a));
    const auto mb = std::abs(x(b));
    return ma != mb ? ma > mb : a < b;
  };
  k = std::clamp<Index>(k, 0, x.size());
  std::nth_element(idx.begin(), idx.begin() + k, idx.end(), before);
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

template <typename Derived>
VectorX<typename Derived::Scalar> top_k(const Eigen::MatrixBase<Derived>& x, Index k) {
  VectorX<typename Derived::Scalar> out = VectorX<typename Derived::Scalar>::Zero(x.size());
  for (Index i : top_k_indices(x, k)) out(i) = x(i);
  return out;
}

}  // namespace adgda
