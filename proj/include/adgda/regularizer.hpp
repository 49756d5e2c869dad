#pragma once

#include "adgda/types.hpp"

#include <string_view>

namespace adgda {

enum class RegularizerKind { kChiSquared, kKullbackLeibler };

std::string_view to_string(RegularizerKind kind);
RegularizerKind parse_regularizer_kind(std::string_view name);

// Lower clamp applied to lambda before taking logs in the KL penalty.
inline constexpr double kKlClamp = 1e-9;

/// Concave dual penalty r(lambda) = -divergence(lambda || p), scaled by alpha
/// where it enters the objective. `reference` is p, the empirical node weights.
struct Regularizer {
  RegularizerKind kind = RegularizerKind::kChiSquared;
  double alpha = 1.0;
  Vec reference;

  // r(lambda), unscaled by alpha.
  double value(const Vec& lambda) const;
  // grad r(lambda), unscaled by alpha.
  Vec gradient(const Vec& lambda) const;

  // Strong-concavity modulus of alpha * r on the simplex: 2 alpha / max p for
  // chi-squared, alpha for KL (curvature 1/lambda_i >= 1).
  double strong_concavity() const;
  // Upper curvature of alpha * r: 2 alpha / min p for chi-squared; for KL it
  // is bounded only through the clamp.
  double smoothness() const;
};

struct ValueGrad {
  double value = 0.0;
  Vec gradient;
};

// r(lambda) and its gradient for the given regularizer (alpha not applied).
ValueGrad regularizer_value_grad(const Regularizer& reg, const Vec& lambda);

}  // namespace adgda
