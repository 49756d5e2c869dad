#include "adgda/regularizer.hpp"

#include "adgda/errors.hpp"

#include <cmath>
#include <string>

namespace adgda {

std::string_view to_string(RegularizerKind kind) {
  return kind == RegularizerKind::kChiSquared ? "chi2" : "kl";
}

RegularizerKind parse_regularizer_kind(std::string_view name) {
  if (name == "chi2") return RegularizerKind::kChiSquared;
  if (name == "kl") return RegularizerKind::kKullbackLeibler;
  throw ConfigError("unknown regularizer '" + std::string(name) + "'");
}

double Regularizer::value(const Vec& lambda) const {
  if (kind == RegularizerKind::kChiSquared) {
    return -((lambda - reference).array().square() / reference.array()).sum();
  }
  const Eigen::ArrayXd l = lambda.array().max(kKlClamp);
  return -(l * (l / reference.array()).log()).sum();
}

Vec Regularizer::gradient(const Vec& lambda) const {
  if (kind == RegularizerKind::kChiSquared) {
    return (-2.0 * (lambda - reference).array() / reference.array()).matrix();
  }
  const Eigen::ArrayXd l = lambda.array().max(kKlClamp);
  return (-((l / reference.array()).log() + 1.0)).matrix();
}

double Regularizer::strong_concavity() const {
  if (kind == RegularizerKind::kChiSquared) return 2.0 * alpha / reference.maxCoeff();
  return alpha;
}

double Regularizer::smoothness() const {
  if (kind == RegularizerKind::kChiSquared) return 2.0 * alpha / reference.minCoeff();
  return alpha / kKlClamp;
}

ValueGrad regularizer_value_grad(const Regularizer& reg, const Vec& lambda) {
  return {reg.value(lambda), reg.gradient(lambda)};
}

}  // namespace adgda
