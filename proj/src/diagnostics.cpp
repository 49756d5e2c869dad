#include "adgda/diagnostics.hpp"

#include "adgda/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace adgda {

ConsensusErrors consensus_errors(const std::vector<NodeState>& states) {
  if (states.size() < 2) throw std::invalid_argument("consensus errors need at least 2 nodes");
  const auto m = static_cast<Index>(states.size());
  Mat thetas(states.front().theta.size(), m);
  Mat lambdas(states.front().lambda.size(), m);
  for (Index i = 0; i < m; ++i) {
    thetas.col(i) = states[static_cast<std::size_t>(i)].theta;
    lambdas.col(i) = states[static_cast<std::size_t>(i)].lambda;
  }
  return {consensus_error(thetas), consensus_error(lambdas)};
}

BoundReport check_consensus_bounds(const RunRecord& record, const TheoryParams& theory) {
  BoundReport report;
  const double m = static_cast<double>(theory.nodes > 0 ? theory.nodes : record.nodes);
  for (const auto& row : record.rows) {
    const double g_theta = (theory.g_theta >= 0.0 ? theory.g_theta : row.g_theta) * theory.g_scale;
    const double g_lambda = (theory.g_lambda >= 0.0 ? theory.g_lambda : row.g_lambda) * theory.g_scale;
    const double bound_theta =
        12.0 * row.eta_theta * row.eta_theta * m * g_theta * g_theta / (theory.c * theory.c);
    const double bound_lambda =
        4.0 * row.eta_lambda * row.eta_lambda * m * g_lambda * g_lambda / (theory.rho * theory.rho);
    ++report.rows;
    if (row.xi_theta > bound_theta) ++report.theta_violations;
    if (row.xi_lambda > bound_lambda) ++report.lambda_violations;
    if (bound_theta > 0.0) report.max_theta_ratio = std::max(report.max_theta_ratio, row.xi_theta / bound_theta);
    if (bound_lambda > 0.0) {
      report.max_lambda_ratio = std::max(report.max_lambda_ratio, row.xi_lambda / bound_lambda);
    }
  }
  if (report.rows > 0) {
    report.theta_violation_fraction = static_cast<double>(report.theta_violations) / report.rows;
    report.lambda_violation_fraction = static_cast<double>(report.lambda_violations) / report.rows;
  }
  return report;
}

Vec best_response_lambda(const RobustObjective& obj, const Vec& losses, const BestResponseOptions& options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("best response tolerance must be positive");
  const Regularizer& reg = obj.regularizer;
  const double m = static_cast<double>(obj.nodes());
  const auto value = [&](const Vec& l) { return l.dot(losses) / m + reg.alpha * reg.value(l); };
  const auto gradient = [&](const Vec& l) { return Vec(losses / m + reg.alpha * reg.gradient(l)); };

  Vec lambda = reg.reference;
  const double curvature = reg.kind == RegularizerKind::kChiSquared ? reg.smoothness() : reg.alpha / reg.reference.minCoeff();
  double step = curvature > 0.0 ? 1.0 / curvature : 1.0;
  for (long it = 0; it < options.max_iterations; ++it) {
    const Vec grad = gradient(lambda);
    const double current = value(lambda);
    Vec next;
    for (int tries = 0;; ++tries) {
      next = project_simplex(lambda + step * grad);
      const Vec diff = next - lambda;
      if (value(next) >= current + grad.dot(diff) - diff.squaredNorm() / (2.0 * step) - 1e-15 * std::abs(current) ||
          tries > 60) {
        break;
      }
      step *= 0.5;
    }
    const double mapping = (next - lambda).norm() / step;
    lambda = std::move(next);
    if (mapping <= options.tol) return lambda;
    step *= 1.25;
  }
  throw ConvergenceError("best response did not reach tolerance within the iteration cap");
}

Vec best_response_lambda_at(const RobustObjective& obj, const Vec& theta, const BestResponseOptions& options) {
  return best_response_lambda(obj, obj.losses->full_losses(theta), options);
}

double phi(const RobustObjective& obj, const Vec& theta, const BestResponseOptions& options) {
  const Vec losses = obj.losses->full_losses(theta);
  return robust_value_at_losses(obj, losses, best_response_lambda(obj, losses, options));
}

namespace {

// Gradient descent with Armijo backtracking on a smooth convex function.
template <typename ValueGrad>
Vec descend(const ValueGrad& value_grad, Vec theta, const PrimalOptions& options) {
  Vec grad;
  double value = value_grad(theta, &grad);
  double step = 1.0;
  for (long it = 0; it < options.max_iterations; ++it) {
    const double gnorm2 = grad.squaredNorm();
    if (std::sqrt(gnorm2) <= options.tol) return theta;
    Vec next;
    Vec next_grad;
    double next_value = 0.0;
    for (int tries = 0;; ++tries) {
      next = theta - step * grad;
      next_value = value_grad(next, &next_grad);
      if (next_value <= value - 0.5 * step * gnorm2 || tries > 60) break;
      step *= 0.5;
    }
    if (next_value > value) {
      // No decrease possible at machine precision; the gradient is as small
      // as it gets.
      if (std::sqrt(gnorm2) <= 1e3 * options.tol) return theta;
      throw ConvergenceError("primal descent stalled above tolerance");
    }
    theta = std::move(next);
    grad = std::move(next_grad);
    value = next_value;
    step *= 1.5;
  }
  throw ConvergenceError("primal descent did not reach tolerance within the iteration cap");
}

}  // namespace

Vec minimize_primal(const RobustObjective& obj, const Vec& lambda, const Vec& start, const PrimalOptions& options) {
  const double m = static_cast<double>(obj.nodes());
  const auto value_grad = [&](const Vec& theta, Vec* grad) {
    double total = 0.0;
    grad->setZero(theta.size());
    Vec g;
    for (int i = 0; i < obj.nodes(); ++i) {
      total += lambda(i) * obj.losses->full_loss_grad(i, theta, &g);
      *grad += lambda(i) * g;
    }
    *grad /= m;
    return total / m;
  };
  return descend(value_grad, start, options);
}

RobustOptimum minimize_phi(const RobustObjective& obj, const Vec& start, const PrimalOptions& options) {
  const double m = static_cast<double>(obj.nodes());
  BestResponseOptions dual;
  dual.tol = std::min(1e-10, options.tol);
  const auto value_grad = [&](const Vec& theta, Vec* grad) {
    const Vec losses = obj.losses->full_losses(theta);
    const Vec lambda = best_response_lambda(obj, losses, dual);
    grad->setZero(theta.size());
    Vec g;
    for (int i = 0; i < obj.nodes(); ++i) {
      obj.losses->full_loss_grad(i, theta, &g);
      *grad += lambda(i) * g;
    }
    *grad /= m;
    return robust_value_at_losses(obj, losses, lambda);
  };
  RobustOptimum out;
  out.theta = descend(value_grad, start, options);
  out.phi = phi(obj, out.theta, dual);
  return out;
}

PhiGap phi_and_gap(const RobustObjective& obj, const Vec& theta_o, const Vec& lambda_o,
                   const BestResponseOptions& dual, const PrimalOptions& primal) {
  PhiGap out;
  const Vec losses = obj.losses->full_losses(theta_o);
  out.lambda_star = best_response_lambda(obj, losses, dual);
  out.phi = robust_value_at_losses(obj, losses, out.lambda_star);
  out.theta_star = minimize_primal(obj, lambda_o, theta_o, primal);
  out.dual_min = robust_value(obj, out.theta_star, lambda_o);
  out.gap = out.phi - out.dual_min;
  return out;
}

double dual_tracking_error(const RobustObjective& obj, const Vec& theta_bar, const Vec& lambda_bar) {
  return (best_response_lambda_at(obj, theta_bar) - lambda_bar).squaredNorm();
}

GroupMetrics worst_group_metrics(const ModelSpec& model, const Vec& theta, const Dataset& data) {
  return worst_group_metrics(model, theta, data, data.evaluation_shards());
}

GroupMetrics worst_group_metrics(const ModelSpec& model, const Vec& theta, const Dataset& data,
                                 const std::vector<std::vector<Index>>& shards) {
  if (shards.empty()) throw std::invalid_argument("no evaluation shards");
  GroupMetrics out;
  out.worst_acc = std::numeric_limits<double>::infinity();
  out.worst_loss = -std::numeric_limits<double>::infinity();
  double correct = 0.0;
  double loss_sum = 0.0;
  double count = 0.0;
  for (const auto& shard : shards) {
    if (shard.empty()) throw std::invalid_argument("empty evaluation shard");
    const ShardScore s = score(model, theta, data.features, data.labels, shard);
    out.per_group.push_back(s);
    out.worst_acc = std::min(out.worst_acc, s.accuracy);
    out.worst_loss = std::max(out.worst_loss, s.loss);
    correct += s.accuracy * static_cast<double>(s.count);
    loss_sum += s.loss * static_cast<double>(s.count);
    count += static_cast<double>(s.count);
  }
  out.avg_acc = correct / count;
  out.avg_loss = loss_sum / count;
  return out;
}

double rate_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("rate slope needs at least 3 points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [t, gap] : points) {
    if (!(gap > 0.0) || !(t > 0.0)) throw std::invalid_argument("rate slope needs positive T and gaps");
    const double x = std::log(t);
    const double y = std::log(gap);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace adgda
