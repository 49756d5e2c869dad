#include "adgda/objective.hpp"

#include "adgda/errors.hpp"

namespace adgda {

RobustObjective make_objective(std::shared_ptr<const LocalLosses> losses, RegularizerKind kind,
                               double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("regularizer weight alpha must be nonnegative");
  RobustObjective obj;
  obj.regularizer.kind = kind;
  obj.regularizer.alpha = alpha;
  obj.regularizer.reference = losses->node_weights();
  obj.losses = std::move(losses);
  return obj;
}

Vec primal_stoch_grad(const RobustObjective& obj, int node, const Vec& theta, const Vec& lambda,
                      Batch batch) {
  Vec grad;
  obj.losses->loss_grad(node, theta, batch, &grad);
  return lambda(node) * grad;
}

Vec dual_stoch_grad(const RobustObjective& obj, int node, const Vec& theta, const Vec& lambda,
                    Batch batch) {
  Vec grad = obj.regularizer.alpha * obj.regularizer.gradient(lambda);
  grad(node) += obj.losses->local_loss(node, theta, batch);
  return grad;
}

NodeOracles node_oracles(const RobustObjective& obj, int node, const Vec& theta, const Vec& lambda,
                         Batch batch) {
  NodeOracles out;
  Vec grad;
  out.loss = obj.losses->loss_grad(node, theta, batch, &grad);
  out.primal = lambda(node) * grad;
  out.dual = obj.regularizer.alpha * obj.regularizer.gradient(lambda);
  out.dual(node) += out.loss;
  return out;
}

double node_objective(const RobustObjective& obj, int node, const Vec& theta, const Vec& lambda) {
  return lambda(node) * obj.losses->full_loss_grad(node, theta, nullptr) +
         obj.regularizer.alpha * obj.regularizer.value(lambda);
}

double robust_value_at_losses(const RobustObjective& obj, const Vec& losses, const Vec& lambda) {
  return lambda.dot(losses) / static_cast<double>(obj.nodes()) +
         obj.regularizer.alpha * obj.regularizer.value(lambda);
}

double robust_value(const RobustObjective& obj, const Vec& theta, const Vec& lambda) {
  return robust_value_at_losses(obj, obj.losses->full_losses(theta), lambda);
}

Vec robust_primal_grad(const RobustObjective& obj, const Vec& theta, const Vec& lambda) {
  Vec total = Vec::Zero(obj.dim());
  Vec grad;
  for (int i = 0; i < obj.nodes(); ++i) {
    obj.losses->full_loss_grad(i, theta, &grad);
    total += lambda(i) * grad;
  }
  return total / static_cast<double>(obj.nodes());
}

Vec robust_dual_grad(const RobustObjective& obj, const Vec& losses, const Vec& lambda) {
  return losses / static_cast<double>(obj.nodes()) +
         obj.regularizer.alpha * obj.regularizer.gradient(lambda);
}

}  // namespace adgda
