#pragma once

#include "adgda/losses.hpp"
#include "adgda/regularizer.hpp"
#include "adgda/simplex.hpp"

#include <memory>

namespace adgda {

/// The robust network objective
///   g(theta, lambda) = (1/m) sum_i g_i(theta, lambda),
///   g_i(theta, lambda) = lambda_i f_i(theta) + alpha r(lambda),
/// minimised over theta and maximised over lambda on the simplex.
struct RobustObjective {
  std::shared_ptr<const LocalLosses> losses;
  Regularizer regularizer;

  int nodes() const { return losses->nodes(); }
  Index dim() const { return losses->dim(); }
};

// Regularizer of the given kind and weight referenced at the empirical node
// weights of `losses`.
RobustObjective make_objective(std::shared_ptr<const LocalLosses> losses, RegularizerKind kind,
                               double alpha);

// lambda_i[i] * grad f_i(theta; batch); r does not depend on theta.
Vec primal_stoch_grad(const RobustObjective& obj, int node, const Vec& theta, const Vec& lambda,
                      Batch batch);

// f_i(theta; batch) e_i + alpha grad r(lambda).
Vec dual_stoch_grad(const RobustObjective& obj, int node, const Vec& theta, const Vec& lambda,
                    Batch batch);

// Both oracles from one evaluation on the same minibatch.
struct NodeOracles {
  double loss = 0.0;
  Vec primal;
  Vec dual;
};
NodeOracles node_oracles(const RobustObjective& obj, int node, const Vec& theta, const Vec& lambda,
                         Batch batch);

// g_i on the full shard.
double node_objective(const RobustObjective& obj, int node, const Vec& theta, const Vec& lambda);

// g(theta, lambda) given precomputed full losses f(theta).
double robust_value_at_losses(const RobustObjective& obj, const Vec& losses, const Vec& lambda);
double robust_value(const RobustObjective& obj, const Vec& theta, const Vec& lambda);

// Full-data gradients of g.
Vec robust_primal_grad(const RobustObjective& obj, const Vec& theta, const Vec& lambda);
Vec robust_dual_grad(const RobustObjective& obj, const Vec& losses, const Vec& lambda);

}  // namespace adgda
