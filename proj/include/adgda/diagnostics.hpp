#pragma once

#include "adgda/dataset.hpp"
#include "adgda/model.hpp"
#include "adgda/objective.hpp"
#include "adgda/record.hpp"
#include "adgda/state.hpp"

#include <utility>
#include <vector>

namespace adgda {

// Sum of squared deviations of the columns from their mean.
template <typename Derived>
double consensus_error(const Eigen::MatrixBase<Derived>& columns) {
  return (columns.colwise() - columns.rowwise().mean()).squaredNorm();
}

struct ConsensusErrors {
  double xi_theta = 0.0;
  double xi_lambda = 0.0;
};

ConsensusErrors consensus_errors(const std::vector<NodeState>& states);

// Constants entering the consensus bounds. Negative g_* means "use the running
// max recorded in each row"; g_scale multiplies whichever is used.
struct TheoryParams {
  double g_theta = -1.0;
  double g_lambda = -1.0;
  double g_scale = 1.0;
  double rho = 1.0;
  double beta = 0.0;
  double delta = 1.0;
  double gamma = 1.0;
  double c = 1.0 / 82.0;
  double kappa = 0.0;  // 0 when unavailable
  int nodes = 0;
};

struct BoundReport {
  long rows = 0;
  long theta_violations = 0;
  long lambda_violations = 0;
  double theta_violation_fraction = 0.0;
  double lambda_violation_fraction = 0.0;
  double max_theta_ratio = 0.0;  // max Xi_theta / bound over rows with a positive bound
  double max_lambda_ratio = 0.0;
};

/// Compares every recorded row against
///   Xi_theta <= 12 eta_theta^2 m G_theta^2 / c^2,
///   Xi_lambda <= 4 eta_lambda^2 m G_lambda^2 / rho^2.
BoundReport check_consensus_bounds(const RunRecord& record, const TheoryParams& theory);

struct BestResponseOptions {
  double tol = 1e-8;
  long max_iterations = 1'000'000;
};

/// Maximiser of g(theta, .) over the simplex for fixed full losses, by
/// projected gradient ascent with backtracking, stopped when the gradient
/// mapping norm ||P(lambda + s grad) - lambda|| / s drops below tol.
/// Throws ConvergenceError past the iteration cap.
Vec best_response_lambda(const RobustObjective& obj, const Vec& losses,
                         const BestResponseOptions& options = {});
Vec best_response_lambda_at(const RobustObjective& obj, const Vec& theta,
                            const BestResponseOptions& options = {});

// Phi(theta) = g(theta, lambda*(theta)).
double phi(const RobustObjective& obj, const Vec& theta, const BestResponseOptions& options = {});

struct PrimalOptions {
  double tol = 1e-8;  // on the gradient norm
  long max_iterations = 200'000;
};

// argmin_theta g(theta, lambda) by full-gradient descent with Armijo
// backtracking, started at `start`.
Vec minimize_primal(const RobustObjective& obj, const Vec& lambda, const Vec& start,
                    const PrimalOptions& options = {});

struct PhiGap {
  double phi = 0.0;  // max_lambda g(theta_o, lambda)
  double gap = 0.0;  // phi - min_theta g(theta, lambda_o)
  double dual_min = 0.0;
  Vec lambda_star;   // best response to theta_o
  Vec theta_star;    // best response to lambda_o
};

PhiGap phi_and_gap(const RobustObjective& obj, const Vec& theta_o, const Vec& lambda_o,
                   const BestResponseOptions& dual = {}, const PrimalOptions& primal = {});

// min_theta Phi(theta), by gradient descent on Phi with the best-response
// gradient (1/m) sum_i lambda*_i grad f_i.
struct RobustOptimum {
  Vec theta;
  double phi = 0.0;
};
RobustOptimum minimize_phi(const RobustObjective& obj, const Vec& start,
                           const PrimalOptions& options = {});

// ||lambda*(theta_bar) - lambda_bar||^2.
double dual_tracking_error(const RobustObjective& obj, const Vec& theta_bar, const Vec& lambda_bar);

struct GroupMetrics {
  double worst_acc = 0.0;
  double avg_acc = 0.0;  // pooled over all evaluation samples
  double worst_loss = 0.0;
  double avg_loss = 0.0;
  std::vector<ShardScore> per_group;
};

// Scores theta on every evaluation shard of `data`; throws on an empty shard.
GroupMetrics worst_group_metrics(const ModelSpec& model, const Vec& theta, const Dataset& data);
GroupMetrics worst_group_metrics(const ModelSpec& model, const Vec& theta, const Dataset& data,
                                 const std::vector<std::vector<Index>>& shards);

// Least-squares slope of log(gap) against log(T).
double rate_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace adgda
