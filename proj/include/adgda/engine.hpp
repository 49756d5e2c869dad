#pragma once

#include "adgda/compression.hpp"
#include "adgda/objective.hpp"
#include "adgda/record.hpp"
#include "adgda/schedule.hpp"
#include "adgda/state.hpp"
#include "adgda/topology.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace adgda {

enum class Algorithm {
  kAdGda,     // descent/ascent with compressed primal gossip and dual averaging
  kChocoSgd,  // same gossip, dual frozen at the empirical weights
  kDrDsgd,    // closed-form KL dual from gossiped loss estimates
};

std::string_view to_string(Algorithm algo);
Algorithm parse_algorithm(std::string_view name);

// Public variables at round zero. kAlgorithm: theta_hat = s = 0.
// kConsistent: theta_hat = theta0 and s = W theta_hat.
enum class InitMode { kAlgorithm, kConsistent };
enum class DualInit { kEmpirical, kUniform };

std::string_view to_string(InitMode mode);
InitMode parse_init_mode(std::string_view name);
std::string_view to_string(DualInit init);
DualInit parse_dual_init(std::string_view name);

struct HyperParams {
  Algorithm algo = Algorithm::kAdGda;
  Schedule schedule;
  double gamma = 1.0;  // consensus step size
  long rounds = 1;
  Index batch = 1;
  long cadence = 10;  // rounds between record rows
  int threads = 1;
  InitMode init = InitMode::kAlgorithm;
  DualInit dual_init = DualInit::kEmpirical;
  std::optional<Vec> theta0;  // zeros when empty
};

void validate(const HyperParams& hyper);

struct RunOutput {
  Vec theta_out;   // (1/T) sum_{t<T} mean_i theta_i^t
  Vec lambda_out;  // (1/T) sum_{t<T} mean_i lambda_i^t
  Vec theta_final;  // network average after the last round
  std::vector<NodeState> final_states;
  RunRecord record;
};

// Accuracy hook for record rows, evaluated at the network-average model.
struct Accuracy {
  double worst = 0.0;
  double average = 0.0;
};
using AccuracyEvaluator = std::function<Accuracy(const Vec& theta_bar)>;

/// Round-synchronous simulator of the decentralized algorithms. Node columns
/// of the state matrices hold the per-node variables; every random draw comes
/// from a (seed, node, round, purpose) stream, so the trajectory does not
/// depend on `threads`.
class Engine {
 public:
  Engine(RobustObjective objective, MixingMatrix mixing, CompressionSpec compression,
         HyperParams hyper, std::uint64_t seed);

  int nodes() const { return static_cast<int>(mixing_.size()); }
  Index dim() const { return objective_.dim(); }
  long round() const { return round_; }
  const HyperParams& hyper() const { return hyper_; }
  const MixingMatrix& mixing() const { return mixing_; }
  const CompressionSpec& compression() const { return compression_; }
  const RobustObjective& objective() const { return objective_; }

  NodeState node_state(int node) const;
  std::vector<NodeState> states() const;
  const Mat& thetas() const { return theta_; }
  const Mat& lambdas() const { return lambda_; }
  const Mat& public_thetas() const { return theta_hat_; }
  const Mat& trackers() const { return s_; }

  Vec theta_bar() const { return theta_.rowwise().mean(); }
  Vec lambda_bar() const { return lambda_.rowwise().mean(); }
  Rates rates() const { return lr_schedule(hyper_.schedule, round_, hyper_.rounds); }

  // Descent and projected ascent at one node, in place (theta^{t+1/2},
  // lambda^{t+1/2}). Both oracles use the same minibatch.
  void local_step(int node);
  // All nodes; fork-join over `threads`.
  void local_steps();
  // Gossip, compression, exchange, public-variable update and dual
  // averaging; advances the round counter.
  void gossip_step();
  void step();

  // Runs the remaining rounds and records rows every `cadence` rounds plus
  // the final round. Throws DivergenceError on non-finite iterates.
  RunOutput run(const AccuracyEvaluator& accuracy = {});

  RecordRow snapshot(const AccuracyEvaluator& accuracy = {}) const;

  const std::vector<std::uint64_t>& bits_sent() const { return bits_; }
  double max_primal_grad_norm() const;
  double max_dual_grad_norm() const;

  // Change of the network-mean primal iterate across the last gossip line,
  // measured as max-abs, and of the network-mean dual iterate across the
  // last averaging.
  double last_primal_mean_drift() const { return primal_drift_; }
  double last_dual_mean_drift() const { return dual_drift_; }

 private:
  RobustObjective objective_;
  MixingMatrix mixing_;
  CompressionSpec compression_;
  HyperParams hyper_;
  std::uint64_t seed_;
  long round_ = 0;

  Mat theta_;      // d x m
  Mat lambda_;     // m x m, column i is node i's dual
  Mat theta_hat_;  // d x m
  Mat s_;          // d x m
  Mat loss_estimates_;  // m x m, DR-DSGD only
  Vec p_;

  std::vector<int> degree_;
  std::vector<std::uint64_t> bits_;
  std::vector<double> max_primal_norm_;
  std::vector<double> max_dual_norm_;
  std::vector<char> nonfinite_;
  double primal_drift_ = 0.0;
  double dual_drift_ = 0.0;
};

// Constructs an engine and runs it (init_run followed by run).
RunOutput run_algorithm(const RobustObjective& objective, const MixingMatrix& mixing,
                        const CompressionSpec& compression, const HyperParams& hyper,
                        std::uint64_t seed, const AccuracyEvaluator& accuracy = {});

// Closed-form maximiser of sum_j lambda_j f_j - alpha sum_j lambda_j log(lambda_j / p_j):
// lambda_j proportional to p_j exp(f_j / alpha), computed with max subtraction.
Vec kl_dual_closed_form(const Vec& losses, const Vec& reference, double alpha);

}  // namespace adgda
