#include "adgda/engine.hpp"

#include "adgda/diagnostics.hpp"
#include "adgda/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

namespace adgda {

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kAdGda: return "adgda";
    case Algorithm::kChocoSgd: return "choco_sgd";
    case Algorithm::kDrDsgd: return "dr_dsgd";
  }
  return "adgda";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "adgda") return Algorithm::kAdGda;
  if (name == "choco_sgd") return Algorithm::kChocoSgd;
  if (name == "dr_dsgd") return Algorithm::kDrDsgd;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(InitMode mode) {
  return mode == InitMode::kAlgorithm ? "algorithm" : "consistent";
}

InitMode parse_init_mode(std::string_view name) {
  if (name == "algorithm") return InitMode::kAlgorithm;
  if (name == "consistent") return InitMode::kConsistent;
  throw ConfigError("unknown init mode '" + std::string(name) + "'");
}

std::string_view to_string(DualInit init) {
  return init == DualInit::kEmpirical ? "empirical" : "uniform";
}

DualInit parse_dual_init(std::string_view name) {
  if (name == "empirical") return DualInit::kEmpirical;
  if (name == "uniform") return DualInit::kUniform;
  throw ConfigError("unknown dual init '" + std::string(name) + "'");
}

void validate(const HyperParams& h) {
  validate(h.schedule);
  if (!(h.gamma > 0.0 && h.gamma <= 1.0) && h.gamma != 0.0) {
    throw ConfigError("consensus step size gamma must lie in (0, 1]");
  }
  if (h.rounds < 1) throw ConfigError("number of rounds must be at least 1");
  if (h.batch < 1) throw ConfigError("batch size must be at least 1");
  if (h.cadence < 1) throw ConfigError("metric cadence must be at least 1");
  if (h.threads < 1) throw ConfigError("thread count must be at least 1");
}

Vec kl_dual_closed_form(const Vec& losses, const Vec& reference, double alpha) {
  Vec out = Vec::Zero(losses.size());
  if (alpha == 0.0) {
    Index best = 0;
    losses.maxCoeff(&best);
    out(best) = 1.0;
    return out;
  }
  const Eigen::ArrayXd logits = reference.array().log() + losses.array() / alpha;
  const Eigen::ArrayXd w = (logits - logits.maxCoeff()).exp();
  return (w / w.sum()).matrix();
}

Engine::Engine(RobustObjective objective, MixingMatrix mixing, CompressionSpec compression,
               HyperParams hyper, std::uint64_t seed)
    : objective_(std::move(objective)),
      mixing_(std::move(mixing)),
      compression_(compression),
      hyper_(std::move(hyper)),
      seed_(seed) {
  validate(hyper_);
  validate(compression_);
  const int m = nodes();
  const Index d = dim();
  if (objective_.nodes() != m) throw ConfigError("mixing matrix size does not match the node count");
  if (compression_.dim != d) throw ConfigError("compression dimension does not match the model");
  if (hyper_.theta0 && hyper_.theta0->size() != d) throw ConfigError("theta0 dimension mismatch");
  if (hyper_.algo == Algorithm::kDrDsgd &&
      objective_.regularizer.kind != RegularizerKind::kKullbackLeibler) {
    throw ConfigError("dr_dsgd requires the KL regularizer");
  }

  p_ = objective_.regularizer.reference;
  const Vec theta0 = hyper_.theta0 ? *hyper_.theta0 : Vec::Zero(d);
  Vec lambda0 = p_;
  if (hyper_.algo == Algorithm::kAdGda && hyper_.dual_init == DualInit::kUniform) {
    lambda0 = Vec::Constant(m, 1.0 / m);
  }

  theta_ = theta0.replicate(1, m);
  lambda_ = lambda0.replicate(1, m);
  if (hyper_.init == InitMode::kAlgorithm) {
    theta_hat_ = Mat::Zero(d, m);
    s_ = Mat::Zero(d, m);
  } else {
    theta_hat_ = theta_;
    s_ = theta_hat_ * mixing_.weights;
  }
  if (hyper_.algo == Algorithm::kDrDsgd) loss_estimates_ = Mat::Zero(m, m);

  const Topology graph = topology_of(mixing_.weights);
  degree_ = graph.degrees();
  bits_.assign(static_cast<std::size_t>(m), 0);
  max_primal_norm_.assign(static_cast<std::size_t>(m), 0.0);
  max_dual_norm_.assign(static_cast<std::size_t>(m), 0.0);
  nonfinite_.assign(static_cast<std::size_t>(m), 0);
}

NodeState Engine::node_state(int node) const {
  return {theta_.col(node), lambda_.col(node), theta_hat_.col(node), s_.col(node)};
}

std::vector<NodeState> Engine::states() const {
  std::vector<NodeState> out;
  out.reserve(static_cast<std::size_t>(nodes()));
  for (int i = 0; i < nodes(); ++i) out.push_back(node_state(i));
  return out;
}

double Engine::max_primal_grad_norm() const {
  return *std::max_element(max_primal_norm_.begin(), max_primal_norm_.end());
}

double Engine::max_dual_grad_norm() const {
  return *std::max_element(max_dual_norm_.begin(), max_dual_norm_.end());
}

void Engine::local_step(int node) {
  const auto i = static_cast<std::size_t>(node);
  const Rates eta = rates();
  Rng rng = make_stream(seed_, i, static_cast<std::uint64_t>(round_), StreamPurpose::kMinibatch);
  std::vector<Index> batch;
  sample_batch(objective_.losses->shard_size(node), hyper_.batch, rng, batch);

  const Vec theta = theta_.col(node);
  switch (hyper_.algo) {
    case Algorithm::kAdGda: {
      const Vec lambda = lambda_.col(node);
      const NodeOracles o = node_oracles(objective_, node, theta, lambda, batch);
      theta_.col(node) = theta - eta.theta * o.primal;
      lambda_.col(node) = project_simplex(lambda + eta.lambda * o.dual);
      max_primal_norm_[i] = std::max(max_primal_norm_[i], o.primal.norm());
      max_dual_norm_[i] = std::max(max_dual_norm_[i], o.dual.norm());
      if (!std::isfinite(o.loss)) nonfinite_[i] = 1;
      break;
    }
    case Algorithm::kChocoSgd: {
      const NodeOracles o = node_oracles(objective_, node, theta, p_, batch);
      theta_.col(node) = theta - eta.theta * o.primal;
      max_primal_norm_[i] = std::max(max_primal_norm_[i], o.primal.norm());
      if (!std::isfinite(o.loss)) nonfinite_[i] = 1;
      break;
    }
    case Algorithm::kDrDsgd: {
      Vec grad;
      const double loss = objective_.losses->loss_grad(node, theta, batch, &grad);
      loss_estimates_(node, node) = loss;
      const Vec lambda =
          kl_dual_closed_form(loss_estimates_.col(node), p_, objective_.regularizer.alpha);
      lambda_.col(node) = lambda;
      const Vec primal = lambda(node) * grad;
      theta_.col(node) = theta - eta.theta * primal;
      max_primal_norm_[i] = std::max(max_primal_norm_[i], primal.norm());
      if (!std::isfinite(loss)) nonfinite_[i] = 1;
      break;
    }
  }
  if (!theta_.col(node).allFinite()) nonfinite_[i] = 1;
}

void Engine::local_steps() {
  const int m = nodes();
  const int workers = std::min(hyper_.threads, m);
  if (workers <= 1) {
    for (int i = 0; i < m; ++i) local_step(i);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([this, w, workers, m] {
        for (int i = w; i < m; i += workers) local_step(i);
      });
    }
  }
  for (int i = 0; i < m; ++i) {
    if (nonfinite_[static_cast<std::size_t>(i)]) {
      throw DivergenceError(round_, "non-finite iterate or loss at node " + std::to_string(i));
    }
  }
}

void Engine::gossip_step() {
  const int m = nodes();
  const Mat& w = mixing_.weights;

  // Gossip line: a correction that moves no network mass since sum_i s_i =
  // sum_i theta_hat_i.
  const Vec mean_before = theta_.rowwise().mean();
  theta_ += hyper_.gamma * (s_ - theta_hat_);
  primal_drift_ = (theta_.rowwise().mean() - mean_before).cwiseAbs().maxCoeff();

  // Compression, per node on its own stream.
  Mat q(theta_.rows(), m);
  std::vector<std::uint64_t> primal_bits(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    Rng rng = make_stream(seed_, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(round_),
                          StreamPurpose::kCompression);
    CompressedMessage msg = compress(theta_.col(i) - theta_hat_.col(i), compression_, rng);
    q.col(i) = std::move(msg.reconstruction);
    primal_bits[static_cast<std::size_t>(i)] = msg.bits;
  }

  // Exchange and public-variable update. Column i of q W is sum_j w_ji q_j,
  // which equals sum_j w_ij q_j for symmetric W.
  theta_hat_ += q;
  s_.noalias() += q * w;

  const Vec dual_before = lambda_.rowwise().mean();
  std::uint64_t side_bits = 0;
  switch (hyper_.algo) {
    case Algorithm::kAdGda:
      lambda_ = lambda_ * w;
      side_bits = 32 * static_cast<std::uint64_t>(m);
      break;
    case Algorithm::kChocoSgd:
      break;
    case Algorithm::kDrDsgd:
      loss_estimates_ = loss_estimates_ * w;
      side_bits = 32 * static_cast<std::uint64_t>(m);
      break;
  }
  dual_drift_ = (lambda_.rowwise().mean() - dual_before).cwiseAbs().maxCoeff();

  // Every node sends its messages to each neighbour.
  for (int i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    bits_[k] += static_cast<std::uint64_t>(degree_[k]) * (primal_bits[k] + side_bits);
  }
  ++round_;
}

void Engine::step() {
  local_steps();
  gossip_step();
}

RecordRow Engine::snapshot(const AccuracyEvaluator& accuracy) const {
  RecordRow row;
  row.t = round_;
  const Vec bar = theta_bar();
  const Vec losses = objective_.losses->full_losses(bar);
  row.node_losses.assign(losses.data(), losses.data() + losses.size());
  row.worst_loss = losses.maxCoeff();
  row.avg_loss = p_.dot(losses);
  if (accuracy) {
    const Accuracy acc = accuracy(bar);
    row.worst_acc = acc.worst;
    row.avg_acc = acc.average;
  } else {
    row.worst_acc = std::numeric_limits<double>::quiet_NaN();
    row.avg_acc = std::numeric_limits<double>::quiet_NaN();
  }
  row.xi_theta = consensus_error(theta_);
  row.xi_lambda = consensus_error(lambda_);
  row.lambda_bar = lambda_bar();
  row.bits = bits_;
  const Rates eta = lr_schedule(hyper_.schedule, std::min(round_, hyper_.rounds - 1), hyper_.rounds);
  row.eta_theta = eta.theta;
  row.eta_lambda = eta.lambda;
  row.g_theta = max_primal_grad_norm();
  row.g_lambda = max_dual_grad_norm();
  return row;
}

RunOutput Engine::run(const AccuracyEvaluator& accuracy) {
  RunOutput out;
  out.record.nodes = nodes();
  Vec theta_sum = Vec::Zero(dim());
  Vec lambda_sum = Vec::Zero(nodes());
  const long start = round_;
  while (round_ < hyper_.rounds) {
    if ((round_ - start) % hyper_.cadence == 0) out.record.rows.push_back(snapshot(accuracy));
    theta_sum += theta_bar();
    lambda_sum += lambda_bar();
    step();
  }
  out.record.rows.push_back(snapshot(accuracy));
  const double count = static_cast<double>(std::max<long>(1, hyper_.rounds - start));
  out.theta_out = theta_sum / count;
  out.lambda_out = lambda_sum / count;
  out.theta_final = theta_bar();
  out.final_states = states();
  return out;
}

RunOutput run_algorithm(const RobustObjective& objective, const MixingMatrix& mixing,
                        const CompressionSpec& compression, const HyperParams& hyper,
                        std::uint64_t seed, const AccuracyEvaluator& accuracy) {
  Engine engine(objective, mixing, compression, hyper, seed);
  return engine.run(accuracy);
}

}  // namespace adgda
