#include "adgda/checks.hpp"

#include "adgda/compression.hpp"
#include "adgda/config.hpp"
#include "adgda/diagnostics.hpp"
#include "adgda/engine.hpp"
#include "adgda/losses.hpp"
#include "adgda/objective.hpp"
#include "adgda/record.hpp"
#include "adgda/rng.hpp"
#include "adgda/simplex.hpp"
#include "adgda/topology.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace adgda {

namespace {

class Failures {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) items_.push_back(what);
  }
  std::vector<std::string> take() { return std::move(items_); }

 private:
  std::vector<std::string> items_;
};

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(6) << v;
  return out.str();
}

Vec random_normal(Index n, Rng& rng) {
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = standard_normal(rng);
  return v;
}

// Cyclic Jacobi rotations on a dense symmetric matrix; independent of the
// Eigen solver used by spectral_constants.
Vec jacobi_eigenvalues(Mat a) {
  const Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  return a.diagonal();
}

// Exact Euclidean projection onto the simplex by enumerating supports and
// keeping the closest feasible KKT point.
Vec projection_oracle(const Vec& v) {
  const Index m = v.size();
  Vec best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    double sum = 0.0;
    int count = 0;
    for (Index i = 0; i < m; ++i) {
      if (mask & (1u << i)) {
        sum += v(i);
        ++count;
      }
    }
    const double tau = (sum - 1.0) / count;
    Vec x = Vec::Zero(m);
    bool feasible = true;
    for (Index i = 0; i < m; ++i) {
      if (mask & (1u << i)) {
        x(i) = v(i) - tau;
        if (x(i) < 0.0) feasible = false;
      }
    }
    if (!feasible) continue;
    const double dist = (x - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return best;
}

// Central differences of f at x, step h.
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-5) {
  Vec g(x.size());
  Vec y = x;
  for (Index i = 0; i < x.size(); ++i) {
    y(i) = x(i) + h;
    const double up = f(y);
    y(i) = x(i) - h;
    const double down = f(y);
    y(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-8});
}

std::shared_ptr<const Dataset> small_classification(int nodes, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.nodes = nodes;
  spec.minority_nodes = 1;
  spec.classes = 3;
  spec.core_dims = 3;
  spec.spurious_dims = 2;
  spec.per_node = 30;
  spec.test_per_node = 30;
  return std::make_shared<const Dataset>(synth_heterogeneous(spec, seed).train);
}

// ---------------------------------------------------------------- topology

std::vector<std::string> topology_suite() {
  Failures f;
  std::vector<std::pair<std::string, Topology>> graphs;
  for (int m = 2; m <= 12; ++m) {
    graphs.emplace_back("ring-" + std::to_string(m), build_topology(TopologyKind::kRing, m));
    graphs.emplace_back("complete-" + std::to_string(m), build_topology(TopologyKind::kComplete, m));
    graphs.emplace_back("star-" + std::to_string(m), build_topology(TopologyKind::kStar, m));
    for (int r = 2; r < m; ++r) {
      if (m % r == 0) {
        graphs.emplace_back("torus-" + std::to_string(r) + "x" + std::to_string(m / r),
                            build_topology(TopologyKind::kTorus2d, m, r, m / r));
      }
    }
  }
  for (const auto& [name, graph] : graphs) {
    for (WeightRule rule : {WeightRule::kMetropolis, WeightRule::kUniformNeighbor}) {
      const std::string label = name + "/" + std::string(to_string(rule));
      const MixingMatrix w = mixing_matrix(graph, rule);
      const Mat& a = w.weights;
      f.expect((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12, label + ": W not symmetric");
      f.expect((a.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12, label + ": row sums");
      f.expect((a.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12, label + ": column sums");
      f.expect(a.minCoeff() >= 0.0, label + ": negative weight");
      for (int i = 0; i < graph.nodes; ++i)
        for (int j = 0; j < graph.nodes; ++j)
          if (i != j && a(i, j) > 0.0 && !graph.has_edge(i, j)) f.expect(false, label + ": weight off the graph");

      Vec eig = jacobi_eigenvalues(a);
      Vec moduli = eig.cwiseAbs();
      std::sort(moduli.data(), moduli.data() + moduli.size(), std::greater<double>());
      const double rho = 1.0 - moduli(1);
      const double beta = (1.0 - eig.array()).abs().maxCoeff();
      // Bipartite graphs under the uniform rule can be periodic (rho = 0).
      if (rho > 1e-9) {
        f.expect(std::abs(rho - w.rho) <= 1e-9, label + ": rho " + fmt(w.rho) + " vs oracle " + fmt(rho));
        f.expect(std::abs(beta - w.beta) <= 1e-9, label + ": beta " + fmt(w.beta) + " vs oracle " + fmt(beta));
      }
      f.expect(w.rho > 0.0 && w.rho <= 1.0 + 1e-12 && w.beta >= 0.0 && w.beta <= 2.0 + 1e-12,
               label + ": spectral constants out of range");
    }
  }
  for (int m : {3, 5, 8}) {
    const SpectralConstants sc = spectral_constants(Mat::Constant(m, m, 1.0 / m));
    f.expect(std::abs(sc.rho - 1.0) <= 1e-12 && std::abs(sc.beta - 1.0) <= 1e-12, "complete uniform rho/beta");
  }
  for (auto [m, r] : {std::pair{8, 2}, std::pair{12, 3}}) {
    const double complete = metropolis_matrix(build_topology(TopologyKind::kComplete, m)).rho;
    const double torus = metropolis_matrix(build_topology(TopologyKind::kTorus2d, m, r, m / r)).rho;
    const double ring = metropolis_matrix(build_topology(TopologyKind::kRing, m)).rho;
    f.expect(complete > torus && torus > ring, "rho ordering complete > torus > ring at m=" + std::to_string(m));
  }
  const ConsensusStep step = consensus_step_size(1.0, 1.0, 1.0);
  f.expect(std::abs(step.gamma - 1.0 / 15.0) <= 1e-15, "gamma(1,1,1) = 1/15");
  f.expect(std::abs(step.c - 1.0 / 82.0) <= 1e-15, "c(1,1) = 1/82");
  double previous = 0.0;
  for (double delta : {0.01, 0.05, 0.2, 0.6, 1.0}) {
    const double g = consensus_step_size(0.5, delta, 1.2).gamma;
    f.expect(g > previous, "gamma increasing in delta");
    previous = g;
  }
  return f.take();
}

// ------------------------------------------------------------- compression

std::vector<std::string> compression_suite() {
  Failures f;
  const Index d = 100;
  Rng gen = make_stream(11, 0, 0, StreamPurpose::kDataGeneration);
  std::vector<Vec> vectors;
  for (int k = 0; k < 200; ++k) {
    const double scale = std::pow(10.0, -3.0 + 6.0 * uniform01(gen));
    vectors.push_back(scale * random_normal(d, gen));
  }
  const std::vector<CompressionSpec> specs = {
      CompressionSpec::random_quantization(4, d),  CompressionSpec::random_quantization(8, d),
      CompressionSpec::random_quantization(16, d), CompressionSpec::top_k(10, d),
      CompressionSpec::top_k(25, d),               CompressionSpec::top_k(50, d)};
  for (const auto& spec : specs) {
    const double delta = delta_of(spec);
    const int draws = spec.kind == CompressionKind::kTopK ? 1 : 20;
    int worst = 0;
    for (std::size_t v = 0; v < vectors.size(); ++v) {
      double mse = 0.0;
      for (int r = 0; r < draws; ++r) {
        Rng rng = make_stream(5, v, static_cast<std::uint64_t>(r), StreamPurpose::kCompression);
        mse += (compress(vectors[v], spec, rng).reconstruction - vectors[v]).squaredNorm();
      }
      mse /= draws;
      if (mse > (1.0 - delta) * vectors[v].squaredNorm() * 1.05) ++worst;
    }
    f.expect(worst == 0, to_string(spec) + ": contract violated on " + std::to_string(worst) + " vectors");
  }
  for (const Index k : {Index{1}, Index{10}, Index{37}}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vec x = random_normal(d, gen);
      const double c = 0.1 + 10.0 * uniform01(gen);
      f.expect(top_k_indices(x, k) == top_k_indices(Vec(c * x), k), "top-K selection not scale invariant");
      f.expect((top_k(Vec(c * x), k) - c * top_k(x, k)).cwiseAbs().maxCoeff() <= 1e-12 * c * x.cwiseAbs().maxCoeff(),
               "top-K not scale equivariant");
      Rng unused = make_stream(0, 0, 0, StreamPurpose::kCompression);
      f.expect((compress(x, CompressionSpec::top_k(k, d), unused).reconstruction.array() != 0.0).count() == k,
               "top-K nonzero count");
    }
  }
  f.expect(message_bits(CompressionSpec::identity(100)) == 3200, "identity bits");
  f.expect(message_bits(CompressionSpec::random_quantization(4, 100)) == 532, "quant:4 bits");
  f.expect(message_bits(CompressionSpec::top_k(10, 100)) == 390, "topk:10 bits");
  f.expect(std::abs(delta_of(CompressionSpec::random_quantization(2, 4)) - 0.8) <= 1e-15, "delta quant:2 d=4");
  return f.take();
}

// --------------------------------------------------------------- objective

std::vector<std::string> objective_suite() {
  Failures f;
  const auto data = small_classification(3, 3);
  Rng rng = make_stream(21, 0, 0, StreamPurpose::kInit);
  for (Architecture arch : {Architecture::kLogistic, Architecture::kMlp}) {
    const ModelSpec model{arch, data->feature_dim(), data->classes, 4, true};
    const auto losses = std::make_shared<ClassificationLosses>(data, model);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const Vec theta = 0.5 * random_normal(model.dim(), rng);
      const int node = k % 3;
      Vec grad;
      losses->full_loss_grad(node, theta, &grad);
      const Vec fd = fd_gradient([&](const Vec& t) { return losses->full_loss_grad(node, t, nullptr); }, theta);
      worst = std::max(worst, relative_error(grad, fd));
    }
    f.expect(worst <= 1e-5, std::string(to_string(arch)) + " loss gradient rel err " + fmt(worst));
  }

  const int m = 4;
  Vec p(m);
  p << 0.1, 0.2, 0.3, 0.4;
  for (RegularizerKind kind : {RegularizerKind::kChiSquared, RegularizerKind::kKullbackLeibler}) {
    const Regularizer reg{kind, 0.7, p};
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      Vec lambda = (random_normal(m, rng).array().abs() + 0.2).matrix();
      lambda /= lambda.sum();
      const Vec fd = fd_gradient([&](const Vec& l) { return reg.value(l); }, lambda);
      worst = std::max(worst, relative_error(reg.gradient(lambda), fd));
    }
    f.expect(worst <= 1e-5, std::string(to_string(kind)) + " regularizer gradient rel err " + fmt(worst));
    f.expect(std::abs(reg.value(p)) <= 1e-15, std::string(to_string(kind)) + " r(p) = 0");
  }

  const ModelSpec model{Architecture::kLogistic, data->feature_dim(), data->classes, 4, true};
  const auto losses = std::make_shared<const ClassificationLosses>(data, model);
  const RobustObjective obj = make_objective(losses, RegularizerKind::kChiSquared, 0.3);
  const std::vector<Index> batch = {0, 3, 7, 7, 12};
  double worst_primal = 0.0, worst_dual = 0.0, worst_assembly = 0.0;
  for (int k = 0; k < 10; ++k) {
    const int node = k % obj.nodes();
    const Vec theta = random_normal(obj.dim(), rng);
    Vec lambda = (random_normal(obj.nodes(), rng).array().abs() + 0.2).matrix();
    lambda /= lambda.sum();
    const auto gi = [&](const Vec& t, const Vec& l) {
      return l(node) * losses->local_loss(node, t, batch) + obj.regularizer.alpha * obj.regularizer.value(l);
    };
    worst_primal = std::max(worst_primal,
                            relative_error(primal_stoch_grad(obj, node, theta, lambda, batch),
                                           fd_gradient([&](const Vec& t) { return gi(t, lambda); }, theta)));
    worst_dual = std::max(worst_dual,
                          relative_error(dual_stoch_grad(obj, node, theta, lambda, batch),
                                         fd_gradient([&](const Vec& l) { return gi(theta, l); }, lambda)));
    double assembled = 0.0;
    for (int i = 0; i < obj.nodes(); ++i) assembled += node_objective(obj, i, theta, lambda);
    assembled /= obj.nodes();
    const Vec fl = losses->full_losses(theta);
    const double direct = lambda.dot(fl) / obj.nodes() + obj.regularizer.alpha * obj.regularizer.value(lambda);
    worst_assembly = std::max({worst_assembly, std::abs(assembled - robust_value(obj, theta, lambda)),
                               std::abs(direct - robust_value(obj, theta, lambda))});
  }
  f.expect(worst_primal <= 1e-5, "primal oracle rel err " + fmt(worst_primal));
  f.expect(worst_dual <= 1e-5, "dual oracle rel err " + fmt(worst_dual));
  f.expect(worst_assembly <= 1e-12, "g assembly mismatch " + fmt(worst_assembly));
  return f.take();
}

// -------------------------------------------------------------- projection

std::vector<std::string> projection_suite() {
  Failures f;
  Rng rng = make_stream(31, 0, 0, StreamPurpose::kInit);
  double worst_oracle = 0.0, worst_idem = 0.0;
  bool feasible = true;
  for (int k = 0; k < 100; ++k) {
    const Index m = 1 + static_cast<Index>(uniform_index(rng, 5));
    const Vec v = 2.0 * random_normal(m, rng);
    const Vec x = project_simplex(v);
    feasible = feasible && on_simplex(x, 1e-10);
    worst_oracle = std::max(worst_oracle, (x - projection_oracle(v)).cwiseAbs().maxCoeff());
    worst_idem = std::max(worst_idem, (project_simplex(x) - x).cwiseAbs().maxCoeff());
  }
  f.expect(feasible, "projection left the simplex");
  f.expect(worst_oracle <= 1e-6, "projection vs enumeration oracle " + fmt(worst_oracle));
  f.expect(worst_idem <= 1e-12, "projection not idempotent " + fmt(worst_idem));
  const Vec a = project_simplex(Vec{{2.0, 0.0}});
  f.expect((a - Vec{{1.0, 0.0}}).norm() <= 1e-12, "project (2, 0)");
  const Vec b = project_simplex(Vec{{0.6, 0.6}});
  f.expect((b - Vec{{0.5, 0.5}}).norm() <= 1e-12, "project (0.6, 0.6)");
  return f.take();
}

// ------------------------------------------------------------------ engine

std::vector<std::string> engine_suite() {
  Failures f;
  const auto data = small_classification(4, 5);
  const ModelSpec model{Architecture::kLogistic, data->feature_dim(), data->classes, 4, true};
  const RobustObjective obj =
      make_objective(std::make_shared<const ClassificationLosses>(data, model), RegularizerKind::kChiSquared, 0.1);
  const MixingMatrix w = metropolis_matrix(build_topology(TopologyKind::kRing, 4));
  const CompressionSpec q = CompressionSpec::random_quantization(8, obj.dim());
  HyperParams h;
  h.schedule.eta_theta0 = 0.5;
  h.schedule.eta_lambda0 = 0.05;
  h.gamma = consensus_step_size(w.rho, delta_of(q), w.beta).gamma;
  h.rounds = 200;
  h.batch = 5;

  Engine engine(obj, w, q, h, 7);
  double drift = 0.0, dual_drift = 0.0, tracker = 0.0;
  bool simplex = true;
  while (engine.round() < h.rounds) {
    engine.local_steps();
    const Vec mean_half = engine.thetas().rowwise().mean();
    const Vec dual_half = engine.lambdas().rowwise().mean();
    engine.gossip_step();
    const Vec mean_next = engine.thetas().rowwise().mean();
    drift = std::max(drift, (mean_next - mean_half).cwiseAbs().maxCoeff() / (1.0 + mean_half.cwiseAbs().maxCoeff()));
    dual_drift = std::max(dual_drift, (engine.lambdas().rowwise().mean() - dual_half).cwiseAbs().maxCoeff());
    tracker = std::max(tracker,
                       (engine.trackers() - engine.public_thetas() * w.weights).cwiseAbs().maxCoeff());
    for (int i = 0; i < engine.nodes(); ++i) simplex = simplex && on_simplex(engine.lambdas().col(i), 1e-10);
  }
  f.expect(drift <= 1e-8, "network mean moved across gossip by " + fmt(drift));
  f.expect(dual_drift <= 1e-12, "dual mean moved across averaging by " + fmt(dual_drift));
  f.expect(tracker <= 1e-8, "tracker identity drift " + fmt(tracker));
  f.expect(simplex, "dual iterate left the simplex");

  // Determinism across thread counts.
  std::string reference;
  for (int threads : {1, 3}) {
    HyperParams ht = h;
    ht.rounds = 40;
    ht.threads = threads;
    std::ostringstream csv;
    write_csv(csv, run_algorithm(obj, w, q, ht, 9).record);
    if (reference.empty()) {
      reference = csv.str();
    } else {
      f.expect(csv.str() == reference, "record differs with " + std::to_string(threads) + " threads");
    }
  }

  // Gossip-only contraction with identity compression on the complete graph.
  const auto quad = std::make_shared<const QuadraticLosses>(QuadraticLosses::random(5, 3, 1, 2.0, 0.0, 4));
  const RobustObjective qobj = make_objective(quad, RegularizerKind::kChiSquared, 1.0);
  const MixingMatrix complete = metropolis_matrix(build_topology(TopologyKind::kComplete, 5));
  HyperParams hq;
  hq.schedule.eta_theta0 = 0.3;
  hq.gamma = consensus_step_size(complete.rho, 1.0, complete.beta).gamma;
  hq.rounds = 2000;
  Engine gossip(qobj, complete, CompressionSpec::identity(3), hq, 1);
  for (int t = 0; t < 5; ++t) gossip.step();
  gossip.gossip_step();
  const double initial = consensus_error(gossip.thetas());
  double previous = initial;
  bool monotone = true;
  for (int t = 0; t < 600; ++t) {
    gossip.gossip_step();
    const double xi = consensus_error(gossip.thetas());
    monotone = monotone && xi <= previous * (1.0 + 1e-12);
    previous = xi;
  }
  f.expect(initial > 0.0, "gossip fixture starts at consensus");
  f.expect(monotone, "consensus error not monotone under gossip");
  f.expect(previous <= 1e-12 * initial, "consensus error only fell to " + fmt(previous / initial) + " of initial");

  // CHOCO-SGD ignores alpha and sends no dual messages.
  HyperParams hc = h;
  hc.algo = Algorithm::kChocoSgd;
  hc.rounds = 20;
  std::ostringstream a, b;
  write_csv(a, run_algorithm(make_objective(obj.losses, RegularizerKind::kChiSquared, 0.01), w, q, hc, 2).record);
  write_csv(b, run_algorithm(make_objective(obj.losses, RegularizerKind::kChiSquared, 10.0), w, q, hc, 2).record);
  f.expect(a.str() == b.str(), "CHOCO-SGD output depends on alpha");

  const Vec closed = kl_dual_closed_form(Vec{{1.0, 0.0}}, Vec{{0.5, 0.5}}, 1.0);
  f.expect(std::abs(closed(0) - std::exp(1.0) / (1.0 + std::exp(1.0))) <= 1e-12, "KL closed-form dual");
  return f.take();
}

// ------------------------------------------------------------- diagnostics

std::vector<std::string> diagnostics_suite() {
  Failures f;
  const auto quad = std::make_shared<const QuadraticLosses>(QuadraticLosses::random(4, 2, 1, 1.5, 0.0, 8));
  Rng rng = make_stream(41, 0, 0, StreamPurpose::kInit);
  for (RegularizerKind kind : {RegularizerKind::kChiSquared, RegularizerKind::kKullbackLeibler}) {
    const RobustObjective obj = make_objective(quad, kind, 0.5);
    const BestResponseOptions options;
    for (int k = 0; k < 5; ++k) {
      const Vec theta = random_normal(2, rng);
      const Vec losses = quad->full_losses(theta);
      const Vec star = best_response_lambda(obj, losses, options);
      const double step = 1.0 / std::max(1.0, obj.regularizer.smoothness());
      const Vec moved = project_simplex(Vec(star + step * robust_dual_grad(obj, losses, star)));
      f.expect(on_simplex(star, 1e-10), "best response off the simplex");
      f.expect((moved - star).norm() <= 10.0 * options.tol,
               std::string(to_string(kind)) + ": best response not a fixed point, moved " + fmt((moved - star).norm()));
      Vec lambda = (random_normal(4, rng).array().abs() + 0.1).matrix();
      lambda /= lambda.sum();
      const PhiGap pg = phi_and_gap(obj, theta, lambda);
      f.expect(pg.gap >= -2.0 * options.tol, "negative primal-dual gap " + fmt(pg.gap));
    }
  }

  // Consensus bounds on a convex fixture with the worst-case consensus step.
  const auto noisy = std::make_shared<const QuadraticLosses>(QuadraticLosses::random(4, 3, 20, 1.0, 0.5, 9));
  const RobustObjective obj = make_objective(noisy, RegularizerKind::kChiSquared, 1.0);
  const MixingMatrix w = metropolis_matrix(build_topology(TopologyKind::kRing, 4));
  const CompressionSpec q = CompressionSpec::random_quantization(8, 3);
  HyperParams h;
  h.schedule.kind = ScheduleKind::kInvSqrtT;
  h.schedule.eta_theta0 = h.schedule.eta_lambda0 = 1.0;
  h.rounds = 400;
  h.batch = 2;
  const ConsensusStep step = consensus_step_size(w.rho, delta_of(q), w.beta);
  h.gamma = step.gamma;
  const RunOutput out = run_algorithm(obj, w, q, h, 3);
  TheoryParams theory;
  theory.rho = w.rho;
  theory.beta = w.beta;
  theory.delta = delta_of(q);
  theory.gamma = step.gamma;
  theory.c = step.c;
  theory.nodes = 4;
  const BoundReport report = check_consensus_bounds(out.record, theory);
  f.expect(report.theta_violations == 0 && report.lambda_violations == 0, "consensus bound violated on fixture");

  // Group metrics ordering.
  SyntheticSpec spec;
  spec.nodes = 4;
  spec.minority_nodes = 2;
  spec.classes = 3;
  spec.per_node = 40;
  spec.test_per_node = 40;
  const SyntheticData sd = synth_heterogeneous(spec, 6);
  const ModelSpec model{Architecture::kLogistic, sd.test.feature_dim(), sd.test.classes, 4, true};
  for (int k = 0; k < 5; ++k) {
    const Vec theta = random_normal(model.dim(), rng);
    const GroupMetrics g = worst_group_metrics(model, theta, sd.test);
    double lo = 1.0, hi = 0.0, mean = 0.0;
    for (const auto& s : g.per_group) {
      lo = std::min(lo, s.accuracy);
      hi = std::max(hi, s.accuracy);
      mean += s.accuracy / static_cast<double>(g.per_group.size());
    }
    f.expect(g.worst_acc == lo && lo <= mean + 1e-12 && mean <= hi + 1e-12, "group accuracy ordering");
    f.expect(g.avg_acc >= lo - 1e-12 && g.avg_acc <= hi + 1e-12, "pooled accuracy outside [worst, best]");
  }

  std::vector<std::pair<double, double>> pts;
  for (double t : {100.0, 400.0, 1600.0}) pts.emplace_back(t, 3.0 / std::sqrt(t));
  f.expect(std::abs(rate_slope(pts) + 0.5) <= 1e-9, "rate slope of c/sqrt(T)");
  return f.take();
}

// ----------------------------------------------------------------- harness

std::vector<std::string> harness_suite() {
  Failures f;
  const std::vector<KeyValues> inputs = {
      {{"algo", "adgda"}, {"topology.kind", "ring"}, {"topology.nodes", "6"}, {"compression", "quant:8"}},
      {{"algo", "dr_dsgd"},
       {"topology.kind", "torus2d"},
       {"topology.nodes", "6"},
       {"topology.rows", "2"},
       {"topology.cols", "3"},
       {"compression", "topk:0.25"},
       {"regularizer.kind", "kl"},
       {"regularizer.alpha", "0.01"},
       {"run.seeds", "1..3"},
       {"run.gamma", "0.2"}},
      {{"algo", "choco_sgd"},
       {"topology.kind", "custom"},
       {"topology.nodes", "3"},
       {"topology.edges", "0-1,1-2"},
       {"compression", "identity"},
       {"data.kind", "quadratic"},
       {"rates.schedule", "geometric"},
       {"rates.coupling", "theorem2"},
       {"rates.smoothness", "2.5"}},
  };
  for (const auto& kv : inputs) {
    const ExperimentConfig c = parse_config(kv);
    f.expect(parse_config(serialize(c)) == c, "config round trip failed for algo " + kv.at("algo"));
  }
  for (const KeyValues& bad : std::vector<KeyValues>{
           {{"algo", "adgda"}, {"topology.kind", "ring"}, {"topology.nodes", "4"}},
           {{"algo", "adgda"}, {"topology.kind", "torus2d"}, {"topology.nodes", "10"}, {"topology.rows", "3"},
            {"compression", "identity"}},
           {{"algo", "dr_dsgd"}, {"topology.kind", "ring"}, {"topology.nodes", "4"}, {"compression", "identity"}},
           {{"algo", "adgda"}, {"topology.kind", "ring"}, {"topology.nodes", "4"}, {"compression", "identity"},
            {"bogus", "1"}},
           {{"algo", "adgda"}, {"topology.kind", "ring"}, {"topology.nodes", "four"}, {"compression", "identity"}}}) {
    bool threw = false;
    try {
      parse_config(bad);
    } catch (const std::invalid_argument&) {
      threw = true;
    }
    f.expect(threw, "invalid config accepted");
  }

  RunRecord record;
  record.nodes = 2;
  RecordRow row;
  row.t = 10;
  row.node_losses = {0.25, 1.0 / 3.0};
  row.worst_loss = 1.0 / 3.0;
  row.avg_loss = 0.3;
  row.worst_acc = 0.5;
  row.avg_acc = 0.75;
  row.xi_theta = 1e-7;
  row.xi_lambda = 0.0;
  row.lambda_bar = Vec{{0.4, 0.6}};
  row.bits = {123456789012ULL, 7};
  row.eta_theta = 0.995;
  record.rows.push_back(row);
  std::ostringstream first, second;
  write_csv(first, record);
  const auto tmp = std::filesystem::temp_directory_path() / "adgda_check_roundtrip.csv";
  write_csv(tmp, record);
  write_csv(second, read_csv(tmp));
  std::filesystem::remove(tmp);
  f.expect(first.str() == second.str(), "record CSV does not round-trip");
  return f.take();
}

const std::map<std::string, std::function<std::vector<std::string>()>>& suites() {
  static const std::map<std::string, std::function<std::vector<std::string>()>> table = {
      {"topology", topology_suite},   {"compression", compression_suite}, {"objective", objective_suite},
      {"projection", projection_suite}, {"engine", engine_suite},        {"diagnostics", diagnostics_suite},
      {"harness", harness_suite},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& check_suite_names() {
  static const std::vector<std::string> names = {"topology", "compression", "objective", "projection",
                                                 "engine",   "diagnostics", "harness"};
  return names;
}

CheckResult run_check_suite(const std::string& name) {
  const auto it = suites().find(name);
  if (it == suites().end()) throw std::invalid_argument("unknown check suite '" + name + "'");
  CheckResult result;
  result.suite = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    result.failures = it->second();
  } catch (const std::exception& e) {
    result.failures.push_back(std::string("exception: ") + e.what());
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

bool run_checks(std::ostream& out, const std::vector<std::string>& only) {
  const auto& names = only.empty() ? check_suite_names() : only;
  bool ok = true;
  double total = 0.0;
  for (const auto& name : names) {
    const CheckResult r = run_check_suite(name);
    total += r.seconds;
    ok = ok && r.passed();
    out << (r.passed() ? "PASS " : "FAIL ") << std::left << std::setw(12) << r.suite << std::right << std::fixed
        << std::setprecision(2) << std::setw(8) << r.seconds << " s\n"
        << std::defaultfloat;
    for (const auto& failure : r.failures) out << "    " << failure << "\n";
  }
  out << (ok ? "all suites passed" : "some suites failed") << " in " << std::fixed << std::setprecision(2) << total
      << " s\n"
      << std::defaultfloat;
  return ok;
}

}  // namespace adgda
