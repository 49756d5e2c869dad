#include "adgda/losses.hpp"
#include "adgda/objective.hpp"
#include "adgda/regularizer.hpp"
#include "adgda/rng.hpp"
#include "adgda/simplex.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace adgda;

namespace {

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-5) {
  Vec g(x.size());
  Vec y = x;
  for (Index i = 0; i < x.size(); ++i) {
    y(i) = x(i) + h;
    const double up = f(y);
    y(i) = x(i) - h;
    g(i) = (up - f(y)) / (2 * h);
    y(i) = x(i);
  }
  return g;
}

// Brute-force simplex projection for m = 2 or 3: grid over the simplex at
// resolution `step`, then a local refinement.
Vec grid_projection(const Vec& v, double step) {
  const Index m = v.size();
  Vec best;
  double best_d = 1e300;
  const int n = static_cast<int>(std::round(1.0 / step));
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; b <= (m == 3 ? n - a : 0); ++b) {
      Vec x(m);
      if (m == 2) {
        x << a * step, 1.0 - a * step;
      } else {
        x << a * step, b * step, 1.0 - (a + b) * step;
      }
      const double d = (x - v).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = x;
      }
    }
  }
  return best;
}

std::shared_ptr<const Dataset> fixture() {
  auto d = std::make_shared<Dataset>();
  d->features.resize(6, 2);
  d->features << 1, 0,
                 0, 1,
                 1, 1,
                 -1, 0,
                 0, -1,
                 -1, -1;
  d->labels = {0, 1, 2, 0, 1, 2};
  d->classes = 3;
  d->assign_shards({0, 0, 0, 1, 1, 1}, 2);
  return d;
}

}  // namespace

TEST(Regularizer, ChiSquaredExample) {
  const Regularizer reg{RegularizerKind::kChiSquared, 1.0, Vec{{0.5, 0.5}}};
  const Vec lambda{{0.75, 0.25}};
  EXPECT_DOUBLE_EQ(reg.value(lambda), -0.25);
  EXPECT_LE((reg.gradient(lambda) - fd_gradient([&](const Vec& l) { return reg.value(l); }, lambda)).norm(), 1e-8);
}

TEST(Regularizer, ZeroAtReference) {
  const Vec p{{0.2, 0.3, 0.5}};
  const Regularizer chi{RegularizerKind::kChiSquared, 1.0, p};
  EXPECT_EQ(chi.value(p), 0.0);
  EXPECT_EQ(chi.gradient(p), Vec::Zero(3));
  const Regularizer kl{RegularizerKind::kKullbackLeibler, 1.0, p};
  EXPECT_NEAR(kl.value(p), 0.0, 1e-15);
  const Vec g = kl.gradient(p);
  // Normal to the simplex: no tangential component.
  EXPECT_LE((g.array() - g.mean()).abs().maxCoeff(), 1e-15);
}

TEST(Regularizer, KlGradientInterior) {
  const Vec p{{0.1, 0.6, 0.3}};
  const Regularizer kl{RegularizerKind::kKullbackLeibler, 1.0, p};
  const Vec lambda{{0.3, 0.3, 0.4}};
  const Vec fd = fd_gradient([&](const Vec& l) { return kl.value(l); }, lambda);
  EXPECT_LE((kl.gradient(lambda) - fd).norm() / fd.norm(), 1e-8);
}

TEST(Regularizer, KlClampsAtBoundary) {
  const Regularizer kl{RegularizerKind::kKullbackLeibler, 1.0, Vec{{0.5, 0.5}}};
  const Vec corner{{1.0, 0.0}};
  EXPECT_TRUE(std::isfinite(kl.value(corner)));
  EXPECT_TRUE(kl.gradient(corner).allFinite());
}

TEST(Regularizer, ConcaveAlongSegments) {
  const Vec p{{0.25, 0.25, 0.5}};
  for (auto kind : {RegularizerKind::kChiSquared, RegularizerKind::kKullbackLeibler}) {
    const Regularizer reg{kind, 1.0, p};
    const Vec a{{0.7, 0.2, 0.1}}, b{{0.1, 0.1, 0.8}};
    EXPECT_GE(reg.value(Vec(0.5 * (a + b))), 0.5 * (reg.value(a) + reg.value(b)));
  }
}

TEST(Projection, Examples) {
  EXPECT_LE((project_simplex(Vec{{0.2, 0.3, 0.5}}) - Vec{{0.2, 0.3, 0.5}}).norm(), 1e-15);
  EXPECT_LE((project_simplex(Vec{{2.0, 0.0}}) - Vec{{1.0, 0.0}}).norm(), 1e-15);
  EXPECT_LE((project_simplex(Vec{{0.6, 0.6}}) - Vec{{0.5, 0.5}}).norm(), 1e-15);
  EXPECT_LE((grid_projection(Vec{{2.0, 0.0}}, 1e-4) - Vec{{1.0, 0.0}}).norm(), 1e-4);
  EXPECT_LE((grid_projection(Vec{{0.6, 0.6}}, 1e-4) - Vec{{0.5, 0.5}}).norm(), 1e-4);
}

TEST(Projection, MatchesGridOracle) {
  Rng rng(17);
  for (int k = 0; k < 20; ++k) {
    const Index m = 2 + static_cast<Index>(k % 2);
    Vec v(m);
    for (Index i = 0; i < m; ++i) v(i) = 1.5 * standard_normal(rng);
    const Vec x = project_simplex(v);
    const Vec g = grid_projection(v, m == 2 ? 1e-4 : 2e-3);
    EXPECT_LE((x - v).squaredNorm(), (g - v).squaredNorm() + 1e-12);
    EXPECT_LE((x - g).cwiseAbs().maxCoeff(), m == 2 ? 1e-4 : 2e-3);
  }
}

TEST(Projection, FeasibleAndIdempotent) {
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    Vec v(1 + k % 7);
    for (Index i = 0; i < v.size(); ++i) v(i) = 10.0 * standard_normal(rng);
    const Vec x = project_simplex(v);
    EXPECT_TRUE(on_simplex(x, 1e-12));
    EXPECT_LE((project_simplex(x) - x).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Losses, LogisticAtZeroIsLogC) {
  const ModelSpec model{Architecture::kLogistic, 2, 3, 25, true};
  ClassificationLosses losses(fixture(), model);
  EXPECT_NEAR(losses.full_loss_grad(0, Vec::Zero(model.dim()), nullptr), std::log(3.0), 1e-12);
}

TEST(Losses, PerfectSeparationDrivesLossToZero) {
  auto d = std::make_shared<Dataset>();
  d->features.resize(4, 1);
  d->features << 1, 2, -1, -2;
  d->labels = {1, 1, 0, 0};
  d->classes = 2;
  d->assign_shards({0, 0, 0, 0}, 1);
  const ModelSpec model{Architecture::kLogistic, 1, 2, 25, false};
  ClassificationLosses losses(d, model);
  Vec theta(2);
  theta << -1.0, 1.0;
  const double small = losses.full_loss_grad(0, Vec(theta), nullptr);
  const double tiny = losses.full_loss_grad(0, Vec(30.0 * theta), nullptr);
  EXPECT_LT(tiny, small);
  EXPECT_LT(tiny, 1e-20);
}

TEST(Losses, LogisticMatchesNaive) {
  const auto data = fixture();
  const ModelSpec model{Architecture::kLogistic, 2, 3, 25, true};
  ClassificationLosses losses(data, model);
  Rng rng(8);
  Vec theta(model.dim());
  for (Index i = 0; i < theta.size(); ++i) theta(i) = standard_normal(rng);
  // Packing: W is 3x2 column-major, then b.
  double naive = 0.0;
  for (Index r : data->shards[1]) {
    double z[3], mx = -1e300, sum = 0.0;
    for (int c = 0; c < 3; ++c) {
      z[c] = theta(6 + c);
      for (int j = 0; j < 2; ++j) z[c] += theta(j * 3 + c) * data->features(r, j);
      mx = std::max(mx, z[c]);
    }
    for (double v : z) sum += std::exp(v - mx);
    naive += -(z[data->labels[static_cast<std::size_t>(r)]] - mx - std::log(sum));
  }
  naive /= 3.0;
  EXPECT_NEAR(losses.full_loss_grad(1, theta, nullptr), naive, 1e-12);
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  const auto data = fixture();
  Rng rng(2);
  for (auto arch : {Architecture::kLogistic, Architecture::kMlp}) {
    const ModelSpec model{arch, 2, 3, 5, true};
    ClassificationLosses losses(data, model);
    for (int k = 0; k < 5; ++k) {
      Vec theta(model.dim());
      for (Index i = 0; i < theta.size(); ++i) theta(i) = standard_normal(rng);
      const std::vector<Index> batch = {0, 2, 2};
      Vec grad;
      losses.loss_grad(0, theta, batch, &grad);
      const Vec fd = fd_gradient([&](const Vec& t) { return losses.local_loss(0, t, batch); }, theta);
      EXPECT_LE((grad - fd).norm() / std::max(1e-8, fd.norm()), 1e-6) << to_string(arch);
    }
  }
}

TEST(Losses, EmptyBatchRejected) {
  ClassificationLosses losses(fixture(), ModelSpec{Architecture::kLogistic, 2, 3, 25, true});
  EXPECT_THROW(losses.local_loss(0, Vec::Zero(9), {}), std::invalid_argument);
}

TEST(Losses, QuadraticExact) {
  Mat a(2, 1), b(2, 2);
  a << 1, 2;
  b << 0, 2, 0, 0;
  QuadraticLosses q({a, b});
  const Vec theta{{1.0, 1.0}};
  EXPECT_DOUBLE_EQ(q.full_loss_grad(0, theta, nullptr), 0.5);
  // mean of 0.5 (1 + 1) and 0.5 (1 + 1) over the two points
  Vec grad;
  EXPECT_DOUBLE_EQ(q.full_loss_grad(1, theta, &grad), 1.0);
  EXPECT_LE((grad - Vec{{0.0, 1.0}}).norm(), 1e-15);
  const std::vector<Index> all = {0, 1};
  EXPECT_DOUBLE_EQ(q.local_loss(1, theta, all), 1.0);
}

TEST(Oracles, PrimalScalesByOwnCoordinate) {
  const auto data = fixture();
  const auto losses = std::make_shared<const ClassificationLosses>(data, ModelSpec{Architecture::kLogistic, 2, 3, 25, true});
  const RobustObjective obj = make_objective(losses, RegularizerKind::kChiSquared, 1.0);
  const Vec theta = Vec::LinSpaced(9, -1.0, 1.0);
  const std::vector<Index> one = {1};
  EXPECT_EQ(primal_stoch_grad(obj, 0, theta, Vec{{0.0, 1.0}}, one), Vec::Zero(9));
  Vec plain;
  losses->loss_grad(0, theta, one, &plain);
  EXPECT_LE((primal_stoch_grad(obj, 0, theta, Vec{{1.0, 0.0}}, one) - plain).norm(), 1e-15);
}

TEST(Oracles, DualWithoutRegularizer) {
  const auto losses = std::make_shared<const ClassificationLosses>(fixture(), ModelSpec{Architecture::kLogistic, 2, 3, 25, true});
  const RobustObjective obj = make_objective(losses, RegularizerKind::kChiSquared, 0.0);
  const std::vector<Index> batch = {0, 1};
  const Vec g = dual_stoch_grad(obj, 1, Vec::Zero(9), Vec{{0.3, 0.7}}, batch);
  EXPECT_EQ(g(0), 0.0);
  EXPECT_NEAR(g(1), std::log(3.0), 1e-12);
  const RobustObjective chi = make_objective(losses, RegularizerKind::kChiSquared, 5.0);
  const Vec at_p = dual_stoch_grad(chi, 0, Vec::Zero(9), chi.regularizer.reference, batch);
  EXPECT_NEAR(at_p(1), 0.0, 1e-15);
}

TEST(Oracles, AssemblyReproducesObjective) {
  const auto losses = std::make_shared<const ClassificationLosses>(fixture(), ModelSpec{Architecture::kMlp, 2, 3, 4, true});
  const RobustObjective obj = make_objective(losses, RegularizerKind::kKullbackLeibler, 0.4);
  const Vec theta = Vec::LinSpaced(losses->dim(), -0.5, 0.5);
  const Vec lambda{{0.35, 0.65}};
  double sum = 0.0;
  for (int i = 0; i < 2; ++i) sum += node_objective(obj, i, theta, lambda);
  const Vec f = losses->full_losses(theta);
  EXPECT_NEAR(sum / 2, robust_value(obj, theta, lambda), 1e-12);
  EXPECT_NEAR(lambda.dot(f) / 2 + 0.4 * obj.regularizer.value(lambda), robust_value(obj, theta, lambda), 1e-12);
}
