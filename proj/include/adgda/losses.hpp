#pragma once

#include "adgda/dataset.hpp"
#include "adgda/model.hpp"
#include "adgda/rng.hpp"
#include "adgda/types.hpp"

#include <memory>
#include <vector>

namespace adgda {

// Local empirical risks f_i and their minibatch oracles. Batches index into
// the node's own shard (0 .. shard_size(i) - 1).
class LocalLosses {
 public:
  virtual ~LocalLosses() = default;

  virtual int nodes() const = 0;
  virtual Index dim() const = 0;
  virtual Index shard_size(int node) const = 0;

  // Mean loss over the batch; fills `grad` with its gradient when non-null.
  virtual double loss_grad(int node, const Vec& theta, Batch batch, Vec* grad) const = 0;

  virtual double full_loss_grad(int node, const Vec& theta, Vec* grad) const;

  // Empirical node weights p_i = n_i / n.
  virtual Vec node_weights() const;

  double local_loss(int node, const Vec& theta, Batch batch) const {
    return loss_grad(node, theta, batch, nullptr);
  }
  Vec full_losses(const Vec& theta) const;
};

// Uniform sampling with replacement within a shard of `shard_size` samples.
void sample_batch(Index shard_size, Index batch, Rng& rng, std::vector<Index>& out);

class ClassificationLosses final : public LocalLosses {
 public:
  ClassificationLosses(std::shared_ptr<const Dataset> data, ModelSpec model);

  int nodes() const override { return data_->nodes(); }
  Index dim() const override { return model_.dim(); }
  Index shard_size(int node) const override;
  double loss_grad(int node, const Vec& theta, Batch batch, Vec* grad) const override;
  double full_loss_grad(int node, const Vec& theta, Vec* grad) const override;
  Vec node_weights() const override { return data_->node_weights(); }

  const Dataset& data() const { return *data_; }
  const ModelSpec& model() const { return model_; }

 private:
  std::shared_ptr<const Dataset> data_;
  ModelSpec model_;
};

/// f_i(theta) = mean_k 0.5 ||theta - z_ik||^2 over node i's sample points.
/// With one point per node this is 0.5 ||theta - a_i||^2 and the minibatch
/// oracle is exact.
class QuadraticLosses final : public LocalLosses {
 public:
  // points[i] is d x n_i.
  explicit QuadraticLosses(std::vector<Mat> points);

  // Points a_i + noise * N(0, I); the anchors a_i ~ spread * N(0, I).
  static QuadraticLosses random(int nodes, Index dim, Index samples_per_node, double spread,
                                double noise, std::uint64_t seed);

  int nodes() const override { return static_cast<int>(points_.size()); }
  Index dim() const override { return points_.front().rows(); }
  Index shard_size(int node) const override { return points_[static_cast<std::size_t>(node)].cols(); }
  double loss_grad(int node, const Vec& theta, Batch batch, Vec* grad) const override;
  double full_loss_grad(int node, const Vec& theta, Vec* grad) const override;

  // Shard means a_i; f_i = 0.5 ||theta - a_i||^2 + spread_i.
  Vec mean(int node) const { return means_.col(node); }
  const Mat& means() const { return means_; }
  double spread(int node) const { return spreads_(node); }

 private:
  std::vector<Mat> points_;
  Mat means_;
  Vec spreads_;
};

}  // namespace adgda
