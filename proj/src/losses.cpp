#include "adgda/losses.hpp"

#include "adgda/errors.hpp"

#include <numeric>
#include <stdexcept>

namespace adgda {

double LocalLosses::full_loss_grad(int node, const Vec& theta, Vec* grad) const {
  std::vector<Index> all(static_cast<std::size_t>(shard_size(node)));
  std::iota(all.begin(), all.end(), Index{0});
  return loss_grad(node, theta, all, grad);
}

Vec LocalLosses::node_weights() const {
  Vec p(nodes());
  for (int i = 0; i < nodes(); ++i) p(i) = static_cast<double>(shard_size(i));
  return p / p.sum();
}

Vec LocalLosses::full_losses(const Vec& theta) const {
  Vec f(nodes());
  for (int i = 0; i < nodes(); ++i) f(i) = full_loss_grad(i, theta, nullptr);
  return f;
}

void sample_batch(Index shard_size, Index batch, Rng& rng, std::vector<Index>& out) {
  out.resize(static_cast<std::size_t>(batch));
  for (auto& idx : out) idx = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(shard_size)));
}

ClassificationLosses::ClassificationLosses(std::shared_ptr<const Dataset> data, ModelSpec model)
    : data_(std::move(data)), model_(model) {
  if (!data_ || data_->shards.empty()) throw ConfigError("classification losses need a partitioned dataset");
  if (model_.inputs != data_->feature_dim() || model_.classes != data_->classes) {
    throw ConfigError("model shape does not match the dataset");
  }
}

Index ClassificationLosses::shard_size(int node) const {
  return static_cast<Index>(data_->shards[static_cast<std::size_t>(node)].size());
}

double ClassificationLosses::loss_grad(int node, const Vec& theta, Batch batch, Vec* grad) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto& shard = data_->shards[static_cast<std::size_t>(node)];
  std::vector<Index> rows(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) rows[k] = shard[static_cast<std::size_t>(batch[k])];
  return cross_entropy(model_, theta, data_->features, data_->labels, rows, grad);
}

double ClassificationLosses::full_loss_grad(int node, const Vec& theta, Vec* grad) const {
  return cross_entropy(model_, theta, data_->features, data_->labels,
                       data_->shards[static_cast<std::size_t>(node)], grad);
}

QuadraticLosses::QuadraticLosses(std::vector<Mat> points) : points_(std::move(points)) {
  if (points_.empty()) throw ConfigError("quadratic losses need at least one node");
  const Index d = points_.front().rows();
  means_.resize(d, static_cast<Index>(points_.size()));
  spreads_.resize(static_cast<Index>(points_.size()));
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Mat& z = points_[i];
    if (z.rows() != d || z.cols() < 1) throw ConfigError("quadratic shard shape mismatch");
    means_.col(static_cast<Index>(i)) = z.rowwise().mean();
    spreads_(static_cast<Index>(i)) =
        0.5 * (z.colwise() - means_.col(static_cast<Index>(i))).colwise().squaredNorm().mean();
  }
}

QuadraticLosses QuadraticLosses::random(int nodes, Index dim, Index samples_per_node, double spread,
                                        double noise, std::uint64_t seed) {
  std::vector<Mat> points;
  for (int i = 0; i < nodes; ++i) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(i), 0, StreamPurpose::kDataGeneration);
    Vec anchor(dim);
    for (Index j = 0; j < dim; ++j) anchor(j) = spread * standard_normal(rng);
    Mat z(dim, samples_per_node);
    for (Index k = 0; k < samples_per_node; ++k)
      for (Index j = 0; j < dim; ++j) z(j, k) = anchor(j) + noise * standard_normal(rng);
    points.push_back(std::move(z));
  }
  return QuadraticLosses(std::move(points));
}

double QuadraticLosses::loss_grad(int node, const Vec& theta, Batch batch, Vec* grad) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const Mat& z = points_[static_cast<std::size_t>(node)];
  double total = 0.0;
  if (grad != nullptr) grad->setZero(theta.size());
  for (Index k : batch) {
    const Vec diff = theta - z.col(k);
    total += 0.5 * diff.squaredNorm();
    if (grad != nullptr) *grad += diff;
  }
  const double n = static_cast<double>(batch.size());
  if (grad != nullptr) *grad /= n;
  return total / n;
}

double QuadraticLosses::full_loss_grad(int node, const Vec& theta, Vec* grad) const {
  const Vec diff = theta - means_.col(node);
  if (grad != nullptr) *grad = diff;
  return 0.5 * diff.squaredNorm() + spreads_(node);
}

}  // namespace adgda
