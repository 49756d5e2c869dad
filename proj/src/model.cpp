#include "adgda/model.hpp"

#include "adgda/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adgda {

namespace {

// Rows per block when scoring large shards.
constexpr Index kBlockRows = 2048;

Mat gather(const FeatureMatrix& features, std::span<const Index> rows) {
  Mat x(static_cast<Index>(rows.size()), features.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x.row(static_cast<Index>(r)) = features.row(rows[r]).cast<double>();
  }
  return x;
}

struct Layout {
  Index w1 = 0, b1 = 0, w2 = 0, b2 = 0;  // offsets
  Index h = 0;
};

Layout layout_of(const ModelSpec& m) {
  Layout l;
  const Index p = m.inputs;
  const Index c = m.classes;
  const Index bias = m.bias ? 1 : 0;
  if (m.arch == Architecture::kLogistic) {
    l.w2 = 0;
    l.b2 = c * p;
  } else {
    l.h = m.hidden;
    l.w1 = 0;
    l.b1 = l.h * p;
    l.w2 = l.b1 + bias * l.h;
    l.b2 = l.w2 + c * l.h;
  }
  return l;
}

// Forward pass; returns logits and keeps hidden activations for backprop.
Mat forward(const ModelSpec& m, const Layout& l, const Vec& theta, const Mat& x, Mat* hidden) {
  const Index c = m.classes;
  if (m.arch == Architecture::kLogistic) {
    Eigen::Map<const Mat> w(theta.data() + l.w2, c, m.inputs);
    Mat z = x * w.transpose();
    if (m.bias) z.rowwise() += Eigen::Map<const Vec>(theta.data() + l.b2, c).transpose();
    return z;
  }
  Eigen::Map<const Mat> w1(theta.data() + l.w1, l.h, m.inputs);
  Eigen::Map<const Mat> w2(theta.data() + l.w2, c, l.h);
  Mat a = x * w1.transpose();
  if (m.bias) a.rowwise() += Eigen::Map<const Vec>(theta.data() + l.b1, l.h).transpose();
  a = a.array().tanh().matrix();
  Mat z = a * w2.transpose();
  if (m.bias) z.rowwise() += Eigen::Map<const Vec>(theta.data() + l.b2, c).transpose();
  if (hidden != nullptr) *hidden = std::move(a);
  return z;
}

// In-place row softmax; returns the summed cross-entropy against `labels`.
double softmax_cross_entropy(Mat& z, const std::vector<int>& labels, std::span<const Index> rows) {
  double total = 0.0;
  for (Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    z.row(r).array() -= mx;
    const double lse = std::log(z.row(r).array().exp().sum());
    const int y = labels[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
    total += lse - z(r, y);
    z.row(r) = (z.row(r).array() - lse).exp().matrix();
  }
  return total;
}

void accumulate_gradient(const ModelSpec& m, const Layout& l, const Vec& theta, const Mat& x,
                         const Mat& hidden, Mat& delta, Vec& grad) {
  const Index c = m.classes;
  if (m.arch == Architecture::kLogistic) {
    Eigen::Map<Mat>(grad.data() + l.w2, c, m.inputs).noalias() += delta.transpose() * x;
    if (m.bias) Eigen::Map<Vec>(grad.data() + l.b2, c) += delta.colwise().sum().transpose();
    return;
  }
  Eigen::Map<const Mat> w2(theta.data() + l.w2, c, l.h);
  Eigen::Map<Mat>(grad.data() + l.w2, c, l.h).noalias() += delta.transpose() * hidden;
  if (m.bias) Eigen::Map<Vec>(grad.data() + l.b2, c) += delta.colwise().sum().transpose();
  Mat dz = (delta * w2).array() * (1.0 - hidden.array().square());
  Eigen::Map<Mat>(grad.data() + l.w1, l.h, m.inputs).noalias() += dz.transpose() * x;
  if (m.bias) Eigen::Map<Vec>(grad.data() + l.b1, l.h) += dz.colwise().sum().transpose();
}

}  // namespace

std::string_view to_string(Architecture arch) {
  return arch == Architecture::kLogistic ? "logistic" : "mlp";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "logistic") return Architecture::kLogistic;
  if (name == "mlp") return Architecture::kMlp;
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

Index ModelSpec::dim() const {
  const Index bias_terms = bias ? 1 : 0;
  if (arch == Architecture::kLogistic) return classes * (inputs + bias_terms);
  return hidden * (inputs + bias_terms) + classes * (hidden + bias_terms);
}

double cross_entropy(const ModelSpec& model, const Vec& theta, const FeatureMatrix& features,
                     const std::vector<int>& labels, std::span<const Index> rows, Vec* grad) {
  if (rows.empty()) throw std::invalid_argument("cross_entropy on an empty batch");
  if (theta.size() != model.dim()) throw std::invalid_argument("parameter dimension mismatch");
  const Layout l = layout_of(model);
  if (grad != nullptr) grad->setZero(model.dim());
  double total = 0.0;
  for (std::size_t start = 0; start < rows.size(); start += kBlockRows) {
    const auto block = rows.subspan(start, std::min<std::size_t>(kBlockRows, rows.size() - start));
    const Mat x = gather(features, block);
    Mat hidden;
    Mat z = forward(model, l, theta, x, grad != nullptr ? &hidden : nullptr);
    total += softmax_cross_entropy(z, labels, block);
    if (grad != nullptr) {
      for (Index r = 0; r < z.rows(); ++r) {
        z(r, labels[static_cast<std::size_t>(block[static_cast<std::size_t>(r)])]) -= 1.0;
      }
      accumulate_gradient(model, l, theta, x, hidden, z, *grad);
    }
  }
  const double n = static_cast<double>(rows.size());
  if (grad != nullptr) *grad /= n;
  return total / n;
}

Mat logits(const ModelSpec& model, const Vec& theta, const FeatureMatrix& features,
           std::span<const Index> rows) {
  return forward(model, layout_of(model), theta, gather(features, rows), nullptr);
}

ShardScore score(const ModelSpec& model, const Vec& theta, const FeatureMatrix& features,
                 const std::vector<int>& labels, std::span<const Index> rows) {
  if (rows.empty()) throw std::invalid_argument("score on an empty shard");
  const Layout l = layout_of(model);
  double loss = 0.0;
  Index correct = 0;
  for (std::size_t start = 0; start < rows.size(); start += kBlockRows) {
    const auto block = rows.subspan(start, std::min<std::size_t>(kBlockRows, rows.size() - start));
    Mat z = forward(model, l, theta, gather(features, block), nullptr);
    for (Index r = 0; r < z.rows(); ++r) {
      Index best = 0;
      z.row(r).maxCoeff(&best);
      if (best == labels[static_cast<std::size_t>(block[static_cast<std::size_t>(r)])]) ++correct;
    }
    loss += softmax_cross_entropy(z, labels, block);
  }
  const double n = static_cast<double>(rows.size());
  return {loss / n, static_cast<double>(correct) / n, static_cast<Index>(rows.size())};
}

}  // namespace adgda
