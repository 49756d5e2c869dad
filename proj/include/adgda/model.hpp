#pragma once

#include "adgda/dataset.hpp"
#include "adgda/types.hpp"

#include <string_view>
#include <vector>

namespace adgda {

enum class Architecture { kLogistic, kMlp };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

// Softmax classifier, either linear (multinomial logistic regression) or with
// one tanh hidden layer. Parameters are packed as [W1 | b1 | W2 | b2] with
// column-major weight blocks; bias blocks are absent when `bias` is false.
struct ModelSpec {
  Architecture arch = Architecture::kLogistic;
  Index inputs = 0;
  int classes = 0;
  int hidden = 25;
  bool bias = true;

  Index dim() const;
};

/// Mean cross-entropy over the selected rows. When `grad` is non-null it is
/// resized to dim() and receives the gradient of that mean.
double cross_entropy(const ModelSpec& model, const Vec& theta, const FeatureMatrix& features,
                     const std::vector<int>& labels, std::span<const Index> rows, Vec* grad);

// Class logits for the selected rows, one row per sample.
Mat logits(const ModelSpec& model, const Vec& theta, const FeatureMatrix& features,
           std::span<const Index> rows);

struct ShardScore {
  double loss = 0.0;
  double accuracy = 0.0;
  Index count = 0;
};

// Loss and accuracy on the selected rows. Ties in argmax go to the lower class.
ShardScore score(const ModelSpec& model, const Vec& theta, const FeatureMatrix& features,
                 const std::vector<int>& labels, std::span<const Index> rows);

}  // namespace adgda
