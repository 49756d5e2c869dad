#pragma once

#include "adgda/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace adgda {

// Row-major sample storage; float halves the footprint of image data and
// every computation promotes to double.
using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
  FeatureMatrix features;  // n x p
  std::vector<int> labels;
  int classes = 0;

  // Node assignment, empty until partitioned.
  std::vector<int> shard_of;
  std::vector<std::vector<Index>> shards;

  // Evaluation group per sample; empty means "group by node".
  std::vector<int> group;
  int groups = 0;

  Index size() const { return features.rows(); }
  Index feature_dim() const { return features.cols(); }
  int nodes() const { return static_cast<int>(shards.size()); }

  // Empirical node weights p_i = n_i / n.
  Vec node_weights() const;

  // Rebuilds `shards` from `shard_of`. Throws when a node ends up empty.
  void assign_shards(std::vector<int> shard_of, int nodes);

  // Sample indices per evaluation group (by node when `group` is empty).
  std::vector<std::vector<Index>> evaluation_shards() const;
};

// Reads an IDX image/label pair (magic 0x00000803 / 0x00000801, big-endian
// dimensions). Pixels are scaled to [0, 1]; labels must lie in [0, classes).
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 int classes = 10);

/// Class-wise split: with C >= m node i holds every class c with c mod m == i
/// (exactly class i when C == m); with C < m class c is divided evenly among
/// the nodes i with i mod C == c. A placement seed permutes which node receives
/// which slot. Evaluation groups are set to the owning node.
Dataset partition_classwise(Dataset data, int nodes,
                            std::optional<std::uint64_t> placement_seed = std::nullopt);

// Node owning each class slot under the given placement, used to split a test
// set consistently with its training set.
std::vector<int> classwise_slot_nodes(int nodes, std::optional<std::uint64_t> placement_seed);

struct SyntheticSpec {
  int nodes = 10;
  int minority_nodes = 2;  // trailing nodes drawn from the shifted group
  int classes = 4;
  int core_dims = 4;
  int spurious_dims = 4;
  double core_separation = 1.0;
  double shift = 3.0;
  double noise = 1.0;
  Index per_node = 200;
  Index test_per_node = 200;

  bool operator==(const SyntheticSpec&) const = default;
};

struct SyntheticData {
  Dataset train;
  Dataset test;
  std::vector<int> class_permutation;  // spurious-mean relabelling of the minority group
};

/// Gaussian class-conditional data on two groups. Both groups share the
/// class means on the core coordinates. On the spurious coordinates the
/// majority group uses means shift * s_c while the minority group uses
/// shift * s_{pi(c)} for a seeded random permutation pi, so a classifier that
/// leans on the spurious coordinates transfers at chance level. shift = 0
/// makes all nodes i.i.d. Group 0 is the majority, group 1 the minority.
SyntheticData synth_heterogeneous(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace adgda
