#include "adgda/dataset.hpp"

#include "adgda/errors.hpp"
#include "adgda/rng.hpp"

#include <numeric>
#include <string>

namespace adgda {

Vec Dataset::node_weights() const {
  Vec p(static_cast<Index>(shards.size()));
  const double n = static_cast<double>(size());
  for (std::size_t i = 0; i < shards.size(); ++i) {
    p(static_cast<Index>(i)) = static_cast<double>(shards[i].size()) / n;
  }
  return p;
}

void Dataset::assign_shards(std::vector<int> assignment, int nodes) {
  if (static_cast<Index>(assignment.size()) != size()) {
    throw ConfigError("shard assignment size does not match the dataset");
  }
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(nodes));
  for (std::size_t s = 0; s < assignment.size(); ++s) {
    const int node = assignment[s];
    if (node < 0 || node >= nodes) throw ConfigError("shard assignment out of range");
    out[static_cast<std::size_t>(node)].push_back(static_cast<Index>(s));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].empty()) throw ConfigError("node " + std::to_string(i) + " received no samples");
  }
  shard_of = std::move(assignment);
  shards = std::move(out);
}

std::vector<std::vector<Index>> Dataset::evaluation_shards() const {
  if (group.empty()) return shards;
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(groups));
  for (std::size_t s = 0; s < group.size(); ++s) {
    out[static_cast<std::size_t>(group[s])].push_back(static_cast<Index>(s));
  }
  return out;
}

std::vector<int> classwise_slot_nodes(int nodes, std::optional<std::uint64_t> placement_seed) {
  std::vector<int> slot_node(static_cast<std::size_t>(nodes));
  std::iota(slot_node.begin(), slot_node.end(), 0);
  if (placement_seed) {
    Rng rng = make_stream(*placement_seed, 0, 0, StreamPurpose::kPlacement);
    for (std::size_t i = slot_node.size(); i > 1; --i) {
      std::swap(slot_node[i - 1], slot_node[uniform_index(rng, i)]);
    }
  }
  return slot_node;
}

Dataset partition_classwise(Dataset data, int nodes, std::optional<std::uint64_t> placement_seed) {
  if (nodes < 1) throw ConfigError("partition needs at least one node");
  const int classes = data.classes;
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(classes));
  for (std::size_t s = 0; s < data.labels.size(); ++s) {
    by_class[static_cast<std::size_t>(data.labels[s])].push_back(static_cast<Index>(s));
  }
  for (int c = 0; c < classes; ++c) {
    if (by_class[static_cast<std::size_t>(c)].empty()) {
      throw ConfigError("class " + std::to_string(c) + " has no samples");
    }
  }
  const auto slot_node = classwise_slot_nodes(nodes, placement_seed);
  std::vector<int> assignment(data.labels.size(), -1);
  if (classes >= nodes) {
    for (int c = 0; c < classes; ++c) {
      const int node = slot_node[static_cast<std::size_t>(c % nodes)];
      for (Index s : by_class[static_cast<std::size_t>(c)]) assignment[static_cast<std::size_t>(s)] = node;
    }
  } else {
    for (int c = 0; c < classes; ++c) {
      std::vector<int> holders;
      for (int slot = c; slot < nodes; slot += classes) holders.push_back(slot_node[static_cast<std::size_t>(slot)]);
      const auto& members = by_class[static_cast<std::size_t>(c)];
      for (std::size_t k = 0; k < members.size(); ++k) {
        assignment[static_cast<std::size_t>(members[k])] = holders[k % holders.size()];
      }
    }
  }
  data.assign_shards(std::move(assignment), nodes);
  data.group = data.shard_of;
  data.groups = nodes;
  return data;
}

SyntheticData synth_heterogeneous(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.nodes < 2) throw ConfigError("synthetic data needs at least 2 nodes");
  if (spec.minority_nodes < 0 || spec.minority_nodes >= spec.nodes) {
    throw ConfigError("minority node count must be in [0, nodes)");
  }
  if (spec.classes < 2 || spec.core_dims < 1 || spec.spurious_dims < 0 || spec.per_node < 1 ||
      spec.test_per_node < 1) {
    throw ConfigError("invalid synthetic data parameters");
  }
  const int p = spec.core_dims + spec.spurious_dims;
  const auto classes = static_cast<std::size_t>(spec.classes);

  Rng meta = make_stream(seed, UINT64_MAX, 0, StreamPurpose::kDataGeneration);
  Mat core_means(spec.classes, spec.core_dims);
  Mat spurious_means(spec.classes, spec.spurious_dims);
  for (Index c = 0; c < core_means.rows(); ++c) {
    for (Index j = 0; j < core_means.cols(); ++j) core_means(c, j) = spec.core_separation * standard_normal(meta);
    for (Index j = 0; j < spurious_means.cols(); ++j) spurious_means(c, j) = standard_normal(meta);
  }
  std::vector<int> perm(classes);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(meta, i)]);

  const auto generate = [&](Index per_node, std::uint64_t round) {
    Dataset d;
    d.classes = spec.classes;
    d.groups = spec.minority_nodes > 0 ? 2 : 1;
    const Index n = per_node * spec.nodes;
    d.features.resize(n, p);
    d.labels.resize(static_cast<std::size_t>(n));
    d.group.resize(static_cast<std::size_t>(n));
    std::vector<int> assignment(static_cast<std::size_t>(n));
    Index row = 0;
    for (int node = 0; node < spec.nodes; ++node) {
      const bool minority = node >= spec.nodes - spec.minority_nodes;
      Rng rng = make_stream(seed, static_cast<std::uint64_t>(node), round, StreamPurpose::kDataGeneration);
      for (Index k = 0; k < per_node; ++k, ++row) {
        const int label = static_cast<int>(k % spec.classes);
        const int spurious_class = minority ? perm[static_cast<std::size_t>(label)] : label;
        for (int j = 0; j < spec.core_dims; ++j) {
          d.features(row, j) = static_cast<float>(core_means(label, j) + spec.noise * standard_normal(rng));
        }
        for (int j = 0; j < spec.spurious_dims; ++j) {
          d.features(row, spec.core_dims + j) = static_cast<float>(
              spec.shift * spurious_means(spurious_class, j) + spec.noise * standard_normal(rng));
        }
        d.labels[static_cast<std::size_t>(row)] = label;
        d.group[static_cast<std::size_t>(row)] = minority ? 1 : 0;
        assignment[static_cast<std::size_t>(row)] = node;
      }
    }
    d.assign_shards(std::move(assignment), spec.nodes);
    return d;
  };

  SyntheticData out;
  out.train = generate(spec.per_node, 0);
  out.test = generate(spec.test_per_node, 1);
  out.class_permutation = std::move(perm);
  return out;
}

}  // namespace adgda
