#include "adgda/dataset.hpp"
#include "adgda/diagnostics.hpp"
#include "adgda/errors.hpp"
#include "adgda/model.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>

using namespace adgda;

namespace {

namespace fs = std::filesystem;

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<unsigned char>(v >> s));
}

fs::path write_bytes(const std::string& name, const std::vector<unsigned char>& bytes) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return path;
}

// Four 2x3 images with pixel value 10*k + j and labels {3, 0, 9, 1}.
struct IdxFixture {
  fs::path images, labels;
  IdxFixture(std::uint32_t label_magic = 0x801, unsigned char last_label = 1, std::size_t drop = 0) {
    std::vector<unsigned char> img;
    put_be32(img, 0x803);
    put_be32(img, 4);
    put_be32(img, 2);
    put_be32(img, 3);
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j < 6; ++j) img.push_back(static_cast<unsigned char>(10 * k + j));
    img.resize(img.size() - drop);
    std::vector<unsigned char> lab;
    put_be32(lab, label_magic);
    put_be32(lab, 4);
    for (unsigned char l : {3, 0, 9}) lab.push_back(l);
    lab.push_back(last_label);
    images = write_bytes("adgda_fixture_images.idx", img);
    labels = write_bytes("adgda_fixture_labels.idx", lab);
  }
  ~IdxFixture() {
    fs::remove(images);
    fs::remove(labels);
  }
};

Dataset labelled(std::vector<int> labels, int classes) {
  Dataset d;
  d.features = FeatureMatrix::Zero(static_cast<Index>(labels.size()), 1);
  d.labels = std::move(labels);
  d.classes = classes;
  return d;
}

}  // namespace

TEST(Idx, RoundTrip) {
  IdxFixture fx;
  const Dataset d = load_idx(fx.images, fx.labels, 10);
  ASSERT_EQ(d.size(), 4);
  ASSERT_EQ(d.feature_dim(), 6);
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 6; ++j) EXPECT_EQ(d.features(k, j), static_cast<float>(10 * k + j) / 255.0f);
  EXPECT_EQ(d.labels, (std::vector<int>{3, 0, 9, 1}));
  EXPECT_EQ(d.classes, 10);
}

TEST(Idx, Errors) {
  {
    IdxFixture fx(0x802);
    EXPECT_THROW(load_idx(fx.images, fx.labels), IoError);
  }
  {
    IdxFixture fx(0x801, 255);
    EXPECT_THROW(load_idx(fx.images, fx.labels), IoError);
  }
  {
    IdxFixture fx(0x801, 1, 5);
    EXPECT_THROW(load_idx(fx.images, fx.labels), IoError);
  }
  const fs::path empty = write_bytes("adgda_empty.idx", {});
  IdxFixture fx;
  EXPECT_THROW(load_idx(empty, fx.labels), IoError);
  fs::remove(empty);
  EXPECT_THROW(load_idx("/nonexistent/images", fx.labels), IoError);
}

TEST(Idx, CountMismatch) {
  IdxFixture fx;
  std::vector<unsigned char> lab;
  put_be32(lab, 0x801);
  put_be32(lab, 3);
  lab.insert(lab.end(), {1, 2, 3});
  const fs::path labels = write_bytes("adgda_short_labels.idx", lab);
  EXPECT_THROW(load_idx(fx.images, labels), IoError);
  fs::remove(labels);
}

TEST(Partition, TenClassesTenNodes) {
  std::vector<int> labels;
  for (int k = 0; k < 100; ++k) labels.push_back(k % 10);
  const Dataset d = partition_classwise(labelled(labels, 10), 10);
  for (std::size_t s = 0; s < labels.size(); ++s) EXPECT_EQ(d.shard_of[s], labels[s]);
  EXPECT_LE((d.node_weights() - Vec::Constant(10, 0.1)).norm(), 1e-15);
}

TEST(Partition, RandomPlacementIsAPermutation) {
  std::vector<int> labels;
  for (int k = 0; k < 50; ++k) labels.push_back(k % 5);
  const Dataset a = partition_classwise(labelled(labels, 5), 5, 42);
  const Dataset b = partition_classwise(labelled(labels, 5), 5, 42);
  EXPECT_EQ(a.shard_of, b.shard_of);
  std::vector<int> owner(5, -1);
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const int c = labels[s];
    if (owner[static_cast<std::size_t>(c)] < 0) owner[static_cast<std::size_t>(c)] = a.shard_of[s];
    EXPECT_EQ(owner[static_cast<std::size_t>(c)], a.shard_of[s]);
  }
  std::vector<int> sorted = owner;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Partition, TwoClassesTwoNodesBalanced) {
  const Dataset d = partition_classwise(labelled({0, 1, 0, 1}, 2), 2);
  EXPECT_LE((d.node_weights() - Vec{{0.5, 0.5}}).norm(), 1e-15);
}

TEST(Partition, SingleNode) {
  const Dataset d = partition_classwise(labelled({0, 1, 1}, 2), 1);
  EXPECT_EQ(d.nodes(), 1);
  EXPECT_DOUBLE_EQ(d.node_weights()(0), 1.0);
}

TEST(Partition, FewerClassesThanNodes) {
  std::vector<int> labels;
  for (int k = 0; k < 40; ++k) labels.push_back(k % 2);
  const Dataset d = partition_classwise(labelled(labels, 2), 4);
  for (std::size_t s = 0; s < labels.size(); ++s) EXPECT_EQ(d.shard_of[s] % 2, labels[s]);
  EXPECT_LE((d.node_weights() - Vec::Constant(4, 0.25)).norm(), 1e-15);
}

TEST(Partition, EmptyClassRejected) {
  EXPECT_THROW(partition_classwise(labelled({0, 0, 2}, 3), 3), ConfigError);
}

TEST(Synthetic, Deterministic) {
  SyntheticSpec spec;
  const SyntheticData a = synth_heterogeneous(spec, 5);
  const SyntheticData b = synth_heterogeneous(spec, 5);
  EXPECT_EQ(a.train.features, b.train.features);
  EXPECT_EQ(a.test.features, b.test.features);
  EXPECT_EQ(a.train.labels, b.train.labels);
  EXPECT_NE(synth_heterogeneous(spec, 6).train.features, a.train.features);
}

TEST(Synthetic, GroupsAndShards) {
  SyntheticSpec spec;
  spec.nodes = 5;
  spec.minority_nodes = 2;
  const SyntheticData d = synth_heterogeneous(spec, 1);
  EXPECT_EQ(d.train.nodes(), 5);
  EXPECT_EQ(d.train.groups, 2);
  for (Index s = 0; s < d.train.size(); ++s) {
    const int node = d.train.shard_of[static_cast<std::size_t>(s)];
    EXPECT_EQ(d.train.group[static_cast<std::size_t>(s)], node >= 3 ? 1 : 0);
  }
  EXPECT_EQ(d.test.evaluation_shards().size(), 2u);
}

TEST(Synthetic, ZeroShiftIsHomogeneous) {
  SyntheticSpec spec;
  spec.shift = 0.0;
  spec.minority_nodes = 3;
  spec.per_node = 2000;
  spec.test_per_node = 10;
  const SyntheticData d = synth_heterogeneous(spec, 4);
  // Per-group feature means agree up to sampling noise.
  Vec mean[2] = {Vec::Zero(d.train.feature_dim()), Vec::Zero(d.train.feature_dim())};
  double count[2] = {0, 0};
  for (Index s = 0; s < d.train.size(); ++s) {
    const int g = d.train.group[static_cast<std::size_t>(s)];
    mean[g] += d.train.features.row(s).cast<double>().transpose();
    count[g] += 1;
  }
  EXPECT_LE((mean[0] / count[0] - mean[1] / count[1]).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Synthetic, SpuriousClassifierTransfersAtChanceInExpectation) {
  // A classifier that reads only the spurious coordinates, fit to the
  // majority group (nearest spurious class mean), is right on the minority
  // group exactly for the fixed points of the permutation: expected 1 of C
  // classes, i.e. chance.
  SyntheticSpec spec;
  spec.classes = 4;
  spec.core_separation = 0.0;
  spec.shift = 8.0;
  spec.spurious_dims = 6;
  spec.per_node = 100;
  spec.test_per_node = 100;
  double total = 0.0;
  const int seeds = 60;
  for (int seed = 0; seed < seeds; ++seed) {
    const SyntheticData d = synth_heterogeneous(spec, static_cast<std::uint64_t>(seed));
    Mat means = Mat::Zero(spec.classes, spec.spurious_dims);
    Vec counts = Vec::Zero(spec.classes);
    for (Index s = 0; s < d.train.size(); ++s) {
      if (d.train.group[static_cast<std::size_t>(s)] != 0) continue;
      const int y = d.train.labels[static_cast<std::size_t>(s)];
      means.row(y) += d.train.features.row(s).tail(spec.spurious_dims).cast<double>();
      counts(y) += 1;
    }
    for (int c = 0; c < spec.classes; ++c) means.row(c) /= counts(c);
    double right = 0.0, n = 0.0;
    for (Index s = 0; s < d.test.size(); ++s) {
      if (d.test.group[static_cast<std::size_t>(s)] != 1) continue;
      const Vec x = d.test.features.row(s).tail(spec.spurious_dims).cast<double>().transpose();
      Index best = 0;
      (means.rowwise() - x.transpose()).rowwise().squaredNorm().minCoeff(&best);
      right += best == d.test.labels[static_cast<std::size_t>(s)] ? 1.0 : 0.0;
      n += 1.0;
    }
    total += right / n;
  }
  EXPECT_NEAR(total / seeds, 1.0 / spec.classes, 0.1);
}

TEST(GroupMetrics, SingleShard) {
  Dataset d = labelled({0, 1, 1, 0}, 2);
  d.features << 1, -1, -2, 3;
  d.assign_shards({0, 0, 0, 0}, 1);
  const ModelSpec model{Architecture::kLogistic, 1, 2, 25, false};
  const GroupMetrics g = worst_group_metrics(model, Vec{{1.0, -1.0}}, d);
  EXPECT_EQ(g.worst_acc, g.avg_acc);
  EXPECT_EQ(g.worst_acc, 1.0);
}

TEST(GroupMetrics, MajorityPredictorOnMinorityShard) {
  // 90/10 split: shard 0 holds only class 0, shard 1 only class 1; a constant
  // predictor of class 0 scores 0 on the minority shard.
  std::vector<int> labels(100, 0);
  for (int k = 90; k < 100; ++k) labels[static_cast<std::size_t>(k)] = 1;
  Dataset d = labelled(labels, 2);
  std::vector<int> shards(100, 0);
  for (int k = 90; k < 100; ++k) shards[static_cast<std::size_t>(k)] = 1;
  d.assign_shards(shards, 2);
  const ModelSpec model{Architecture::kLogistic, 1, 2, 25, true};
  const GroupMetrics g = worst_group_metrics(model, Vec{{0.0, 0.0, 1.0, 0.0}}, d);
  EXPECT_EQ(g.worst_acc, 0.0);
  EXPECT_DOUBLE_EQ(g.avg_acc, 0.9);
  EXPECT_EQ(g.per_group[0].accuracy, 1.0);
}

TEST(GroupMetrics, EmptyShardRejected) {
  Dataset d = labelled({0, 1}, 2);
  d.assign_shards({0, 0}, 1);
  const ModelSpec model{Architecture::kLogistic, 1, 2, 25, true};
  EXPECT_THROW(worst_group_metrics(model, Vec::Zero(4), d, {{0, 1}, {}}), std::invalid_argument);
}
