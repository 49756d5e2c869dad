#pragma once

#include "adgda/compression.hpp"
#include "adgda/dataset.hpp"
#include "adgda/engine.hpp"
#include "adgda/model.hpp"
#include "adgda/regularizer.hpp"
#include "adgda/schedule.hpp"
#include "adgda/topology.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace adgda {

// Flat dotted-key configuration, e.g. "regularizer.alpha = 0.01".
using KeyValues = std::map<std::string, std::string>;

// One "key = value" per line; '#' starts a comment; blank lines are ignored.
KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);
std::string to_text(const KeyValues& kv);

enum class DataKind { kIdx, kSynthetic, kQuadratic };
enum class GammaMode { kTheorem1, kExplicit };

struct QuadraticSpec {
  Index dim = 2;
  Index samples = 1;
  double spread = 1.0;
  double noise = 0.0;

  bool operator==(const QuadraticSpec&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Algorithm algo = Algorithm::kAdGda;

  TopologyKind topology = TopologyKind::kRing;
  int nodes = 0;
  int rows = 0;
  int cols = 0;
  WeightRule weights = WeightRule::kMetropolis;
  std::string matrix_file;                   // custom topology from a matrix
  std::vector<std::pair<int, int>> edges;    // custom topology from edges

  std::string compression = "identity";

  DataKind data = DataKind::kSynthetic;
  std::optional<std::uint64_t> data_seed;  // defaults to the run seed
  std::string train_images, train_labels, test_images, test_labels;
  int classes = 10;
  bool random_placement = true;
  SyntheticSpec synthetic;
  QuadraticSpec quadratic;

  Architecture model = Architecture::kLogistic;
  int hidden = 25;
  bool bias = true;
  double init_scale = 0.0;  // 0 means the default for the model

  RegularizerKind regularizer = RegularizerKind::kChiSquared;
  double alpha = 1.0;

  Schedule schedule;
  bool theorem2_coupling = false;
  double smoothness = 1.0;  // L estimate for the coupled mode

  long rounds = 100;
  Index batch = 10;
  GammaMode gamma_mode = GammaMode::kTheorem1;
  double gamma = 0.0;
  std::vector<std::uint64_t> seeds{1};
  long cadence = 10;
  int threads = 1;
  InitMode init = InitMode::kAlgorithm;
  DualInit dual_init = DualInit::kEmpirical;

  std::string output_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Resolves and validates a configuration. Throws ConfigError on unknown
/// keys, malformed values, missing required keys (algo, topology.kind,
/// compression) and invalid combinations.
ExperimentConfig parse_config(const KeyValues& kv);

// Applies "--key=value" style overrides (shorthands such as --alpha or --T
// map to their dotted keys) on top of a file and parses the result.
ExperimentConfig load_config(const std::filesystem::path& path, const KeyValues& overrides = {});

// Canonical key/value form; parse_config(serialize(c)) == c.
KeyValues serialize(const ExperimentConfig& config);

// Expands a shorthand flag name to its dotted key.
std::string canonical_key(const std::string& key);

// Keys accepted by parse_config.
const std::vector<std::string>& known_keys();

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace adgda
