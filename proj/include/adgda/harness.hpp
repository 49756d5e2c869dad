#pragma once

#include "adgda/config.hpp"
#include "adgda/engine.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace adgda {

// Overrides the configured output directory when set.
inline constexpr const char* kOutputRootEnv = "ADGDA_OUTPUT_ROOT";

// Everything one seeded run needs, resolved from a config.
struct Experiment {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  MixingMatrix mixing;
  CompressionSpec compression;
  RobustObjective objective;
  HyperParams hyper;
  double delta = 1.0;
  ConsensusStep theorem1;  // gamma and c from the spectral constants and delta
  bool classification = false;
  ModelSpec model;
  std::shared_ptr<const Dataset> evaluation;  // test set, or the training set
  AccuracyEvaluator evaluator;
};

Experiment build_experiment(const ExperimentConfig& config, std::uint64_t seed);
MixingMatrix build_mixing(const ExperimentConfig& config);

RunOutput run_experiment(const Experiment& experiment);

std::filesystem::path output_root(const ExperimentConfig& config);

// Final-row statistics across seeds; std is the sample standard deviation
// and 0 for a single seed.
struct SummaryStat {
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
};

struct RunSummary {
  std::filesystem::path directory;
  std::vector<std::uint64_t> seeds;
  std::vector<SummaryStat> stats;  // worst_acc, avg_acc, worst_loss, avg_loss, max_bits
  bool single_seed = true;

  const SummaryStat& stat(const std::string& metric) const;
};

// Final record rows of the per-seed CSVs reduced to mean and sample std.
std::vector<SummaryStat> summarize(const std::vector<RunRecord>& records);

/// Writes <root>/<name>/seed_<s>.csv per seed, summary.csv and metadata.txt.
/// Progress lines go to `log`.
RunSummary cmd_run(const ExperimentConfig& config, std::ostream& log);

struct SweepSpec {
  ExperimentConfig base;
  std::string axis;  // alpha | compression | topology | T
  std::vector<std::string> values;
};

std::vector<std::string> split_list(const std::string& text);

/// One cmd_run per value under <root>/<name>/<axis>_<value>, plus a
/// comparison table <root>/<name>/sweep_<axis>.csv.
std::vector<RunSummary> cmd_sweep(const SweepSpec& sweep, std::ostream& log);

// Metadata lines: resolved constants, version and design flags.
KeyValues run_metadata(const Experiment& experiment);

}  // namespace adgda
