#include "adgda/config.hpp"
#include "adgda/errors.hpp"
#include "adgda/harness.hpp"
#include "adgda/record.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace adgda;

namespace {

namespace fs = std::filesystem;

KeyValues minimal() {
  return {{"algo", "adgda"}, {"topology.kind", "ring"}, {"topology.nodes", "4"}, {"compression", "quant:8"}};
}

KeyValues small_run(const std::string& name) {
  KeyValues kv = minimal();
  kv["name"] = name;
  kv["data.kind"] = "synthetic";
  kv["data.synthetic.minority"] = "1";
  kv["data.synthetic.per_node"] = "30";
  kv["data.synthetic.test_per_node"] = "30";
  kv["run.rounds"] = "20";
  kv["run.batch"] = "4";
  kv["rates.eta_theta"] = "0.5";
  return kv;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempRoot : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("adgda_cfg_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    setenv(kOutputRootEnv, root_.c_str(), 1);
  }
  void TearDown() override {
    unsetenv(kOutputRootEnv);
    fs::remove_all(root_);
  }
  fs::path root_;
};

}  // namespace

TEST(Config, MinimalUsesDefaults) {
  const ExperimentConfig c = parse_config(minimal());
  EXPECT_EQ(c.cadence, 10);
  EXPECT_EQ(c.output_dir, "out");
  EXPECT_EQ(c.gamma_mode, GammaMode::kTheorem1);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1}));
  EXPECT_EQ(c.weights, WeightRule::kMetropolis);
}

TEST(Config, RequiredKeys) {
  for (const char* key : {"algo", "topology.kind", "compression"}) {
    KeyValues kv = minimal();
    kv.erase(key);
    EXPECT_THROW(parse_config(kv), ConfigError) << key;
  }
}

TEST(Config, Rejections) {
  KeyValues unknown = minimal();
  unknown["regulariser.alpha"] = "1";
  EXPECT_THROW(parse_config(unknown), ConfigError);
  KeyValues type = minimal();
  type["run.rounds"] = "10.5";
  EXPECT_THROW(parse_config(type), ConfigError);
  KeyValues dr = minimal();
  dr["algo"] = "dr_dsgd";
  EXPECT_THROW(parse_config(dr), ConfigError);
  dr["regularizer.kind"] = "kl";
  EXPECT_NO_THROW(parse_config(dr));
  KeyValues torus = minimal();
  torus["topology.kind"] = "torus2d";
  torus["topology.nodes"] = "10";
  EXPECT_THROW(parse_config(torus), ConfigError);
  KeyValues gamma = minimal();
  gamma["run.gamma"] = "1.5";
  EXPECT_THROW(parse_config(gamma), ConfigError);
  KeyValues comp = minimal();
  comp["compression"] = "gzip";
  EXPECT_THROW(parse_config(comp), ConfigError);
}

TEST(Config, FileGrammarAndOverrides) {
  const fs::path path = fs::temp_directory_path() / "adgda_test.cfg";
  {
    std::ofstream out(path);
    out << "# comment\nalgo = adgda\ntopology.kind = ring   # trailing\ntopology.nodes = 4\n\n"
        << "compression = quant:8\nregularizer.alpha = 1\n";
  }
  EXPECT_DOUBLE_EQ(load_config(path).alpha, 1.0);
  const ExperimentConfig c = load_config(path, {{"alpha", "0.01"}, {"T", "300"}, {"seeds", "1..3"}});
  EXPECT_DOUBLE_EQ(c.alpha, 0.01);
  EXPECT_EQ(c.rounds, 300);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  {
    std::ofstream out(path);
    out << "algo = adgda\nalgo = choco_sgd\n";
  }
  EXPECT_THROW(load_config(path), ConfigError);
  {
    std::ofstream out(path);
    out << "just words\n";
  }
  EXPECT_THROW(load_config(path), ConfigError);
  fs::remove(path);
  EXPECT_THROW(load_config("/nonexistent/x.cfg"), IoError);
}

TEST(Config, RoundTrip) {
  std::vector<KeyValues> inputs = {minimal(), small_run("x")};
  KeyValues rich = minimal();
  rich["algo"] = "dr_dsgd";
  rich["regularizer.kind"] = "kl";
  rich["topology.kind"] = "torus2d";
  rich["topology.nodes"] = "6";
  rich["topology.rows"] = "3";
  rich["compression"] = "topk:0.1";
  rich["run.gamma"] = "0.125";
  rich["run.seeds"] = "4,9";
  rich["data.seed"] = "77";
  rich["model.kind"] = "mlp";
  rich["model.bias"] = "false";
  rich["rates.schedule"] = "geometric";
  rich["rates.ratio"] = "0.99";
  rich["run.lambda0"] = "uniform";
  rich["run.init"] = "consistent";
  inputs.push_back(rich);
  for (const auto& kv : inputs) {
    const ExperimentConfig c = parse_config(kv);
    EXPECT_EQ(parse_config(serialize(c)), c);
    EXPECT_EQ(serialize(parse_config(serialize(c))), serialize(c));
  }
}

TEST(Config, SeedLists) {
  EXPECT_EQ(parse_seed_list("3"), (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(parse_seed_list("1..3, 7"), (std::vector<std::uint64_t>{1, 2, 3, 7}));
  EXPECT_THROW(parse_seed_list(""), ConfigError);
  EXPECT_THROW(parse_seed_list("5..2"), ConfigError);
  EXPECT_THROW(parse_seed_list("x"), ConfigError);
}

TEST(Experiment, ResolvesWorstCaseGamma) {
  const Experiment e = build_experiment(parse_config(small_run("g")), 1);
  EXPECT_NEAR(e.mixing.rho, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(e.hyper.gamma, consensus_step_size(e.mixing.rho, e.delta, e.mixing.beta).gamma);
  EXPECT_GT(e.hyper.gamma, 0.0);
  EXPECT_LE(e.hyper.gamma, 1.0);
  EXPECT_TRUE(e.classification);
}

TEST(Experiment, CoupledRates) {
  KeyValues kv = small_run("k");
  kv["rates.coupling"] = "theorem2";
  kv["rates.smoothness"] = "4";
  kv["regularizer.alpha"] = "0.5";
  const Experiment e = build_experiment(parse_config(kv), 1);
  EXPECT_TRUE(e.hyper.schedule.coupled);
  // chi-squared modulus 2 alpha / max p with p uniform over 4 nodes
  EXPECT_DOUBLE_EQ(e.hyper.schedule.kappa, 4.0 / 4.0);
}

TEST_F(TempRoot, RunWritesArtifacts) {
  KeyValues kv = small_run("three");
  kv["run.seeds"] = "1,2,3";
  const RunSummary s = cmd_run(parse_config(kv), std::cerr);
  EXPECT_EQ(s.directory, root_ / "three");
  for (int seed : {1, 2, 3}) EXPECT_TRUE(fs::exists(root_ / "three" / ("seed_" + std::to_string(seed) + ".csv")));
  EXPECT_TRUE(fs::exists(root_ / "three" / "summary.csv"));
  EXPECT_TRUE(fs::exists(root_ / "three" / "metadata.txt"));
  EXPECT_FALSE(s.single_seed);

  // Summary recomputable from the CSVs alone.
  std::vector<RunRecord> records;
  for (int seed : {1, 2, 3}) records.push_back(read_csv(root_ / "three" / ("seed_" + std::to_string(seed) + ".csv")));
  const auto again = summarize(records);
  for (std::size_t k = 0; k < again.size(); ++k) {
    EXPECT_EQ(format_number(again[k].mean), format_number(s.stats[k].mean));
    EXPECT_EQ(format_number(again[k].std), format_number(s.stats[k].std));
  }
  const std::string meta = slurp(root_ / "three" / "metadata.txt");
  for (const char* key : {"gamma = ", "rho = ", "beta = ", "delta = ", "c = ", "version = ", "flag.init = "}) {
    EXPECT_NE(meta.find(key), std::string::npos) << key;
  }
}

TEST_F(TempRoot, RerunIsByteIdentical) {
  const ExperimentConfig c = parse_config(small_run("again"));
  cmd_run(c, std::cerr);
  const std::string first = slurp(root_ / "again" / "seed_1.csv");
  const std::string summary = slurp(root_ / "again" / "summary.csv");
  cmd_run(c, std::cerr);
  EXPECT_EQ(slurp(root_ / "again" / "seed_1.csv"), first);
  EXPECT_EQ(slurp(root_ / "again" / "summary.csv"), summary);
}

TEST_F(TempRoot, SingleSeedFlag) {
  const RunSummary s = cmd_run(parse_config(small_run("single")), std::cerr);
  EXPECT_TRUE(s.single_seed);
  EXPECT_EQ(s.stat("worst_acc").std, 0.0);
  EXPECT_NE(slurp(root_ / "single" / "summary.csv").find("worst_acc,"), std::string::npos);
  EXPECT_NE(slurp(root_ / "single" / "summary.csv").find(",1,1\n"), std::string::npos);
}

TEST_F(TempRoot, SweepAxes) {
  const ExperimentConfig base = parse_config(small_run("sw"));
  const auto alpha = cmd_sweep({base, "alpha", {"0.01", "1", "10"}}, std::cerr);
  EXPECT_EQ(alpha.size(), 3u);
  const std::string table = slurp(root_ / "sw" / "sweep_alpha.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
  const auto comp = cmd_sweep({base, "compression", {"quant:4", "quant:8", "quant:16"}}, std::cerr);
  EXPECT_EQ(comp.size(), 3u);
  EXPECT_TRUE(fs::exists(root_ / "sw" / "compression_quant_4" / "seed_1.csv"));
  EXPECT_THROW(cmd_sweep({base, "alpha", {}}, std::cerr), ConfigError);
  EXPECT_THROW(cmd_sweep({base, "colour", {"red"}}, std::cerr), ConfigError);
  EXPECT_THROW(cmd_sweep({base, "compression", {"quant:0"}}, std::cerr), ConfigError);
}

TEST_F(TempRoot, QuadraticAndIdxMissing) {
  KeyValues kv = minimal();
  kv["name"] = "quad";
  kv["data.kind"] = "quadratic";
  kv["run.rounds"] = "15";
  const RunSummary s = cmd_run(parse_config(kv), std::cerr);
  EXPECT_TRUE(std::isnan(s.stat("worst_acc").mean));
  KeyValues idx = minimal();
  idx["data.kind"] = "idx";
  idx["data.train_images"] = "/nonexistent/a";
  idx["data.train_labels"] = "/nonexistent/b";
  EXPECT_THROW(cmd_run(parse_config(idx), std::cerr), IoError);
}
