#include "adgda/harness.hpp"

#include "adgda/diagnostics.hpp"
#include "adgda/errors.hpp"
#include "adgda/record.hpp"
#include "adgda/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace adgda {

namespace {

Vec initial_theta(const ModelSpec& model, double scale, std::uint64_t seed) {
  Vec theta = Vec::Zero(model.dim());
  if (scale == 0.0 && model.arch == Architecture::kMlp) {
    scale = 1.0 / std::sqrt(static_cast<double>(model.inputs));
  }
  if (scale == 0.0) return theta;
  Rng rng = make_stream(seed, 0, 0, StreamPurpose::kInit);
  for (Index i = 0; i < theta.size(); ++i) theta(i) = scale * standard_normal(rng);
  return theta;
}

// Test samples grouped like the training shards: by owning node when every
// node holds whole classes, by class otherwise (nodes sharing a class then
// share its distribution).
void group_test_set(Dataset& test, int nodes, std::optional<std::uint64_t> placement) {
  const auto slots = classwise_slot_nodes(nodes, placement);
  const bool by_node = test.classes >= nodes;
  test.group.resize(test.labels.size());
  for (std::size_t k = 0; k < test.labels.size(); ++k) {
    const int c = test.labels[k];
    test.group[k] = by_node ? slots[static_cast<std::size_t>(c % nodes)] : c;
  }
  test.groups = by_node ? nodes : test.classes;
}

struct Provisioned {
  std::shared_ptr<const LocalLosses> losses;
  std::shared_ptr<const Dataset> evaluation;
  ModelSpec model;
  bool classification = false;
};

Provisioned provision(const ExperimentConfig& c, int nodes, std::uint64_t seed) {
  Provisioned out;
  const std::uint64_t data_seed = c.data_seed.value_or(seed);
  switch (c.data) {
    case DataKind::kQuadratic: {
      out.losses = std::make_shared<QuadraticLosses>(QuadraticLosses::random(
          nodes, c.quadratic.dim, c.quadratic.samples, c.quadratic.spread, c.quadratic.noise, data_seed));
      return out;
    }
    case DataKind::kSynthetic: {
      SyntheticSpec spec = c.synthetic;
      spec.nodes = nodes;
      SyntheticData data = synth_heterogeneous(spec, data_seed);
      auto train = std::make_shared<const Dataset>(std::move(data.train));
      out.evaluation = std::make_shared<const Dataset>(std::move(data.test));
      out.model = ModelSpec{c.model, train->feature_dim(), train->classes, c.hidden, c.bias};
      out.losses = std::make_shared<ClassificationLosses>(train, out.model);
      out.classification = true;
      return out;
    }
    case DataKind::kIdx: {
      const std::optional<std::uint64_t> placement =
          c.random_placement ? std::optional<std::uint64_t>(data_seed) : std::nullopt;
      auto train = std::make_shared<const Dataset>(
          partition_classwise(load_idx(c.train_images, c.train_labels, c.classes), nodes, placement));
      if (!c.test_images.empty()) {
        Dataset test = load_idx(c.test_images, c.test_labels, c.classes);
        group_test_set(test, nodes, placement);
        out.evaluation = std::make_shared<const Dataset>(std::move(test));
      } else {
        out.evaluation = train;
      }
      out.model = ModelSpec{c.model, train->feature_dim(), train->classes, c.hidden, c.bias};
      out.losses = std::make_shared<ClassificationLosses>(train, out.model);
      out.classification = true;
      return out;
    }
  }
  throw ConfigError("unknown data kind");
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string sweep_key(const std::string& axis) {
  if (axis == "alpha") return "regularizer.alpha";
  if (axis == "compression") return "compression";
  if (axis == "topology") return "topology.kind";
  if (axis == "T") return "run.rounds";
  throw ConfigError("unknown sweep axis '" + axis + "' (alpha, compression, topology, T)");
}

std::string path_safe(std::string s) {
  for (char& ch : s) {
    if (ch == '/' || ch == ':' || ch == ' ') ch = '_';
  }
  return s;
}

}  // namespace

MixingMatrix build_mixing(const ExperimentConfig& c) {
  if (c.topology == TopologyKind::kCustom) {
    if (!c.matrix_file.empty()) {
      Mat w = load_matrix_file(c.matrix_file);
      if (c.nodes != 0 && w.rows() != c.nodes) throw ConfigError("matrix file size differs from topology.nodes");
      return make_mixing_matrix(std::move(w));
    }
    return mixing_matrix(custom_topology(c.nodes, c.edges), c.weights);
  }
  return mixing_matrix(build_topology(c.topology, c.nodes, c.rows, c.cols), c.weights);
}

Experiment build_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  Experiment e;
  e.config = config;
  e.seed = seed;
  e.mixing = build_mixing(config);
  const int m = static_cast<int>(e.mixing.size());

  Provisioned p = provision(config, m, seed);
  if (p.losses->nodes() != m) throw ConfigError("data provides a different number of nodes than the topology");
  e.classification = p.classification;
  e.model = p.model;
  e.evaluation = p.evaluation;
  e.objective = make_objective(p.losses, config.regularizer, config.alpha);

  e.compression = parse_compression(config.compression, e.objective.dim());
  e.delta = delta_of(e.compression);
  e.theorem1 = consensus_step_size(e.mixing.rho, e.delta, e.mixing.beta);

  HyperParams& h = e.hyper;
  h.algo = config.algo;
  h.schedule = config.schedule;
  if (config.theorem2_coupling) {
    const double mu = e.objective.regularizer.strong_concavity();
    if (!(mu > 0.0)) throw ConfigError("theorem2 coupling needs alpha > 0");
    h.schedule.coupled = true;
    h.schedule.kappa = config.smoothness / mu;
  }
  h.gamma = config.gamma_mode == GammaMode::kTheorem1 ? e.theorem1.gamma : config.gamma;
  h.rounds = config.rounds;
  h.batch = config.batch;
  h.cadence = config.cadence;
  h.threads = config.threads;
  h.init = config.init;
  h.dual_init = config.dual_init;
  if (e.classification) {
    h.theta0 = initial_theta(e.model, config.init_scale, seed);
  } else if (config.init_scale != 0.0) {
    Rng rng = make_stream(seed, 0, 0, StreamPurpose::kInit);
    Vec theta(e.objective.dim());
    for (Index i = 0; i < theta.size(); ++i) theta(i) = config.init_scale * standard_normal(rng);
    h.theta0 = theta;
  }
  validate(h);

  if (e.classification) {
    const auto model = e.model;
    const auto data = e.evaluation;
    e.evaluator = [model, data](const Vec& theta) {
      const GroupMetrics g = worst_group_metrics(model, theta, *data);
      return Accuracy{g.worst_acc, g.avg_acc};
    };
  }
  return e;
}

RunOutput run_experiment(const Experiment& e) {
  return run_algorithm(e.objective, e.mixing, e.compression, e.hyper, e.seed, e.evaluator);
}

std::filesystem::path output_root(const ExperimentConfig& config) {
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
  return config.output_dir;
}

const SummaryStat& RunSummary::stat(const std::string& metric) const {
  for (const auto& s : stats) {
    if (s.metric == metric) return s;
  }
  throw std::out_of_range("no summary metric " + metric);
}

std::vector<SummaryStat> summarize(const std::vector<RunRecord>& records) {
  const std::vector<std::string> names = {"worst_acc", "avg_acc", "worst_loss", "avg_loss", "max_bits"};
  std::vector<std::vector<double>> values(names.size());
  for (const auto& record : records) {
    if (record.rows.empty()) throw std::invalid_argument("empty run record");
    const RecordRow& last = record.rows.back();
    std::uint64_t max_bits = 0;
    for (auto b : last.bits) max_bits = std::max(max_bits, b);
    const double row[] = {last.worst_acc, last.avg_acc, last.worst_loss, last.avg_loss,
                          static_cast<double>(max_bits)};
    for (std::size_t k = 0; k < names.size(); ++k) values[k].push_back(row[k]);
  }
  std::vector<SummaryStat> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    double mean = 0.0;
    for (double v : values[k]) mean += v;
    mean /= static_cast<double>(values[k].size());
    out.push_back({names[k], mean, sample_std(values[k], mean)});
  }
  return out;
}

KeyValues run_metadata(const Experiment& e) {
  KeyValues kv;
  const auto num = [](double v) { return format_number(v); };
  kv["version"] = ADGDA_VERSION;
  kv["seed"] = std::to_string(e.seed);
  kv["nodes"] = std::to_string(e.mixing.size());
  kv["dim"] = std::to_string(e.objective.dim());
  kv["rho"] = num(e.mixing.rho);
  kv["beta"] = num(e.mixing.beta);
  kv["delta"] = num(e.delta);
  kv["gamma"] = num(e.hyper.gamma);
  kv["gamma_theorem1"] = num(e.theorem1.gamma);
  kv["c"] = num(e.theorem1.c);
  kv["compression"] = to_string(e.compression);
  kv["message_bits"] = std::to_string(message_bits(e.compression));
  kv["dual_message_bits"] = e.hyper.algo == Algorithm::kChocoSgd ? "0" : std::to_string(32 * e.mixing.size());
  kv["strong_concavity"] = num(e.objective.regularizer.strong_concavity());
  if (e.hyper.schedule.coupled) kv["kappa"] = num(e.hyper.schedule.kappa);
  kv["flag.weight_rule"] = e.config.topology == TopologyKind::kCustom && !e.config.matrix_file.empty()
                               ? "matrix_file"
                               : std::string(to_string(e.config.weights));
  kv["flag.init"] = std::string(to_string(e.hyper.init));
  kv["flag.lambda0"] = std::string(to_string(e.hyper.dual_init));
  kv["flag.regularizer_sign"] = "negated_divergence";
  kv["flag.kl_clamp"] = num(kKlClamp);
  kv["flag.geometric_schedule"] = "eta0*r^t";
  kv["flag.bit_accounting"] = "payload_per_link;quant=32+d(b+1);topk=K(32+ceil(log2 d));identity=32d;dual=32m";
  kv["flag.topk_ties"] = "smallest_index";
  kv["flag.minibatch"] = "uniform_with_replacement";
  kv["flag.simplex_projection"] = "sort_threshold";
  kv["flag.dr_dsgd_loss_gossip"] = "W_mixing_32m_bits";
  kv["flag.placement"] = e.config.random_placement ? "random" : "identity";
  kv["timestamp"] = timestamp();
  return kv;
}

namespace {

RunSummary run_into(const ExperimentConfig& config, const std::filesystem::path& directory, std::ostream& log) {
  if (config.seeds.empty()) throw ConfigError("seed list is empty");
  RunSummary summary;
  summary.directory = directory;
  std::error_code ec;
  std::filesystem::create_directories(summary.directory, ec);
  if (ec) throw IoError("cannot create " + summary.directory.string() + ": " + ec.message());

  std::vector<RunRecord> records;
  KeyValues metadata;
  for (const auto seed : config.seeds) {
    const Experiment e = build_experiment(config, seed);
    if (metadata.empty()) metadata = run_metadata(e);
    const auto start = std::chrono::steady_clock::now();
    const RunOutput out = run_experiment(e);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_csv(summary.directory / ("seed_" + std::to_string(seed) + ".csv"), out.record);
    const RecordRow& last = out.record.rows.back();
    log << config.name << " seed " << seed << ": worst_acc " << format_number(last.worst_acc) << " avg_acc "
        << format_number(last.avg_acc) << " worst_loss " << format_number(last.worst_loss) << " ("
        << std::fixed << std::setprecision(1) << seconds << " s)\n"
        << std::defaultfloat;
    records.push_back(out.record);
    summary.seeds.push_back(seed);
  }
  summary.stats = summarize(records);
  summary.single_seed = summary.seeds.size() == 1;

  std::string text = "metric,mean,std,seeds,single_seed\n";
  for (const auto& s : summary.stats) {
    text += s.metric + "," + format_number(s.mean) + "," + format_number(s.std) + "," +
            std::to_string(summary.seeds.size()) + "," + (summary.single_seed ? "1" : "0") + "\n";
  }
  write_text(summary.directory / "summary.csv", text);

  std::string seeds;
  for (auto s : summary.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  metadata["seeds"] = seeds;
  std::string meta_text = to_text(metadata);
  meta_text += "\n# resolved configuration\n";
  for (const auto& [k, v] : serialize(config)) meta_text += "config." + k + " = " + v + "\n";
  write_text(summary.directory / "metadata.txt", meta_text);
  return summary;
}

}  // namespace

RunSummary cmd_run(const ExperimentConfig& config, std::ostream& log) {
  return run_into(config, output_root(config) / config.name, log);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<RunSummary> cmd_sweep(const SweepSpec& sweep, std::ostream& log) {
  const std::string key = sweep_key(sweep.axis);
  if (sweep.values.empty()) throw ConfigError("sweep axis '" + sweep.axis + "' has no values");

  // Resolve every value before running anything.
  std::vector<ExperimentConfig> configs;
  const std::filesystem::path root = output_root(sweep.base) / sweep.base.name;
  for (const auto& value : sweep.values) {
    KeyValues kv = serialize(sweep.base);
    kv[key] = value;
    ExperimentConfig c = parse_config(kv);
    c.name = sweep.base.name + "_" + sweep.axis + "_" + path_safe(value);
    configs.push_back(std::move(c));
  }

  std::vector<RunSummary> summaries;
  std::string table = sweep.axis + ",worst_acc_mean,worst_acc_std,avg_acc_mean,avg_acc_std,worst_loss_mean,"
                      "avg_loss_mean,max_bits_mean,seeds\n";
  for (std::size_t k = 0; k < configs.size(); ++k) {
    RunSummary s = run_into(configs[k], root / (sweep.axis + "_" + path_safe(sweep.values[k])), log);
    table += sweep.values[k] + "," + format_number(s.stat("worst_acc").mean) + "," +
             format_number(s.stat("worst_acc").std) + "," + format_number(s.stat("avg_acc").mean) + "," +
             format_number(s.stat("avg_acc").std) + "," + format_number(s.stat("worst_loss").mean) + "," +
             format_number(s.stat("avg_loss").mean) + "," + format_number(s.stat("max_bits").mean) + "," +
             std::to_string(s.seeds.size()) + "\n";
    summaries.push_back(std::move(s));
  }
  write_text(root / ("sweep_" + sweep.axis + ".csv"), table);
  return summaries;
}

}  // namespace adgda
