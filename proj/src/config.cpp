#include "adgda/config.hpp"

#include "adgda/errors.hpp"
#include "adgda/record.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace adgda {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const std::vector<std::string> kKeys = {
    "name",
    "algo",
    "topology.kind",
    "topology.nodes",
    "topology.rows",
    "topology.cols",
    "topology.weights",
    "topology.matrix_file",
    "topology.edges",
    "compression",
    "data.kind",
    "data.seed",
    "data.train_images",
    "data.train_labels",
    "data.test_images",
    "data.test_labels",
    "data.classes",
    "data.placement",
    "data.synthetic.minority",
    "data.synthetic.classes",
    "data.synthetic.core_dims",
    "data.synthetic.spurious_dims",
    "data.synthetic.separation",
    "data.synthetic.shift",
    "data.synthetic.noise",
    "data.synthetic.per_node",
    "data.synthetic.test_per_node",
    "data.quadratic.dim",
    "data.quadratic.samples",
    "data.quadratic.spread",
    "data.quadratic.noise",
    "model.kind",
    "model.hidden",
    "model.bias",
    "model.init_scale",
    "regularizer.kind",
    "regularizer.alpha",
    "rates.schedule",
    "rates.eta_theta",
    "rates.eta_lambda",
    "rates.ratio",
    "rates.coupling",
    "rates.smoothness",
    "run.rounds",
    "run.batch",
    "run.gamma",
    "run.seeds",
    "run.cadence",
    "run.threads",
    "run.init",
    "run.lambda0",
    "output.dir",
};

class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string text(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  std::string required(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end() || it->second.empty()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  }

  template <typename Int>
  Int integer(const std::string& key, Int fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    Int v{};
    const auto& s = it->second;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ConfigError("key '" + key + "' expects an integer, got '" + s + "'");
    }
    return v;
  }

  double real(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return to_real(key, it->second);
  }

  bool boolean(const std::string& key, bool fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const auto& s = it->second;
    if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "off" || s == "no") return false;
    throw ConfigError("key '" + key + "' expects a boolean, got '" + s + "'");
  }

  static double to_real(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("key '" + key + "' expects a number, got '" + s + "'");
    return v;
  }

 private:
  const KeyValues& kv_;
};

std::vector<std::pair<int, int>> parse_edges(const std::string& text) {
  std::vector<std::pair<int, int>> edges;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) throw ConfigError("edge '" + item + "' must look like i-j");
    try {
      edges.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
    } catch (const std::exception&) {
      throw ConfigError("edge '" + item + "' must look like i-j");
    }
  }
  return edges;
}

std::string data_kind_name(DataKind kind) {
  switch (kind) {
    case DataKind::kIdx: return "idx";
    case DataKind::kSynthetic: return "synthetic";
    case DataKind::kQuadratic: return "quadratic";
  }
  return "synthetic";
}

DataKind parse_data_kind(const std::string& s) {
  if (s == "idx") return DataKind::kIdx;
  if (s == "synthetic") return DataKind::kSynthetic;
  if (s == "quadratic") return DataKind::kQuadratic;
  throw ConfigError("unknown data kind '" + s + "'");
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_key_values(in);
}

std::string to_text(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

const std::vector<std::string>& known_keys() { return kKeys; }

std::string canonical_key(const std::string& key) {
  static const std::map<std::string, std::string> shorthands = {
      {"alpha", "regularizer.alpha"}, {"T", "run.rounds"},       {"rounds", "run.rounds"},
      {"seeds", "run.seeds"},         {"gamma", "run.gamma"},     {"batch", "run.batch"},
      {"threads", "run.threads"},     {"cadence", "run.cadence"}, {"topology", "topology.kind"},
      {"nodes", "topology.nodes"},    {"output", "output.dir"},   {"model", "model.kind"},
      {"schedule", "rates.schedule"}, {"eta", "rates.eta_theta"}, {"regularizer", "regularizer.kind"},
  };
  const auto it = shorthands.find(key);
  return it == shorthands.end() ? key : it->second;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dots = item.find("..");
    try {
      if (dots != std::string::npos) {
        const auto lo = std::stoull(item.substr(0, dots));
        const auto hi = std::stoull(item.substr(dots + 2));
        if (hi < lo) throw ConfigError("empty seed range '" + item + "'");
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
      } else {
        std::size_t used = 0;
        seeds.push_back(std::stoull(item, &used));
        if (used != item.size()) throw ConfigError("bad seed '" + item + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + item + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

ExperimentConfig parse_config(const KeyValues& kv) {
  const std::set<std::string> known(kKeys.begin(), kKeys.end());
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "'");
  }
  const Reader r(kv);
  ExperimentConfig c;
  c.name = r.text("name", c.name);
  if (c.name.empty() || c.name.find('/') != std::string::npos) throw ConfigError("name must be a plain file stem");
  c.algo = parse_algorithm(r.required("algo"));

  c.topology = parse_topology_kind(r.required("topology.kind"));
  c.nodes = r.integer<int>("topology.nodes", 0);
  c.rows = r.integer<int>("topology.rows", 0);
  c.cols = r.integer<int>("topology.cols", 0);
  c.weights = parse_weight_rule(r.text("topology.weights", "metropolis"));
  c.matrix_file = r.text("topology.matrix_file", "");
  if (r.has("topology.edges")) c.edges = parse_edges(r.text("topology.edges", ""));
  if (c.topology == TopologyKind::kCustom) {
    if (c.matrix_file.empty() == c.edges.empty()) {
      throw ConfigError("custom topology needs exactly one of topology.matrix_file or topology.edges");
    }
    if (!c.edges.empty()) custom_topology(c.nodes, c.edges);
  } else {
    if (!c.matrix_file.empty() || !c.edges.empty()) {
      throw ConfigError("matrix_file and edges apply only to custom topologies");
    }
    if (c.nodes < 2) throw ConfigError("topology.nodes must be at least 2");
    build_topology(c.topology, c.nodes, c.rows, c.cols);  // validates torus dims
  }

  c.compression = r.required("compression");
  parse_compression(c.compression, 1'000'000);  // syntax only; K is checked against d later

  c.data = parse_data_kind(r.text("data.kind", "synthetic"));
  if (r.has("data.seed")) c.data_seed = r.integer<std::uint64_t>("data.seed", 0);
  c.train_images = r.text("data.train_images", "");
  c.train_labels = r.text("data.train_labels", "");
  c.test_images = r.text("data.test_images", "");
  c.test_labels = r.text("data.test_labels", "");
  c.classes = r.integer<int>("data.classes", c.classes);
  const std::string placement = r.text("data.placement", "random");
  if (placement != "random" && placement != "identity") throw ConfigError("data.placement must be random or identity");
  c.random_placement = placement == "random";
  if (c.data == DataKind::kIdx && (c.train_images.empty() || c.train_labels.empty())) {
    throw ConfigError("idx data needs data.train_images and data.train_labels");
  }
  if (c.test_images.empty() != c.test_labels.empty()) {
    throw ConfigError("data.test_images and data.test_labels go together");
  }
  auto& s = c.synthetic;
  s.minority_nodes = r.integer<int>("data.synthetic.minority", s.minority_nodes);
  s.classes = r.integer<int>("data.synthetic.classes", s.classes);
  s.core_dims = r.integer<int>("data.synthetic.core_dims", s.core_dims);
  s.spurious_dims = r.integer<int>("data.synthetic.spurious_dims", s.spurious_dims);
  s.core_separation = r.real("data.synthetic.separation", s.core_separation);
  s.shift = r.real("data.synthetic.shift", s.shift);
  s.noise = r.real("data.synthetic.noise", s.noise);
  s.per_node = r.integer<Index>("data.synthetic.per_node", s.per_node);
  s.test_per_node = r.integer<Index>("data.synthetic.test_per_node", s.test_per_node);
  auto& q = c.quadratic;
  q.dim = r.integer<Index>("data.quadratic.dim", q.dim);
  q.samples = r.integer<Index>("data.quadratic.samples", q.samples);
  q.spread = r.real("data.quadratic.spread", q.spread);
  q.noise = r.real("data.quadratic.noise", q.noise);
  if (q.dim < 1 || q.samples < 1 || q.noise < 0.0) throw ConfigError("invalid quadratic data parameters");

  c.model = parse_architecture(r.text("model.kind", "logistic"));
  c.hidden = r.integer<int>("model.hidden", c.hidden);
  c.bias = r.boolean("model.bias", c.bias);
  c.init_scale = r.real("model.init_scale", c.init_scale);
  if (c.hidden < 1) throw ConfigError("model.hidden must be positive");

  c.regularizer = parse_regularizer_kind(r.text("regularizer.kind", "chi2"));
  c.alpha = r.real("regularizer.alpha", c.alpha);
  if (!(c.alpha >= 0.0)) throw ConfigError("regularizer.alpha must be nonnegative");
  if (c.algo == Algorithm::kDrDsgd && c.regularizer != RegularizerKind::kKullbackLeibler) {
    throw ConfigError("dr_dsgd requires regularizer.kind = kl");
  }

  c.schedule.kind = parse_schedule_kind(r.text("rates.schedule", "constant"));
  c.schedule.eta_theta0 = r.real("rates.eta_theta", c.schedule.eta_theta0);
  c.schedule.eta_lambda0 = r.real("rates.eta_lambda", c.schedule.eta_lambda0);
  c.schedule.ratio = r.real("rates.ratio", c.schedule.ratio);
  const std::string coupling = r.text("rates.coupling", "none");
  if (coupling != "none" && coupling != "theorem2") throw ConfigError("rates.coupling must be none or theorem2");
  c.theorem2_coupling = coupling == "theorem2";
  c.smoothness = r.real("rates.smoothness", c.smoothness);
  validate(c.schedule);
  if (c.theorem2_coupling && !(c.smoothness > 0.0)) throw ConfigError("rates.smoothness must be positive");

  c.rounds = r.integer<long>("run.rounds", c.rounds);
  c.batch = r.integer<Index>("run.batch", c.batch);
  const std::string gamma = r.text("run.gamma", "theorem1");
  if (gamma == "theorem1") {
    c.gamma_mode = GammaMode::kTheorem1;
    c.gamma = 0.0;
  } else {
    c.gamma_mode = GammaMode::kExplicit;
    c.gamma = Reader::to_real("run.gamma", gamma);
    if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError("run.gamma must lie in (0, 1]");
  }
  if (r.has("run.seeds")) c.seeds = parse_seed_list(r.text("run.seeds", ""));
  c.cadence = r.integer<long>("run.cadence", c.cadence);
  c.threads = r.integer<int>("run.threads", c.threads);
  c.init = parse_init_mode(r.text("run.init", "algorithm"));
  c.dual_init = parse_dual_init(r.text("run.lambda0", "empirical"));
  if (c.rounds < 1 || c.batch < 1 || c.cadence < 1 || c.threads < 1) {
    throw ConfigError("run.rounds, run.batch, run.cadence and run.threads must be positive");
  }

  c.output_dir = r.text("output.dir", c.output_dir);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const KeyValues& overrides) {
  KeyValues kv = read_key_values(path);
  for (const auto& [key, value] : overrides) kv[canonical_key(key)] = value;
  return parse_config(kv);
}

KeyValues serialize(const ExperimentConfig& c) {
  KeyValues kv;
  const auto num = [](double v) { return format_number(v); };
  kv["name"] = c.name;
  kv["algo"] = std::string(to_string(c.algo));
  kv["topology.kind"] = std::string(to_string(c.topology));
  if (c.nodes != 0) kv["topology.nodes"] = std::to_string(c.nodes);
  if (c.rows != 0) kv["topology.rows"] = std::to_string(c.rows);
  if (c.cols != 0) kv["topology.cols"] = std::to_string(c.cols);
  kv["topology.weights"] = std::string(to_string(c.weights));
  if (!c.matrix_file.empty()) kv["topology.matrix_file"] = c.matrix_file;
  if (!c.edges.empty()) {
    std::string e;
    for (const auto& [i, j] : c.edges) e += (e.empty() ? "" : ",") + std::to_string(i) + "-" + std::to_string(j);
    kv["topology.edges"] = e;
  }
  kv["compression"] = c.compression;
  kv["data.kind"] = data_kind_name(c.data);
  if (c.data_seed) kv["data.seed"] = std::to_string(*c.data_seed);
  if (!c.train_images.empty()) kv["data.train_images"] = c.train_images;
  if (!c.train_labels.empty()) kv["data.train_labels"] = c.train_labels;
  if (!c.test_images.empty()) kv["data.test_images"] = c.test_images;
  if (!c.test_labels.empty()) kv["data.test_labels"] = c.test_labels;
  kv["data.classes"] = std::to_string(c.classes);
  kv["data.placement"] = c.random_placement ? "random" : "identity";
  kv["data.synthetic.minority"] = std::to_string(c.synthetic.minority_nodes);
  kv["data.synthetic.classes"] = std::to_string(c.synthetic.classes);
  kv["data.synthetic.core_dims"] = std::to_string(c.synthetic.core_dims);
  kv["data.synthetic.spurious_dims"] = std::to_string(c.synthetic.spurious_dims);
  kv["data.synthetic.separation"] = num(c.synthetic.core_separation);
  kv["data.synthetic.shift"] = num(c.synthetic.shift);
  kv["data.synthetic.noise"] = num(c.synthetic.noise);
  kv["data.synthetic.per_node"] = std::to_string(c.synthetic.per_node);
  kv["data.synthetic.test_per_node"] = std::to_string(c.synthetic.test_per_node);
  kv["data.quadratic.dim"] = std::to_string(c.quadratic.dim);
  kv["data.quadratic.samples"] = std::to_string(c.quadratic.samples);
  kv["data.quadratic.spread"] = num(c.quadratic.spread);
  kv["data.quadratic.noise"] = num(c.quadratic.noise);
  kv["model.kind"] = std::string(to_string(c.model));
  kv["model.hidden"] = std::to_string(c.hidden);
  kv["model.bias"] = c.bias ? "true" : "false";
  kv["model.init_scale"] = num(c.init_scale);
  kv["regularizer.kind"] = std::string(to_string(c.regularizer));
  kv["regularizer.alpha"] = num(c.alpha);
  kv["rates.schedule"] = std::string(to_string(c.schedule.kind));
  kv["rates.eta_theta"] = num(c.schedule.eta_theta0);
  kv["rates.eta_lambda"] = num(c.schedule.eta_lambda0);
  kv["rates.ratio"] = num(c.schedule.ratio);
  kv["rates.coupling"] = c.theorem2_coupling ? "theorem2" : "none";
  kv["rates.smoothness"] = num(c.smoothness);
  kv["run.rounds"] = std::to_string(c.rounds);
  kv["run.batch"] = std::to_string(c.batch);
  kv["run.gamma"] = c.gamma_mode == GammaMode::kTheorem1 ? "theorem1" : num(c.gamma);
  std::string seeds;
  for (auto s : c.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  kv["run.seeds"] = seeds;
  kv["run.cadence"] = std::to_string(c.cadence);
  kv["run.threads"] = std::to_string(c.threads);
  kv["run.init"] = std::string(to_string(c.init));
  kv["run.lambda0"] = std::string(to_string(c.dual_init));
  kv["output.dir"] = c.output_dir;
  return kv;
}

}  // namespace adgda
