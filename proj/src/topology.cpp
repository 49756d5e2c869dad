#include "adgda/topology.hpp"

#include <cassert>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace adgda {

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kRing: return "ring";
    case TopologyKind::kTorus2d: return "torus2d";
    case TopologyKind::kComplete: return "complete";
    case TopologyKind::kStar: return "star";
    case TopologyKind::kCustom: return "custom";
  }
  return "custom";
}

TopologyKind parse_topology_kind(std::string_view name) {
  if (name == "ring") return TopologyKind::kRing;
  if (name == "torus2d" || name == "torus") return TopologyKind::kTorus2d;
  if (name == "complete" || name == "mesh") return TopologyKind::kComplete;
  if (name == "star") return TopologyKind::kStar;
  if (name == "custom") return TopologyKind::kCustom;
  throw ConfigError("unknown topology kind '" + std::string(name) + "'");
}

std::string_view to_string(WeightRule rule) {
  return rule == WeightRule::kMetropolis ? "metropolis" : "uniform";
}

WeightRule parse_weight_rule(std::string_view name) {
  if (name == "metropolis") return WeightRule::kMetropolis;
  if (name == "uniform") return WeightRule::kUniformNeighbor;
  throw ConfigError("unknown weight rule '" + std::string(name) + "'");
}

std::vector<int> Topology::degrees() const {
  std::vector<int> deg(static_cast<std::size_t>(nodes), 0);
  for (const auto& [i, j] : edges) {
    ++deg[static_cast<std::size_t>(i)];
    ++deg[static_cast<std::size_t>(j)];
  }
  return deg;
}

bool Topology::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

bool is_connected(int nodes, const std::vector<std::pair<int, int>>& edges) {
  if (nodes <= 1) return nodes == 1;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(nodes));
  for (const auto& [i, j] : edges) {
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }
  std::vector<bool> seen(static_cast<std::size_t>(nodes), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int visited = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++visited;
        frontier.push(v);
      }
    }
  }
  return visited == nodes;
}

namespace {

std::vector<std::pair<int, int>> normalise(int nodes, std::vector<std::pair<int, int>> edges) {
  std::set<std::pair<int, int>> unique;
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= nodes || j >= nodes) {
      throw ConfigError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                        ") out of range for " + std::to_string(nodes) + " nodes");
    }
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    unique.emplace(i, j);
  }
  return {unique.begin(), unique.end()};
}

}  // namespace

Topology custom_topology(int nodes, std::vector<std::pair<int, int>> edges) {
  if (nodes < 2) throw ConfigError("a network needs at least 2 nodes");
  Topology t;
  t.nodes = nodes;
  t.kind = TopologyKind::kCustom;
  t.edges = normalise(nodes, std::move(edges));
  if (!is_connected(nodes, t.edges)) throw ConfigError("custom edge set is not connected");
  return t;
}

Topology build_topology(TopologyKind kind, int nodes, int rows, int cols) {
  if (nodes < 2) throw ConfigError("a network needs at least 2 nodes");
  std::vector<std::pair<int, int>> edges;
  switch (kind) {
    case TopologyKind::kRing:
      for (int i = 0; i < nodes; ++i) edges.emplace_back(i, (i + 1) % nodes);
      break;
    case TopologyKind::kComplete:
      for (int i = 0; i < nodes; ++i)
        for (int j = i + 1; j < nodes; ++j) edges.emplace_back(i, j);
      break;
    case TopologyKind::kStar:
      for (int i = 1; i < nodes; ++i) edges.emplace_back(0, i);
      break;
    case TopologyKind::kTorus2d: {
      if (rows <= 0 && cols <= 0) {
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(nodes))));
        rows = cols = side;
      } else if (rows <= 0) {
        rows = nodes / cols;
      } else if (cols <= 0) {
        cols = nodes / rows;
      }
      if (rows < 1 || cols < 1 || rows * cols != nodes) {
        throw ConfigError("torus2d dims " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " do not factor " + std::to_string(nodes) + " nodes");
      }
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          const int u = r * cols + c;
          edges.emplace_back(u, ((r + 1) % rows) * cols + c);
          edges.emplace_back(u, r * cols + (c + 1) % cols);
        }
      }
      break;
    }
    case TopologyKind::kCustom:
      throw ConfigError("custom topologies need an explicit edge list or matrix file");
  }
  Topology t = custom_topology(nodes, std::move(edges));
  t.kind = kind;
  if (kind == TopologyKind::kTorus2d) {
    t.rows = rows;
    t.cols = cols;
  }
  return t;
}

namespace {

MixingMatrix finish(Mat w) {
  // Fill the diagonal from the off-diagonal row mass.
  for (Index i = 0; i < w.rows(); ++i) {
    w(i, i) = 0.0;
    w(i, i) = 1.0 - w.row(i).sum();
  }
  MixingMatrix out;
  const auto sc = spectral_constants(w);
  out.weights = std::move(w);
  out.rho = sc.rho;
  out.beta = sc.beta;
  return out;
}

}  // namespace

MixingMatrix metropolis_matrix(const Topology& topology) {
  const auto deg = topology.degrees();
  Mat w = Mat::Zero(topology.nodes, topology.nodes);
  for (const auto& [i, j] : topology.edges) {
    const double v = 1.0 / (1.0 + std::max(deg[static_cast<std::size_t>(i)],
                                           deg[static_cast<std::size_t>(j)]));
    w(i, j) = v;
    w(j, i) = v;
  }
  return finish(std::move(w));
}

MixingMatrix uniform_neighbor_matrix(const Topology& topology) {
  const auto deg = topology.degrees();
  const int max_deg = *std::max_element(deg.begin(), deg.end());
  Mat w = Mat::Zero(topology.nodes, topology.nodes);
  for (const auto& [i, j] : topology.edges) {
    w(i, j) = 1.0 / (1.0 + max_deg);
    w(j, i) = w(i, j);
  }
  return finish(std::move(w));
}

MixingMatrix mixing_matrix(const Topology& topology, WeightRule rule) {
  return rule == WeightRule::kMetropolis ? metropolis_matrix(topology)
                                         : uniform_neighbor_matrix(topology);
}

void validate_mixing_matrix(const Mat& w, const Topology* support, double tol) {
  if (w.rows() != w.cols() || w.rows() < 2) {
    throw ConfigError("mixing matrix must be square with at least 2 rows");
  }
  if (!w.allFinite()) throw ConfigError("mixing matrix has non-finite entries");
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw ConfigError("mixing matrix is not symmetric");
  }
  if (w.minCoeff() < -tol) throw ConfigError("mixing matrix has negative entries");
  if ((w.rowwise().sum().array() - 1.0).abs().maxCoeff() > tol ||
      (w.colwise().sum().array() - 1.0).abs().maxCoeff() > tol) {
    throw ConfigError("mixing matrix is not doubly stochastic");
  }
  if (support != nullptr) {
    if (support->nodes != w.rows()) throw ConfigError("mixing matrix size does not match topology");
    for (Index i = 0; i < w.rows(); ++i) {
      for (Index j = 0; j < w.cols(); ++j) {
        if (i != j && w(i, j) > 0.0 && !support->has_edge(static_cast<int>(i), static_cast<int>(j))) {
          throw ConfigError("mixing matrix weight on a non-edge (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
        }
      }
    }
  }
}

MixingMatrix make_mixing_matrix(Mat w, const Topology* support) {
  validate_mixing_matrix(w, support);
  const auto sc = spectral_constants(w);
  MixingMatrix out;
  out.weights = std::move(w);
  out.rho = sc.rho;
  out.beta = sc.beta;
  return out;
}

Mat load_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v = 0.0;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) throw IoError("malformed number in matrix file " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("matrix file " + path.string() + " is empty");
  const auto n = rows.size();
  Mat w(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw IoError("matrix file " + path.string() + " is not square");
    for (std::size_t j = 0; j < n; ++j) w(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return w;
}

Topology topology_of(const Mat& w, double tol) {
  std::vector<std::pair<int, int>> edges;
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = i + 1; j < w.cols(); ++j)
      if (w(i, j) > tol) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return custom_topology(static_cast<int>(w.rows()), std::move(edges));
}

ConsensusStep consensus_step_size(double rho, double delta, double beta) {
  if (!(rho > 0.0 && rho <= 1.0) || !(delta > 0.0 && delta <= 1.0) || !(beta >= 0.0 && beta <= 2.0)) {
    throw ConfigError("consensus step size needs rho, delta in (0,1] and beta in [0,2]");
  }
  const double denom = 16.0 * rho + rho * rho + 4.0 * beta * beta + 2.0 * rho * beta * beta -
                       8.0 * rho * delta;
  // 16 rho - 8 rho delta >= 8 rho > 0 on the valid domain.
  assert(denom > 0.0);
  return {rho * rho * delta / denom, rho * rho * delta / 82.0};
}

}  // namespace adgda
