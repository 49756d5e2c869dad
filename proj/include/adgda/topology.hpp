#pragma once

#include "adgda/errors.hpp"
#include "adgda/types.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adgda {

enum class TopologyKind { kRing, kTorus2d, kComplete, kStar, kCustom };

std::string_view to_string(TopologyKind kind);
TopologyKind parse_topology_kind(std::string_view name);

// Undirected connected communication graph. Self-communication is implied and
// never stored in `edges`; each pair is stored once with first < second.
struct Topology {
  int nodes = 0;
  std::vector<std::pair<int, int>> edges;
  TopologyKind kind = TopologyKind::kCustom;
  int rows = 0;  // torus2d only
  int cols = 0;

  std::vector<int> degrees() const;
  bool has_edge(int i, int j) const;
};

// Builds a ring, complete or star (center 0) graph on m nodes. Torus dims
// default to a square layout and must then satisfy rows * cols == m.
Topology build_topology(TopologyKind kind, int nodes, int rows = 0, int cols = 0);

// Validates and normalises a user edge list. Throws ConfigError when the graph
// is disconnected or an endpoint is out of range.
Topology custom_topology(int nodes, std::vector<std::pair<int, int>> edges);

bool is_connected(int nodes, const std::vector<std::pair<int, int>>& edges);

enum class WeightRule { kMetropolis, kUniformNeighbor };

std::string_view to_string(WeightRule rule);
WeightRule parse_weight_rule(std::string_view name);

struct SpectralConstants {
  double rho = 0.0;   // 1 - |second largest eigenvalue modulus|
  double beta = 0.0;  // ||I - W||_2
};

struct MixingMatrix {
  Mat weights;
  double rho = 0.0;
  double beta = 0.0;

  Index size() const { return weights.rows(); }
};

/// Spectral gap and ||I - W||_2 of a symmetric mixing matrix, computed on the
/// dense matrix. Throws ConfigError when the gap is not positive, which
/// happens for disconnected graphs and for periodic (bipartite, zero
/// diagonal) weightings.
template <typename Derived>
SpectralConstants spectral_constants(const Eigen::MatrixBase<Derived>& w);

// w_ij = 1 / (1 + max(deg_i, deg_j)) on edges, diagonal fills the row.
MixingMatrix metropolis_matrix(const Topology& topology);

// w_ij = 1 / (1 + max_k deg_k) on edges, diagonal fills the row.
MixingMatrix uniform_neighbor_matrix(const Topology& topology);

MixingMatrix mixing_matrix(const Topology& topology, WeightRule rule);

// Checks symmetry, nonnegativity and unit row/column sums to `tol`, and if a
// topology is given, that the support of W lies on its edges.
void validate_mixing_matrix(const Mat& w, const Topology* support = nullptr, double tol = 1e-12);

// Validates W and attaches its spectral constants.
MixingMatrix make_mixing_matrix(Mat w, const Topology* support = nullptr);

// Whitespace-separated rows, one matrix row per line. Blank lines and lines
// starting with '#' are skipped.
Mat load_matrix_file(const std::filesystem::path& path);

// Graph implied by the off-diagonal support of W.
Topology topology_of(const Mat& w, double tol = 0.0);

struct ConsensusStep {
  double gamma = 0.0;  // consensus step size
  double c = 0.0;      // contraction constant rho^2 delta / 82
};

// gamma = rho^2 delta / (16 rho + rho^2 + 4 beta^2 + 2 rho beta^2 - 8 rho delta)
ConsensusStep consensus_step_size(double rho, double delta, double beta);

// ---------------------------------------------------------------------------

template <typename Derived>
SpectralConstants spectral_constants(const Eigen::MatrixBase<Derived>& w) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Dense dense = w;
  Eigen::SelfAdjointEigenSolver<Dense> solver(dense, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigen decomposition of the mixing matrix failed");
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> moduli = solver.eigenvalues().cwiseAbs();
  std::sort(moduli.data(), moduli.data() + moduli.size(), std::greater<Scalar>());

  SpectralConstants out;
  out.rho = moduli.size() > 1 ? static_cast<double>(1 - moduli(1)) : 1.0;
  out.beta = static_cast<double>((Scalar(1) - solver.eigenvalues().array()).abs().maxCoeff());
  if (!(out.rho > 1e-12)) {
    throw ConfigError("mixing matrix has no spectral gap (disconnected or periodic graph)");
  }
  return out;
}

}  // namespace adgda
