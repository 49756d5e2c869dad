#pragma once

#include "adgda/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace adgda {

struct RecordRow {
  long t = 0;
  std::vector<double> node_losses;  // f_i at the network average
  double worst_loss = 0.0;
  double avg_loss = 0.0;  // pooled, weighted by shard size
  double worst_acc = 0.0;
  double avg_acc = 0.0;
  double xi_theta = 0.0;
  double xi_lambda = 0.0;
  Vec lambda_bar;
  std::vector<std::uint64_t> bits;  // cumulative per node
  double eta_theta = 0.0;
  // Not serialized: step sizes and running max oracle norms used by the
  // consensus bound checks.
  double eta_lambda = 0.0;
  double g_theta = 0.0;
  double g_lambda = 0.0;
};

struct RunRecord {
  int nodes = 0;
  std::vector<RecordRow> rows;
};

// Header: t,node_loss_0..,worst_loss,avg_loss,worst_acc,avg_acc,xi_theta,
// xi_lambda,lambda_bar_0..,bits_node_0..,eta_theta
std::string csv_header(int nodes);
void write_csv(std::ostream& out, const RunRecord& record);
void write_csv(const std::filesystem::path& path, const RunRecord& record);
RunRecord read_csv(const std::filesystem::path& path);

// Shortest round-trip decimal form; "nan" for NaN.
std::string format_number(double v);

}  // namespace adgda
