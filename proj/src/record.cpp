#include "adgda/record.hpp"

#include "adgda/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace adgda {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_header(int nodes) {
  std::string h = "t";
  for (int i = 0; i < nodes; ++i) h += ",node_loss_" + std::to_string(i);
  h += ",worst_loss,avg_loss,worst_acc,avg_acc,xi_theta,xi_lambda";
  for (int i = 0; i < nodes; ++i) h += ",lambda_bar_" + std::to_string(i);
  for (int i = 0; i < nodes; ++i) h += ",bits_node_" + std::to_string(i);
  h += ",eta_theta";
  return h;
}

void write_csv(std::ostream& out, const RunRecord& record) {
  out << csv_header(record.nodes) << '\n';
  for (const auto& row : record.rows) {
    out << row.t;
    for (double v : row.node_losses) out << ',' << format_number(v);
    out << ',' << format_number(row.worst_loss) << ',' << format_number(row.avg_loss) << ','
        << format_number(row.worst_acc) << ',' << format_number(row.avg_acc) << ','
        << format_number(row.xi_theta) << ',' << format_number(row.xi_lambda);
    for (Index i = 0; i < row.lambda_bar.size(); ++i) out << ',' << format_number(row.lambda_bar(i));
    for (auto b : row.bits) out << ',' << b;
    out << ',' << format_number(row.eta_theta) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const RunRecord& record) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out, record);
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("bad number '" + s + "' in CSV");
  return v;
}

}  // namespace

RunRecord read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV " + path.string());
  int nodes = 0;
  {
    std::istringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (col.rfind("node_loss_", 0) == 0) ++nodes;
    }
  }
  if (line != csv_header(nodes)) throw IoError("unexpected CSV header in " + path.string());
  RunRecord record;
  record.nodes = nodes;
  const auto m = static_cast<std::size_t>(nodes);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8 + 3 * m) throw IoError("bad CSV row width in " + path.string());
    RecordRow row;
    std::size_t k = 0;
    row.t = std::stol(cells[k++]);
    for (std::size_t i = 0; i < m; ++i) row.node_losses.push_back(parse_double(cells[k++]));
    row.worst_loss = parse_double(cells[k++]);
    row.avg_loss = parse_double(cells[k++]);
    row.worst_acc = parse_double(cells[k++]);
    row.avg_acc = parse_double(cells[k++]);
    row.xi_theta = parse_double(cells[k++]);
    row.xi_lambda = parse_double(cells[k++]);
    row.lambda_bar.resize(nodes);
    for (std::size_t i = 0; i < m; ++i) row.lambda_bar(static_cast<Index>(i)) = parse_double(cells[k++]);
    for (std::size_t i = 0; i < m; ++i) row.bits.push_back(std::stoull(cells[k++]));
    row.eta_theta = parse_double(cells[k++]);
    record.rows.push_back(std::move(row));
  }
  return record;
}

}  // namespace adgda
