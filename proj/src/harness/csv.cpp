#include "diffsim/harness/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace diffsim::harness {

std::string provenance_comment(std::uint64_t config_hash, std::span<const std::uint64_t> seeds) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "# config_hash=%016llx seeds=", static_cast<unsigned long long>(config_hash));
  std::string out = buf;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_numeric_csv(std::ostream& out, const NumericTable& table, const std::string& comment) {
  if (!comment.empty()) out << comment << '\n';
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

NumericTable read_numeric_csv(std::istream& in) {
  NumericTable table;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      table.header = cells;
      header = true;
      continue;
    }
    if (cells.size() != table.header.size()) throw std::invalid_argument("CSV: ragged row");
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || c.empty()) throw std::invalid_argument("CSV: non-numeric cell '" + c + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (!header) throw std::invalid_argument("CSV: missing header");
  return table;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace diffsim::harness
