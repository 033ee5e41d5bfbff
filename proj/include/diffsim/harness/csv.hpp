#pragma once

// CSV helpers shared by all subcommands. Every file carries a header row and
// a leading comment line recording the config hash and the seed list.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace diffsim::harness {

/// `# config_hash=<16 hex digits> seeds=<comma list>`
std::string provenance_comment(std::uint64_t config_hash, std::span<const std::uint64_t> seeds);

/// Shortest text that parses back to exactly `x` ("%.17g").
std::string format_double(double x);

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_numeric_csv(std::ostream& out, const NumericTable& table, const std::string& comment = {});
/// Skips '#' lines; throws std::invalid_argument on ragged or non-numeric rows.
NumericTable read_numeric_csv(std::istream& in);

/// Linear interpolation between order statistics (q in [0, 1]).
double quantile(std::vector<double> xs, double q);

}  // namespace diffsim::harness
