#pragma once

// Experiment configuration: flat `dotted.key = value` text, one entry per
// line, '#' starts a comment. A `scenario = <path>` entry pulls in another
// file of the same format (relative to the including file); entries of the
// including file win. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffsim/epidemics/sir.hpp"
#include "diffsim/optim/optimize.hpp"
#include "diffsim/traffic/grid.hpp"
#include "diffsim/traffic/single_road.hpp"

namespace diffsim::harness {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Config {
 public:
  static Config parse(std::istream& in, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  /// Comma-separated integers; `a..b` expands to the inclusive range.
  std::vector<std::uint64_t> get_seeds(const std::string& key, const std::vector<std::uint64_t>& fallback) const;

  /// Throws ConfigError naming the first key outside the schema.
  void reject_unknown() const;
  /// FNV-1a over the sorted `key=value` lines.
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Every key the harness understands.
const std::vector<std::string>& known_keys();

enum class Variant { SingleRoad, GridStatic, GridNn, Sir };

std::string variant_name(Variant v);

struct SirSetup {
  epidemics::SirConfig model{};
  std::size_t nodes = 500;
  double average_degree = 5.0;
  std::uint64_t graph_seed = 1;
  std::string graph_file;
  double initial_prob = 0.05;
  double recovery_rate = 0.005;
  double coefficient = 0.05;
  /// "attack": final infected + recovered count; "calibration": minus the
  /// squared count error against a reference run at the configured inputs.
  std::string objective = "attack";
  std::uint64_t target_seed = 1000;
};

struct FidelitySettings {
  int samples = 100;
  int runs = 10;
  std::uint64_t input_seed = 1;
  int bins = 50;
};

struct BenchSettings {
  std::vector<int> vehicle_counts{64, 256, 1024};
  int repeats = 3;
  int width = 16;
  int height = 16;
  double duration = 60.0;
};

struct ExperimentConfig {
  Variant variant = Variant::SingleRoad;
  bool reference = false;
  traffic::SingleRoadConfig single_road{};
  traffic::GridConfig grid{};
  std::size_t hidden = 2;
  SirSetup sir{};
  std::vector<std::uint64_t> seeds{1};
  std::string params_file;
  std::uint64_t init_seed = 1;
  bool trajectory = false;
  optim::OptimizerSettings optimizer{};
  std::vector<double> step_sizes;
  FidelitySettings fidelity{};
  BenchSettings bench{};
  std::uint64_t hash = 0;
  std::filesystem::path base_dir;
};

/// Builds and validates; throws ConfigError.
ExperimentConfig build_experiment(const Config& cfg, const std::filesystem::path& base_dir = {});

}  // namespace diffsim::harness
