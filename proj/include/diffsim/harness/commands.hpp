#pragma once

// Subcommands of the `diffsim` tool. Each reads an experiment config and
// writes CSV files into the output directory.

#include <filesystem>
#include <iosfwd>
#include <string>

namespace diffsim::harness {

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  unsigned threads = 1;
  std::uint64_t seed_offset = 0;
};

/// Exit codes returned by run_command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

int cmd_simulate(const CommandOptions& opts, std::ostream& log);
int cmd_optimize(const CommandOptions& opts, std::ostream& log);
int cmd_fidelity(const CommandOptions& opts, std::ostream& log);
int cmd_bench(const CommandOptions& opts, std::ostream& log);

/// Dispatches by name and maps ConfigError / std::invalid_argument raised
/// while loading the config to exit code 2 and every other failure to 3.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& log, std::ostream& err);

}  // namespace diffsim::harness
