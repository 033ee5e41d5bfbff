// diffsim: command-line front end for simulation, optimization, fidelity
// and overhead experiments.

#include <iostream>

#include "CLI11.hpp"
#include "diffsim/harness/commands.hpp"

int main(int argc, char** argv) {
  using namespace diffsim::harness;
  CLI::App app{"Differentiable agent-based simulation toolkit"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string config, out;
  for (const char* name : {"simulate", "optimize", "fidelity", "bench"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory")->required();
    sub->add_option("--threads", opts.threads, "Worker threads for batch evaluation")->check(CLI::PositiveNumber);
    sub->add_option("--seed-offset", opts.seed_offset, "Added to every configured seed");
  }
  app.get_subcommand("simulate")->description("Run one batch and write the objective (and gradient)");
  app.get_subcommand("optimize")->description("Optimize parameters and write the best-so-far trace");
  app.get_subcommand("fidelity")->description("Compare the differentiable model with its reference twin");
  app.get_subcommand("bench")->description("Measure time and memory of both grid twins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }
  opts.config = config;
  opts.out = out;
  return run_command(app.get_subcommands().front()->get_name(), opts, std::cout, std::cerr);
}
