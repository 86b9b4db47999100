#include "dlmpc/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char ** argv)
{
  CLI::App app{"Decentralized learning MPC for multi-vehicle motion planning"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out;
  std::string artifacts;
  int max_iterations = -1;
  dlmpc::RunFlags flags;
  bool sequential = false;

  auto * run = app.add_subcommand("run", "Run a scenario and write its artifacts");
  run->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--max-iterations", max_iterations, "Override the scenario's iteration count")->check(CLI::NonNegativeNumber);
  run->add_flag("--seedless-deterministic", flags.deterministic, "Write solve times as 0 for byte-identical artifacts");
  run->add_flag("--synth-dump", flags.synth_dump, "Also write synth-dump.json");
  run->add_flag("--sequential", sequential, "Run the agents of an iteration one after another");

  auto * verify = app.add_subcommand("verify", "Check a run directory");
  verify->add_option("--artifacts", artifacts, "Run directory")->required();

  auto * exp = app.add_subcommand("export", "Write plot-ready tables from a run directory");
  exp->add_option("--artifacts", artifacts, "Run directory")->required();
  exp->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (max_iterations >= 0) { flags.max_iterations = max_iterations; }
    flags.parallel_agents = !sequential;
    return dlmpc::cmd_run(scenario, out, flags, std::cerr);
  }
  if (verify->parsed()) { return dlmpc::cmd_verify(artifacts, std::cerr); }
  return dlmpc::cmd_export(artifacts, out, std::cerr);
}
