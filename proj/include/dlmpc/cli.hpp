#pragma once

#include "dlmpc/orchestrator.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace dlmpc {

struct RunFlags
{
  std::optional<int> max_iterations;
  /// Write solve times as 0 so repeated runs give byte-identical artifacts.
  bool deterministic = false;
  /// Also write synth-dump.json with the windows, set sizes and hyperplanes of every synthesis.
  bool synth_dump = false;
  bool parallel_agents = true;
};

/// Exit codes shared by the commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitViolations = 3;

/// Runs the scenario and writes scenario.json, iterations/q<k>/{trajectories,telemetry}.csv,
/// metrics.json and optionally synth-dump.json under `out_dir`. Returns kExitOk,
/// kExitInfeasible for an infeasible scenario, kExitError otherwise. Progress and
/// diagnostics go to `log`.
int cmd_run(const std::filesystem::path & scenario, const std::filesystem::path & out_dir, const RunFlags & flags, std::ostream & log);

/// Re-checks a run directory: replay, boxes, rates, collisions, monotonicity, telemetry, and
/// the reachability of every synthesis recomputed from the recorded data. Writes
/// verify-report.json. Returns kExitOk, kExitViolations, or kExitError for missing or
/// unreadable artifacts.
int cmd_verify(const std::filesystem::path & artifacts, std::ostream & log);

/// Writes paths.csv, profiles.csv, min_distance.csv and snapshots.csv for plotting.
int cmd_export(const std::filesystem::path & artifacts, const std::filesystem::path & out_dir, std::ostream & log);

/// Record reconstructed from a run directory (trajectories and telemetry; no synthesis).
struct LoadedRun
{
  ScenarioConfig config;
  RunRecord record;
};
/// Throws MissingArtifact when scenario.json or iterations/q0 is absent.
LoadedRun load_run(const std::filesystem::path & artifacts);

}  // namespace dlmpc
