#pragma once

#include "dlmpc/orchestrator.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dlmpc {

/// Parses a scenario document. Throws ConfigError naming the line and column of a syntax
/// error or the path of the offending field (e.g. `agents[1].goal[3]`). Unbounded box
/// entries are written as null.
ScenarioConfig parse_scenario(const std::string & text);
ScenarioConfig load_scenario(const std::filesystem::path & path);
/// Pretty-printed scenario document with keys in a fixed order; parse_scenario inverts it.
std::string emit_scenario(const ScenarioConfig & config);

/// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double value);

/// One row per recorded state, agents ascending, time ascending:
/// agent,iteration,t,x,y,psi,v,delta,a,terminal_gap,solve_ms
/// The last row of each agent leaves the input and telemetry fields empty. With
/// `zero_timing`, solve_ms is written as 0.
void write_trajectories_csv(std::ostream & out, const IterationRecord & record, bool zero_timing);
/// Trajectories of one iteration file, one per agent in agent order. Throws ConfigError on
/// malformed rows.
std::vector<Trajectory> read_trajectories_csv(std::istream & in, int num_agents);

/// Per-step controller telemetry:
/// agent,iteration,t,candidates,pruned,filtered,solves,solved,failed,used_fallback,realized_cost,terminal_gap,solve_ms
void write_telemetry_csv(std::ostream & out, const IterationRecord & record, bool zero_timing);
std::vector<std::vector<StepTelemetry>> read_telemetry_csv(std::istream & in, int num_agents);

/// metrics.json content: per-iteration completion times, max and sum costs, minimum
/// distance, synthesis summary and solve-time statistics.
std::string emit_metrics(const RunRecord & record, const ScenarioConfig & config, bool zero_timing);

/// Reads a whole file; throws MissingArtifact if it cannot be opened.
std::string read_file(const std::filesystem::path & path);
void write_file(const std::filesystem::path & path, const std::string & content);

}  // namespace dlmpc
