#pragma once

#include "dlmpc/datastore.hpp"
#include "dlmpc/lmpc_agent.hpp"
#include "dlmpc/synthesis.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dlmpc {

struct AgentSpec
{
  State start = State::Zero();
  State goal = State::Zero();
  double radius = 0.75;
  AgentModel model;
};

/// Straight-leg trapezoidal speed profile used for the first, sequential execution.
struct InitialProfile
{
  double cruise_speed = 1.5;
  int ramp_steps = 25;
};

struct ScenarioConfig
{
  std::string name = "scenario";
  std::vector<AgentSpec> agents;
  int horizon = 20;
  int iterations = 20;
  SynthesisParams synthesis;
  WindowSchedule window_schedule = WindowSchedule::Global;
  double eps = 1e-4;
  Bounds bounds;
  InitialProfile initial;

  /// Throws ConfigError on malformed values and ScenarioInfeasible when two starts or two
  /// goals overlap, or when a goal lies inside another agent's start buffer.
  void validate() const;
  std::vector<double> radii() const;
};

/// One trajectory per agent executed one after another: agent i waits at its start until
/// agents before it have arrived. Throws ScenarioInfeasible if the composite collides.
std::vector<Trajectory> generate_initial_trajectories(const ScenarioConfig & config);

/// Position of `trajectory` at time t, parked at its last state after completion.
Position position_at(const Trajectory & trajectory, int t);

/// Smallest center distance between any two agents over all times, finished agents parked.
double min_pairwise_distance(const std::vector<Trajectory> & trajectories);
/// Smallest value of distance - (r_i + r_j) over all pairs and times.
double min_pairwise_clearance(const std::vector<Trajectory> & trajectories, const std::vector<double> & radii);

struct SynthesisSummary
{
  SynthesisParams params_used;
  /// Windows used at each time.
  std::vector<SynthesisParams> windows;
  int shrink_rounds = 0;
  std::size_t points_checked = 0;
  std::size_t reachability_violations = 0;
};

struct IterationRecord
{
  int iteration = 0;
  std::vector<Trajectory> trajectories;
  /// Per agent, per step; empty for the initial iteration.
  std::vector<std::vector<StepTelemetry>> telemetry;
  /// Synthesis that produced the controllers of this iteration (absent for iteration 0).
  std::optional<SynthesisSummary> synthesis;

  std::vector<int> completion_times() const;
  int global_cost() const;
  int sum_cost() const;
};

struct RunRecord
{
  std::vector<IterationRecord> iterations;
  bool converged = false;

  std::vector<int> global_costs() const;
};

struct RunOptions
{
  /// Overrides the configured iteration count when non-negative.
  int max_iterations = -1;
  /// Runs agents of one iteration on separate threads.
  bool parallel_agents = true;
  std::function<void(const IterationRecord &)> on_iteration;
  /// Called with each synthesis result before the iteration it configures runs.
  std::function<void(int, const SynthesisResult &, const ReachabilityReport &)> on_synthesis;
};

/// Agent controller settings derived from the scenario.
AgentConfig agent_config(const ScenarioConfig & config, int agent);

/// One closed-loop execution of every agent against frozen synthesis output.
/// `previous` holds each agent's latest successful trajectory.
IterationRecord run_iteration(
  int q, const SynthesisResult & synthesis, const ScenarioConfig & config, const std::vector<const Trajectory *> & previous,
  int max_steps, bool parallel_agents);

/// Initial execution followed by up to Z learning iterations, stopping early once two
/// consecutive iterations have the same completion times.
RunRecord run(const ScenarioConfig & config, const RunOptions & options = {});

struct RunViolation
{
  int iteration = 0;
  int agent = -1;
  int time = -1;
  std::string what;
};

struct RunReport
{
  std::vector<RunViolation> violations;
  double min_clearance = 0.0;

  bool ok() const { return violations.empty(); }
};

/// Tolerances used by verify_run.
inline constexpr double kDistanceTolerance = 1e-6;
inline constexpr double kReplayTolerance = 1e-6;

/// Checks collision clearance, cost monotonicity, dynamics replay, box and rate limits,
/// goal convergence and, where telemetry exists, the per-step cost decrease.
RunReport verify_run(const RunRecord & record, const ScenarioConfig & config);

/// Dataset holding every iteration of a record.
IterationDataset make_dataset(const ScenarioConfig & config);

}  // namespace dlmpc
