#pragma once

#include "dlmpc/datastore.hpp"
#include "dlmpc/synthesis.hpp"
#include "dlmpc/trajopt.hpp"

#include <optional>
#include <vector>

namespace dlmpc {

/// Static per-agent controller setup.
struct AgentConfig
{
  int agent_id = 0;
  AgentModel model;
  Bounds bounds;
  State start = State::Zero();
  State goal = State::Zero();
  double eps = 1e-4;
  int horizon = 20;
  OcpSettings ocp;
  /// Slack of the cheap reachability filter applied before each candidate solve.
  double reach_slack = 1e-6;
};

/// A terminal safe-set point at time t+steps with the bound it implies on the total cost.
struct CandidateTerminal
{
  SafeSetPoint point;
  int value = 0;
  /// cost_to_come + steps + value.
  int bound = 0;
  /// Horizon used for the solve; below N only for early arrival at the goal.
  int steps = 0;
};

/// Candidates at one time, pruned against `prev_completion` and sorted by
/// (bound, source iteration, source time). Throws AllPruned when nothing survives.
std::vector<CandidateTerminal> enumerate_candidates(
  const std::vector<ValueEntry> & entries, int cost_to_come, int horizon, int prev_completion);

/// Receding-horizon plan of N inputs ending in a declared safe-set point.
struct Plan
{
  std::vector<State> states;
  std::vector<Input> inputs;
  CandidateTerminal terminal;
  double terminal_gap = 0.0;
};

struct StepTelemetry
{
  int t = 0;
  int candidates = 0;
  int pruned = 0;
  int filtered = 0;
  int solves = 0;
  int solved = 0;
  int failed = 0;
  bool used_fallback = false;
  int realized_cost = 0;
  double terminal_gap = 0.0;
  double solve_ms = 0.0;
};

struct FhocpOutcome
{
  Plan plan;
  int realized_cost = 0;
  StepTelemetry telemetry;
};

/// Σ_{k<N} 1(x_k not at goal) + value of the declared terminal.
int realized_cost(const Plan & plan, const State & goal, double eps);

/// Controller of one agent for one iteration. It reads only its own frozen artifacts from
/// the previous synthesis and its own previous trajectory.
class LmpcAgent
{
public:
  LmpcAgent(AgentConfig config, const AgentArtifacts & artifacts, const Trajectory & previous);

  /// Best plan at time t from `state`, given the input applied at t-1.
  /// Throws NoFeasibleCandidate if neither a candidate nor the fallback is available.
  FhocpOutcome solve_fhocp(const State & state, int t, const Input & previous_input) const;

  /// Previous plan shifted by one step and extended with the stored successor input of its
  /// terminal point. Throws NoPreviousSolution before the first step.
  Plan fallback_candidate(const State & state, int t) const;

  /// First input of the best plan; the plan is kept for the next step's fallback.
  Input control_step(const State & state, int t, const Input & previous_input);

  struct Run
  {
    Trajectory trajectory;
    std::vector<StepTelemetry> telemetry;
  };

  /// Closed loop from the start state until the goal test passes. Throws Error when
  /// `max_steps` elapse first.
  Run run(int max_steps);

  const std::optional<FhocpOutcome> & last_outcome() const { return last_; }

private:
  AgentConfig cfg_;
  const AgentArtifacts & art_;
  const Trajectory & previous_;
  std::optional<FhocpOutcome> last_;

  Plan witness_plan() const;
  std::optional<Plan> solve_candidate(
    const State & state, int t, const Input & previous_input, const CandidateTerminal & cand,
    const std::vector<Input> & warm) const;
  OcpProblem make_problem(const State & state, int t, const Input & previous_input, const CandidateTerminal & cand) const;
  CandidateTerminal terminal_for(const SafeSetPoint & point, int t, int steps) const;
};

}  // namespace dlmpc
