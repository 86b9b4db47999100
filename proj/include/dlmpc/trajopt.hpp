#pragma once

#include "dlmpc/dynamics.hpp"
#include "dlmpc/separation.hpp"

#include <optional>
#include <vector>

namespace dlmpc {

/// Fixed-horizon feasibility problem: reach `terminal_target` exactly in `horizon` steps
/// from `initial_state` under box, rate and per-step position half-plane constraints.
struct OcpProblem
{
  int horizon = 1;
  AgentModel model;
  State initial_state = State::Zero();
  State terminal_target = State::Zero();
  Bounds bounds;
  /// Input applied just before step 0; the rate limit binds u_0 to it when present.
  std::optional<Input> previous_input;
  /// Input that will follow u_{N-1}; the rate limit binds u_{N-1} to it when present.
  std::optional<Input> terminal_successor_input;
  /// Half-planes on the position of x_k for k = 0..N-1. Empty means none.
  std::vector<std::vector<HalfPlane>> halfplanes;

  /// Throws std::invalid_argument on a non-positive horizon, an empty box, a target outside
  /// the state box or a half-plane list of the wrong length.
  void validate() const;
};

enum class OcpStatus
{
  Solved,
  Infeasible,
  MaxIterations,
};

const char * to_string(OcpStatus status);

struct OcpSolution
{
  OcpStatus status = OcpStatus::Infeasible;
  std::vector<State> states;
  std::vector<Input> inputs;
  /// Largest residual over all constraints including the terminal equality.
  double max_violation = 0.0;
  /// Largest residual of the terminal equality alone.
  double terminal_gap = 0.0;
  int iterations_used = 0;
};

struct OcpSettings
{
  double tol_feas = 1e-6;
  double tol_term = 1e-5;
  /// Targets at which the solver stops early; tighter than the acceptance tolerances so
  /// that chained solves do not accumulate slack.
  double target_feas = 1e-9;
  double target_term = 1e-10;
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  int max_outer = 8;
  int max_inner = 100;
  double rate_weight = 1e-3;
  /// An outer iteration from the third on that keeps more than this fraction of the
  /// previous path violation, while still above `stall_floor`, ends the solve as Infeasible.
  double stall_ratio = 0.9;
  double stall_floor = 1e-3;
};

struct ViolationBreakdown
{
  /// Dynamics defects, boxes, rates and half-planes.
  double path = 0.0;
  /// Terminal equality.
  double terminal = 0.0;

  double max() const { return path > terminal ? path : terminal; }
};

/// Residuals of a candidate trajectory, each clipped at zero.
/// Throws LengthMismatch unless there are N+1 states and N inputs.
ViolationBreakdown violations(const OcpProblem & problem, const std::vector<State> & states, const std::vector<Input> & inputs);
double max_violation(const OcpProblem & problem, const std::vector<State> & states, const std::vector<Input> & inputs);

std::vector<State> rollout(const AgentModel & model, const State & x0, const std::vector<Input> & inputs);

/// Augmented-Lagrangian iterative LQR on the rolled-out dynamics. The returned states are
/// the exact rollout of the returned inputs. `warm_start` supplies initial inputs (length N).
OcpSolution solve_ocp(
  const OcpProblem & problem, const std::optional<std::vector<Input>> & warm_start = std::nullopt,
  const OcpSettings & settings = {});

}  // namespace dlmpc
