#pragma once

#include "dlmpc/dynamics.hpp"

#include <vector>

namespace dlmpc {

/// Step-consistency tolerance for recorded trajectories.
inline constexpr double kRecordTolerance = 1e-9;

/// One recorded closed-loop run of a single agent: states x_0..x_T and inputs u_0..u_{T-1}.
struct Trajectory
{
  int agent_id = 0;
  int iteration = 0;
  std::vector<State> states;
  std::vector<Input> inputs;

  /// Number of steps T until the run ended.
  int completion_time() const { return static_cast<int>(inputs.size()); }
  const State & final_state() const { return states.back(); }
};

/// Remaining steps to the end of `trajectory` from time t, i.e. T - t.
/// Throws IndexOutOfRange when t is negative or beyond T.
int cost_to_go(const Trajectory & trajectory, int t);

/// Throws DynamicsMismatch if any recorded transition deviates from the model by more
/// than `tol` in any component, or if the state and input lists are misaligned.
void check_dynamics(const Trajectory & trajectory, const AgentModel & model, double tol = kRecordTolerance);

/// Append-only history of every agent's runs, indexed by iteration.
class IterationDataset
{
public:
  IterationDataset() = default;
  IterationDataset(std::vector<AgentModel> models, std::vector<State> goals, double eps);

  /// Appends one trajectory per agent (ordered by agent id) as the next iteration.
  /// Nothing is stored if any trajectory fails the dynamics check.
  void record_iteration(std::vector<Trajectory> trajectories);

  int num_agents() const { return static_cast<int>(models_.size()); }
  int num_iterations() const { return runs_.empty() ? 0 : static_cast<int>(runs_.front().size()); }

  const Trajectory & trajectory(int agent, int iteration) const;
  const std::vector<Trajectory> & trajectories(int agent) const { return runs_.at(agent); }
  bool successful(int agent, int iteration) const;
  /// Completion times of every stored iteration (successful or not).
  const std::vector<int> & completion_times(int agent) const { return times_.at(agent); }
  /// Iteration indices whose run reached the goal, ascending.
  std::vector<int> successful_iterations(int agent) const;

  const State & goal(int agent) const { return goals_.at(agent); }
  const AgentModel & model(int agent) const { return models_.at(agent); }
  double eps() const { return eps_; }

private:
  std::vector<AgentModel> models_;
  std::vector<State> goals_;
  double eps_ = 1e-4;
  std::vector<std::vector<Trajectory>> runs_;
  std::vector<std::vector<int>> times_;
  std::vector<std::vector<bool>> success_;
};

}  // namespace dlmpc
