#include "dlmpc/datastore.hpp"

#include "dlmpc/errors.hpp"

#include <string>

namespace dlmpc {

int cost_to_go(const Trajectory & trajectory, int t)
{
  const int T = trajectory.completion_time();
  if (t < 0 || t > T) {
    throw IndexOutOfRange("cost_to_go: time " + std::to_string(t) + " outside [0, " + std::to_string(T) + "]");
  }
  return T - t;
}

void check_dynamics(const Trajectory & trajectory, const AgentModel & model, double tol)
{
  if (trajectory.states.size() != trajectory.inputs.size() + 1) {
    throw DynamicsMismatch(
      "agent " + std::to_string(trajectory.agent_id) + ": " + std::to_string(trajectory.states.size()) +
      " states for " + std::to_string(trajectory.inputs.size()) + " inputs");
  }
  for (std::size_t k = 0; k < trajectory.inputs.size(); ++k) {
    const State next = model.step(trajectory.states[k], trajectory.inputs[k]);
    const double err = (next - trajectory.states[k + 1]).cwiseAbs().maxCoeff();
    if (!(err <= tol)) {
      throw DynamicsMismatch(
        "agent " + std::to_string(trajectory.agent_id) + " iteration " + std::to_string(trajectory.iteration) +
        ": transition at t=" + std::to_string(k) + " deviates by " + std::to_string(err));
    }
  }
}

IterationDataset::IterationDataset(std::vector<AgentModel> models, std::vector<State> goals, double eps)
    : models_(std::move(models)), goals_(std::move(goals)), eps_(eps),
      runs_(models_.size()), times_(models_.size()), success_(models_.size())
{
  if (models_.size() != goals_.size()) { throw std::invalid_argument("one goal per agent model required"); }
}

void IterationDataset::record_iteration(std::vector<Trajectory> trajectories)
{
  if (trajectories.size() != models_.size()) {
    throw std::invalid_argument(
      "record_iteration: expected " + std::to_string(models_.size()) + " trajectories, got " +
      std::to_string(trajectories.size()));
  }
  const int q = num_iterations();
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    auto & tr = trajectories[i];
    tr.agent_id = static_cast<int>(i);
    tr.iteration = q;
    check_dynamics(tr, models_[i]);
  }
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const bool ok = goal_reached(trajectories[i].final_state(), goals_[i], eps_);
    times_[i].push_back(trajectories[i].completion_time());
    success_[i].push_back(ok);
    runs_[i].push_back(std::move(trajectories[i]));
  }
}

const Trajectory & IterationDataset::trajectory(int agent, int iteration) const
{
  return runs_.at(agent).at(iteration);
}

bool IterationDataset::successful(int agent, int iteration) const { return success_.at(agent).at(iteration); }

std::vector<int> IterationDataset::successful_iterations(int agent) const
{
  std::vector<int> out;
  const auto & flags = success_.at(agent);
  for (std::size_t q = 0; q < flags.size(); ++q) {
    if (flags[q]) { out.push_back(static_cast<int>(q)); }
  }
  return out;
}

}  // namespace dlmpc
