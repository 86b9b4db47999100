#include "dlmpc/lmpc_agent.hpp"

#include "dlmpc/errors.hpp"

#include <algorithm>
#include <chrono>
#include <string>
#include <tuple>

namespace dlmpc {

namespace {

auto order_key(const CandidateTerminal & c)
{
  return std::make_tuple(c.bound, c.point.source_iteration, c.point.source_time, c.steps);
}

auto provenance(const Plan & p)
{
  return std::make_pair(p.terminal.point.source_iteration, p.terminal.point.source_time);
}

// Index of the first state at the goal, or -1.
int first_arrival(const Plan & plan, const State & goal, double eps)
{
  for (std::size_t k = 0; k < plan.states.size(); ++k) {
    if (goal_reached(plan.states[k], goal, eps)) { return static_cast<int>(k); }
  }
  return -1;
}

}  // namespace

std::vector<CandidateTerminal> enumerate_candidates(
  const std::vector<ValueEntry> & entries, int cost_to_come, int horizon, int prev_completion)
{
  std::vector<CandidateTerminal> out;
  for (const auto & e : entries) {
    const int bound = cost_to_come + horizon + e.value;
    if (bound > prev_completion) { continue; }
    out.push_back({e.point, e.value, bound, horizon});
  }
  if (out.empty()) { throw AllPruned("every terminal candidate exceeds the previous completion time"); }
  std::sort(out.begin(), out.end(), [](const auto & a, const auto & b) { return order_key(a) < order_key(b); });
  return out;
}

int realized_cost(const Plan & plan, const State & goal, double eps)
{
  int cost = plan.terminal.value;
  for (std::size_t k = 0; k + 1 < plan.states.size(); ++k) {
    if (!goal_reached(plan.states[k], goal, eps)) { ++cost; }
  }
  return cost;
}

LmpcAgent::LmpcAgent(AgentConfig config, const AgentArtifacts & artifacts, const Trajectory & previous)
    : cfg_(std::move(config)), art_(artifacts), previous_(previous)
{
  if (cfg_.horizon < 1) { throw ConfigError("horizon must be positive"); }
}

CandidateTerminal LmpcAgent::terminal_for(const SafeSetPoint & point, int t, int steps) const
{
  const ValueEntry * e = find_value_entry(art_.values, point.state, t + cfg_.horizon);
  const int value = e ? e->value : point.cost_to_go;
  return {point, value, t + steps + value, steps};
}

OcpProblem LmpcAgent::make_problem(
  const State & state, int t, const Input & previous_input, const CandidateTerminal & cand) const
{
  OcpProblem pb;
  pb.horizon = cand.steps;
  pb.model = cfg_.model;
  pb.initial_state = state;
  pb.terminal_target = cand.point.state;
  pb.bounds = cfg_.bounds;
  pb.previous_input = previous_input;
  pb.terminal_successor_input = cand.point.successor_input;
  pb.halfplanes.resize(cand.steps);
  for (int k = 0; k < cand.steps; ++k) { pb.halfplanes[k] = art_.hyperplanes.at(t + k); }
  return pb;
}

std::optional<Plan> LmpcAgent::solve_candidate(
  const State & state, int t, const Input & previous_input, const CandidateTerminal & cand,
  const std::vector<Input> & warm) const
{
  const int N = cfg_.horizon;
  const OcpProblem pb = make_problem(state, t, previous_input, cand);
  std::vector<Input> warm_k(warm.begin(), warm.begin() + cand.steps);
  const OcpSolution sol = solve_ocp(pb, warm_k, cfg_.ocp);
  if (sol.status != OcpStatus::Solved) { return std::nullopt; }

  Plan plan;
  plan.inputs = sol.inputs;
  plan.inputs.resize(N, Input::Zero());
  plan.states = rollout(cfg_.model, state, plan.inputs);
  plan.terminal = cand;
  plan.terminal_gap = sol.terminal_gap;
  // Early arrival: the padded tail rests at the goal and must respect the later steps too.
  for (int k = cand.steps; k < N; ++k) {
    const State & x = plan.states[k];
    const double v = std::max(
      {art_.hyperplanes.violation(t + k, x.head<2>()), (x - cfg_.bounds.state_hi).maxCoeff(),
       (cfg_.bounds.state_lo - x).maxCoeff()});
    if (v > cfg_.ocp.tol_feas) { return std::nullopt; }
  }
  if (cand.steps < N) {
    plan.terminal_gap = (plan.states[N] - cand.point.state).cwiseAbs().maxCoeff();
  }
  return plan;
}

Plan LmpcAgent::witness_plan() const
{
  const int N = cfg_.horizon;
  const int T = previous_.completion_time();
  const int k = std::min(N, T);
  const SafeSetPoint * point = art_.safe_set.find(N, previous_.iteration, k);
  if (!point) { throw NoPreviousSolution("previous run is not part of the safe set at the horizon"); }
  Plan plan;
  plan.inputs.assign(previous_.inputs.begin(), previous_.inputs.begin() + k);
  plan.inputs.resize(N, Input::Zero());
  plan.states = rollout(cfg_.model, cfg_.start, plan.inputs);
  plan.terminal = terminal_for(*point, 0, N);
  plan.terminal_gap = (plan.states[N] - point->state).cwiseAbs().maxCoeff();
  return plan;
}

Plan LmpcAgent::fallback_candidate(const State & state, int t) const
{
  if (!last_) { throw NoPreviousSolution("no previous plan to shift"); }
  const Plan & prev = last_->plan;
  const SafeSetPoint & end = prev.terminal.point;
  const int N = cfg_.horizon;
  const SafeSetPoint * next = end.goal ? art_.safe_set.find(t + N, end.source_iteration, end.source_time)
                                       : art_.safe_set.find(t + N, end.source_iteration, end.source_time + 1);
  if (!next) { throw NoPreviousSolution("successor of the previous terminal point is not in the safe set"); }

  Plan plan;
  plan.inputs.assign(prev.inputs.begin() + 1, prev.inputs.end());
  plan.inputs.push_back(end.successor_input);
  plan.states = rollout(cfg_.model, state, plan.inputs);
  plan.terminal = terminal_for(*next, t, N);
  plan.terminal_gap = (plan.states[N] - next->state).cwiseAbs().maxCoeff();
  return plan;
}

FhocpOutcome LmpcAgent::solve_fhocp(const State & state, int t, const Input & previous_input) const
{
  const auto clock_start = std::chrono::steady_clock::now();
  const int N = cfg_.horizon;
  FhocpOutcome out;
  StepTelemetry & tel = out.telemetry;
  tel.t = t;

  if (goal_reached(state, cfg_.goal, cfg_.eps)) {
    out.plan.inputs.assign(N, Input::Zero());
    out.plan.states = rollout(cfg_.model, state, out.plan.inputs);
    out.plan.terminal = {SafeSetPoint{-1, 0, cfg_.goal, Input::Zero(), 0, true}, 0, t, 0};
    return out;
  }

  const auto & entries = art_.values.at(t + N);
  tel.candidates = static_cast<int>(entries.size());
  std::vector<CandidateTerminal> cands;
  try {
    cands = enumerate_candidates(entries, t, N, art_.last_completion);
  } catch (const AllPruned &) {
  }
  tel.pruned = tel.candidates - static_cast<int>(cands.size());
  for (const auto & e : entries) {
    if (!e.point.goal) { continue; }
    for (int j = 1; j < N && t + j <= art_.last_completion; ++j) { cands.push_back({e.point, 0, t + j, j}); }
  }
  std::sort(cands.begin(), cands.end(), [](const auto & a, const auto & b) { return order_key(a) < order_key(b); });

  std::optional<Plan> best;
  int best_cost = 0;
  bool from_fallback = false;
  try {
    best = last_ ? fallback_candidate(state, t) : witness_plan();
    best_cost = realized_cost(*best, cfg_.goal, cfg_.eps);
    from_fallback = true;
  } catch (const NoPreviousSolution &) {
  }

  std::vector<Input> warm = best ? best->inputs : std::vector<Input>(N, previous_input);
  for (const auto & cand : cands) {
    if (best) {
      const int total = t + best_cost;
      if (total < cand.bound) { break; }
      if (total == cand.bound && provenance(*best) <= std::make_pair(cand.point.source_iteration, cand.point.source_time)) {
        break;
      }
    }
    if (!cfg_.model.may_reach(state, cand.point.state, cand.steps, cfg_.bounds, cfg_.reach_slack)) {
      ++tel.filtered;
      continue;
    }
    ++tel.solves;
    auto plan = solve_candidate(state, t, previous_input, cand, warm);
    if (!plan) {
      ++tel.failed;
      continue;
    }
    ++tel.solved;
    const int cost = realized_cost(*plan, cfg_.goal, cfg_.eps);
    if (!best || std::make_pair(cost, provenance(*plan)) < std::make_pair(best_cost, provenance(*best))) {
      best = std::move(plan);
      best_cost = cost;
      from_fallback = false;
    }
  }
  if (!best) {
    throw NoFeasibleCandidate("agent " + std::to_string(cfg_.agent_id) + ": no feasible plan at t=" + std::to_string(t));
  }

  if (from_fallback) {
    // Re-solve the shifted plan to remove the drift it carries from earlier solves.
    CandidateTerminal cand = best->terminal;
    const int arrival = first_arrival(*best, cfg_.goal, cfg_.eps);
    if (cand.point.goal && arrival > 0 && arrival < N) { cand.steps = arrival; }
    ++tel.solves;
    auto plan = solve_candidate(state, t, previous_input, cand, best->inputs);
    if (plan && realized_cost(*plan, cfg_.goal, cfg_.eps) <= best_cost) {
      ++tel.solved;
      best_cost = realized_cost(*plan, cfg_.goal, cfg_.eps);
      best = std::move(plan);
    } else {
      ++tel.failed;
    }
  }

  out.plan = std::move(*best);
  out.realized_cost = best_cost;
  tel.used_fallback = from_fallback;
  tel.realized_cost = best_cost;
  tel.terminal_gap = out.plan.terminal_gap;
  tel.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - clock_start).count();
  return out;
}

Input LmpcAgent::control_step(const State & state, int t, const Input & previous_input)
{
  last_ = solve_fhocp(state, t, previous_input);
  return last_->plan.inputs.front();
}

LmpcAgent::Run LmpcAgent::run(int max_steps)
{
  Run out;
  out.trajectory.agent_id = cfg_.agent_id;
  out.trajectory.states.push_back(cfg_.start);
  last_.reset();
  State x = cfg_.start;
  Input prev = Input::Zero();
  for (int t = 0; !goal_reached(x, cfg_.goal, cfg_.eps); ++t) {
    if (t >= max_steps) {
      throw Error("agent " + std::to_string(cfg_.agent_id) + " did not reach its goal within " + std::to_string(max_steps) + " steps");
    }
    const Input u = control_step(x, t, prev);
    out.telemetry.push_back(last_->telemetry);
    x = cfg_.model.step(x, u);
    prev = u;
    out.trajectory.inputs.push_back(u);
    out.trajectory.states.push_back(x);
  }
  return out;
}

}  // namespace dlmpc
