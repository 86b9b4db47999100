#include "dlmpc/orchestrator.hpp"

#include "dlmpc/errors.hpp"
#include "dlmpc/trajopt.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <string>

namespace dlmpc {

namespace {

std::string agent_str(int i) { return "agent " + std::to_string(i); }

bool same_angle(double a, double b) { return std::abs(std::sin(a - b)) < 1e-9 && std::cos(a - b) > 0.0; }

// Inputs of a rest-to-rest straight leg, or nullopt when the agent cannot drive it with
// zero steering.
std::optional<std::vector<Input>> straight_leg(const AgentSpec & spec, const ScenarioConfig & cfg)
{
  const Position delta = spec.goal.head<2>() - spec.start.head<2>();
  const double D = delta.norm();
  const bool bicycle = spec.model.is_bicycle();
  const bool at_rest = bicycle ? spec.start(3) == 0.0 && spec.goal(3) == 0.0
                               : spec.start.tail<2>().isZero() && spec.goal.tail<2>().isZero();
  if (!at_rest) { return std::nullopt; }
  if (D == 0.0) {
    if (bicycle && spec.start(2) != spec.goal(2)) { return std::nullopt; }
    return std::vector<Input>{};
  }
  const double dir_angle = std::atan2(delta(1), delta(0));
  if (bicycle && !(same_angle(spec.start(2), dir_angle) && spec.start(2) == spec.goal(2))) { return std::nullopt; }

  const double dt = spec.model.dt();
  const int n1 = cfg.initial.ramp_steps;
  const int m = std::max(0, static_cast<int>(std::lround(D / (dt * cfg.initial.cruise_speed))) - n1);
  const double V = D / (dt * (n1 + m));
  const double a0 = V / (n1 * dt);

  Input accel;
  if (bicycle) {
    accel = Input(0.0, a0);
  } else {
    accel = a0 * delta / D;
  }
  const Bounds & b = cfg.bounds;
  if ((accel.cwiseAbs().array() > b.rate.array()).any() || (accel.array() > b.input_hi.array()).any() ||
      (-accel.array() < b.input_lo.array()).any()) {
    throw ConfigError("initial profile: ramp acceleration " + std::to_string(a0) + " exceeds the input or rate limits");
  }

  std::vector<Input> us;
  us.insert(us.end(), n1, accel);
  us.insert(us.end(), m, Input::Zero());
  us.insert(us.end(), n1, Input(-accel));
  return us;
}

// Single-agent solve to the goal with growing horizons.
std::vector<Input> solved_leg(const AgentSpec & spec, const ScenarioConfig & cfg)
{
  const double D = (spec.goal.head<2>() - spec.start.head<2>()).norm();
  const double dt = spec.model.dt();
  const int base = std::max(20, static_cast<int>(std::ceil(D / (dt * cfg.initial.cruise_speed))) + 2 * cfg.initial.ramp_steps);
  for (const double scale : {1.0, 1.5, 2.0, 3.0}) {
    OcpProblem pb;
    pb.horizon = static_cast<int>(std::ceil(base * scale));
    pb.model = spec.model;
    pb.initial_state = spec.start;
    pb.terminal_target = spec.goal;
    pb.bounds = cfg.bounds;
    pb.previous_input = Input::Zero();
    pb.terminal_successor_input = Input::Zero();
    const auto sol = solve_ocp(pb);
    if (sol.status == OcpStatus::Solved) { return sol.inputs; }
  }
  throw ScenarioInfeasible("no initial leg found from start to goal");
}

double max_abs(const State & v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

void ScenarioConfig::validate() const
{
  if (agents.empty()) { throw ConfigError("agents: at least one agent required"); }
  if (horizon < 1) { throw ConfigError("horizon: must be positive"); }
  if (iterations < 0) { throw ConfigError("iterations: must be non-negative"); }
  if (!(eps > 0.0)) { throw ConfigError("eps: must be positive"); }
  if (initial.ramp_steps < 1 || !(initial.cruise_speed > 0.0)) {
    throw ConfigError("initial: ramp_steps and cruise_speed must be positive");
  }
  try {
    synthesis.validate();
  } catch (const ConfigError & e) {
    throw ConfigError(std::string("synthesis: ") + e.what());
  }
  if ((bounds.state_lo.array() > bounds.state_hi.array()).any() ||
      (bounds.input_lo.array() > bounds.input_hi.array()).any() || (bounds.rate.array() < 0.0).any()) {
    throw ConfigError("bounds: empty box");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto & a = agents[i];
    const std::string where = "agents[" + std::to_string(i) + "]";
    if (!a.start.allFinite() || !a.goal.allFinite()) { throw ConfigError(where + ": non-finite state"); }
    if (!(a.radius >= 0.0)) { throw ConfigError(where + ".radius: must be non-negative"); }
    try {
      if (a.model.is_bicycle()) {
        a.model.bicycle().validate();
      } else {
        a.model.double_integrator().validate();
      }
    } catch (const std::invalid_argument & e) {
      throw ConfigError(where + ".model: " + e.what());
    }
    if (a.model.dt() != agents.front().model.dt()) { throw ConfigError(where + ".model.dt: agents must share dt"); }
    for (const State * s : {&a.start, &a.goal}) {
      if ((s->array() < bounds.state_lo.array()).any() || (s->array() > bounds.state_hi.array()).any()) {
        throw ConfigError(where + ": start or goal outside the state box");
      }
    }
    const bool equilibrium = a.model.is_bicycle() ? a.goal(3) == 0.0 : a.goal.tail<2>().isZero();
    if (!equilibrium) { throw ConfigError(where + ".goal: must be at rest"); }
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      const double need = agents[i].radius + agents[j].radius;
      const auto pi = [&](const State & s) { return Position(s.head<2>()); };
      const std::string pair = std::to_string(i) + " and " + std::to_string(j);
      if ((pi(agents[i].start) - pi(agents[j].start)).norm() < need) {
        throw ScenarioInfeasible("starts of agents " + pair + " overlap");
      }
      if ((pi(agents[i].goal) - pi(agents[j].goal)).norm() < need) {
        throw ScenarioInfeasible("goals of agents " + pair + " overlap");
      }
      if ((pi(agents[i].goal) - pi(agents[j].start)).norm() < need ||
          (pi(agents[j].goal) - pi(agents[i].start)).norm() < need) {
        throw ScenarioInfeasible("a goal of agents " + pair + " lies inside the other's start buffer");
      }
    }
  }
}

std::vector<double> ScenarioConfig::radii() const
{
  std::vector<double> r;
  for (const auto & a : agents) { r.push_back(a.radius); }
  return r;
}

Position position_at(const Trajectory & trajectory, int t)
{
  const int k = std::min<int>(t, static_cast<int>(trajectory.states.size()) - 1);
  return trajectory.states[k].head<2>();
}

double min_pairwise_clearance(const std::vector<Trajectory> & trs, const std::vector<double> & radii)
{
  double best = std::numeric_limits<double>::infinity();
  int horizon = 0;
  for (const auto & tr : trs) { horizon = std::max(horizon, tr.completion_time()); }
  for (int t = 0; t <= horizon; ++t) {
    for (std::size_t i = 0; i < trs.size(); ++i) {
      for (std::size_t j = i + 1; j < trs.size(); ++j) {
        const double d = (position_at(trs[i], t) - position_at(trs[j], t)).norm();
        best = std::min(best, d - radii[i] - radii[j]);
      }
    }
  }
  return best;
}

double min_pairwise_distance(const std::vector<Trajectory> & trs)
{
  return min_pairwise_clearance(trs, std::vector<double>(trs.size(), 0.0));
}

std::vector<Trajectory> generate_initial_trajectories(const ScenarioConfig & config)
{
  config.validate();
  std::vector<Trajectory> out;
  int offset = 0;
  for (std::size_t i = 0; i < config.agents.size(); ++i) {
    const auto & spec = config.agents[i];
    auto leg = straight_leg(spec, config);
    const std::vector<Input> inputs = leg ? std::move(*leg) : solved_leg(spec, config);
    Trajectory tr;
    tr.agent_id = static_cast<int>(i);
    tr.inputs.assign(offset, Input::Zero());
    tr.inputs.insert(tr.inputs.end(), inputs.begin(), inputs.end());
    tr.states = rollout(spec.model, spec.start, tr.inputs);
    if (!goal_reached(tr.final_state(), spec.goal, config.eps)) {
      throw ScenarioInfeasible(agent_str(static_cast<int>(i)) + ": initial leg misses the goal");
    }
    offset += static_cast<int>(inputs.size());
    out.push_back(std::move(tr));
  }
  if (min_pairwise_clearance(out, config.radii()) < -kDistanceTolerance) {
    throw ScenarioInfeasible("sequential initial execution violates the collision buffers");
  }
  return out;
}

std::vector<int> IterationRecord::completion_times() const
{
  std::vector<int> out;
  for (const auto & tr : trajectories) { out.push_back(tr.completion_time()); }
  return out;
}

int IterationRecord::global_cost() const
{
  const auto ts = completion_times();
  return ts.empty() ? 0 : *std::max_element(ts.begin(), ts.end());
}

int IterationRecord::sum_cost() const
{
  const auto ts = completion_times();
  return std::accumulate(ts.begin(), ts.end(), 0);
}

std::vector<int> RunRecord::global_costs() const
{
  std::vector<int> out;
  for (const auto & it : iterations) { out.push_back(it.global_cost()); }
  return out;
}

AgentConfig agent_config(const ScenarioConfig & config, int agent)
{
  const auto & spec = config.agents.at(agent);
  AgentConfig c;
  c.agent_id = agent;
  c.model = spec.model;
  c.bounds = config.bounds;
  c.start = spec.start;
  c.goal = spec.goal;
  c.eps = config.eps;
  c.horizon = config.horizon;
  return c;
}

IterationDataset make_dataset(const ScenarioConfig & config)
{
  std::vector<AgentModel> models;
  std::vector<State> goals;
  for (const auto & a : config.agents) {
    models.push_back(a.model);
    goals.push_back(a.goal);
  }
  return IterationDataset(std::move(models), std::move(goals), config.eps);
}

IterationRecord run_iteration(
  int q, const SynthesisResult & synthesis, const ScenarioConfig & config, const std::vector<const Trajectory *> & previous,
  int max_steps, bool parallel_agents)
{
  const int M = static_cast<int>(config.agents.size());
  auto run_agent = [&](int i) {
    LmpcAgent agent(agent_config(config, i), synthesis.agents.at(i), *previous.at(i));
    return agent.run(max_steps);
  };
  std::vector<LmpcAgent::Run> runs;
  if (parallel_agents) {
    std::vector<std::future<LmpcAgent::Run>> futures;
    for (int i = 0; i < M; ++i) { futures.push_back(std::async(std::launch::async, run_agent, i)); }
    for (auto & f : futures) { runs.push_back(f.get()); }
  } else {
    for (int i = 0; i < M; ++i) { runs.push_back(run_agent(i)); }
  }
  IterationRecord rec;
  rec.iteration = q;
  for (int i = 0; i < M; ++i) {
    runs[i].trajectory.agent_id = i;
    runs[i].trajectory.iteration = q;
    rec.trajectories.push_back(std::move(runs[i].trajectory));
    rec.telemetry.push_back(std::move(runs[i].telemetry));
  }
  return rec;
}

RunRecord run(const ScenarioConfig & config, const RunOptions & options)
{
  config.validate();
  const int M = static_cast<int>(config.agents.size());
  const auto radii = config.radii();
  IterationDataset dataset = make_dataset(config);
  dataset.record_iteration(generate_initial_trajectories(config));

  RunRecord record;
  IterationRecord first;
  first.iteration = 0;
  for (int i = 0; i < M; ++i) { first.trajectories.push_back(dataset.trajectory(i, 0)); }
  first.telemetry.resize(M);
  record.iterations.push_back(first);
  if (options.on_iteration) { options.on_iteration(first); }

  const int Z = options.max_iterations >= 0 ? options.max_iterations : config.iterations;
  const int watchdog = 4 * std::max(1, first.global_cost());
  for (int q = 1; q <= Z; ++q) {
    const SynthesisResult synth = synthesize(dataset, config.synthesis, radii, config.window_schedule);
    const ReachabilityReport reach = verify_reachability(synth.agents, dataset);
    if (options.on_synthesis) { options.on_synthesis(q, synth, reach); }
    std::vector<const Trajectory *> previous;
    for (int i = 0; i < M; ++i) { previous.push_back(&dataset.trajectory(i, dataset.successful_iterations(i).back())); }

    IterationRecord rec = run_iteration(q, synth, config, previous, watchdog, options.parallel_agents);
    rec.synthesis = SynthesisSummary{synth.params_used, synth.windows, synth.shrink_rounds, reach.points_checked, reach.violations.size()};
    dataset.record_iteration(rec.trajectories);
    const bool steady = rec.completion_times() == record.iterations.back().completion_times();
    record.iterations.push_back(std::move(rec));
    if (options.on_iteration) { options.on_iteration(record.iterations.back()); }
    if (steady) {
      record.converged = true;
      break;
    }
  }
  return record;
}

RunReport verify_run(const RunRecord & record, const ScenarioConfig & config)
{
  RunReport rep;
  rep.min_clearance = std::numeric_limits<double>::infinity();
  const int M = static_cast<int>(config.agents.size());
  const auto radii = config.radii();
  const Bounds & b = config.bounds;
  auto flag = [&rep](int q, int a, int t, std::string what) { rep.violations.push_back({q, a, t, std::move(what)}); };

  const IterationRecord * prev = nullptr;
  for (const auto & it : record.iterations) {
    const int q = it.iteration;
    if (static_cast<int>(it.trajectories.size()) != M) {
      flag(q, -1, -1, "expected " + std::to_string(M) + " trajectories");
      continue;
    }
    for (int a = 0; a < M; ++a) {
      const Trajectory & tr = it.trajectories[a];
      const AgentSpec & spec = config.agents[a];
      if (tr.states.size() != tr.inputs.size() + 1) {
        flag(q, a, -1, "state and input counts are misaligned");
        continue;
      }
      if (max_abs(tr.states.front() - spec.start) > kReplayTolerance) { flag(q, a, 0, "does not start at the start state"); }
      for (int k = 0; k <= tr.completion_time(); ++k) {
        const State & x = tr.states[k];
        if ((x - b.state_hi).maxCoeff() > kReplayTolerance || (b.state_lo - x).maxCoeff() > kReplayTolerance) {
          flag(q, a, k, "state outside the box");
        }
      }
      for (int k = 0; k < tr.completion_time(); ++k) {
        const Input & u = tr.inputs[k];
        if (max_abs(tr.states[k + 1] - spec.model.step(tr.states[k], u)) > kReplayTolerance) {
          flag(q, a, k, "recorded transition does not replay");
        }
        if ((u - b.input_hi).maxCoeff() > kReplayTolerance || (b.input_lo - u).maxCoeff() > kReplayTolerance) {
          flag(q, a, k, "input outside the box");
        }
        const Input before = k == 0 ? Input::Zero() : tr.inputs[k - 1];
        if (((u - before).cwiseAbs() - b.rate).maxCoeff() > kReplayTolerance) { flag(q, a, k, "input rate exceeded"); }
      }
      if (!goal_reached(tr.final_state(), spec.goal, config.eps)) {
        flag(q, a, tr.completion_time(), "did not reach the goal");
      }
      if (prev && static_cast<int>(prev->trajectories.size()) == M &&
          tr.completion_time() > prev->trajectories[a].completion_time()) {
        flag(q, a, -1, "completion time increased");
      }
      if (a < static_cast<int>(it.telemetry.size()) && !it.telemetry[a].empty()) {
        const auto & tel = it.telemetry[a];
        for (std::size_t k = 0; k + 1 < tel.size(); ++k) {
          if (tel[k + 1].realized_cost > tel[k].realized_cost - 1) {
            flag(q, a, static_cast<int>(k + 1), "optimal cost did not decrease by one step");
          }
        }
        if (tr.completion_time() > tel.front().realized_cost) {
          flag(q, a, -1, "completion time exceeds the initial optimal cost");
        }
      }
    }
    const double clearance = min_pairwise_clearance(it.trajectories, radii);
    rep.min_clearance = std::min(rep.min_clearance, clearance);
    if (clearance < -kDistanceTolerance) { flag(q, -1, -1, "collision buffers overlap (clearance " + std::to_string(clearance) + ")"); }
    if (prev && it.global_cost() > prev->global_cost()) { flag(q, -1, -1, "global cost increased"); }
    if (it.synthesis && it.synthesis->reachability_violations > 0) {
      flag(q, -1, -1, std::to_string(it.synthesis->reachability_violations) + " safe-set reachability violations");
    }
    prev = &it;
  }
  return rep;
}

}  // namespace dlmpc
