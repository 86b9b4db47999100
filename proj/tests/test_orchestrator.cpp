#include "dlmpc/errors.hpp"
#include "dlmpc/orchestrator.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dlmpc;
using testing_helpers::scenario;

namespace {

const RunRecord & toy_run()
{
  static const RunRecord record = [] {
    RunOptions opt;
    opt.parallel_agents = false;
    return run(scenario("toy_double_integrator"), opt);
  }();
  return record;
}

}  // namespace

TEST(Orchestrator, Crossing3StartsAreFarApart)
{
  const auto cfg = scenario("crossing3");
  EXPECT_NEAR((cfg.agents[0].start.head<2>() - cfg.agents[1].start.head<2>()).norm(), std::sqrt(125.0), 1e-12);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Orchestrator, InitialRunIsSequential)
{
  const auto cfg = scenario("crossing3");
  const auto trs = generate_initial_trajectories(cfg);
  ASSERT_EQ(trs.size(), 3u);
  // Agent i starts moving only once the agents before it have arrived.
  int makespan = 0;
  for (const auto & tr : trs) {
    int first_move = 0;
    while (first_move < tr.completion_time() && tr.inputs[first_move].isZero()) { ++first_move; }
    EXPECT_EQ(first_move, makespan);
    makespan = tr.completion_time();
  }
  EXPECT_GE(min_pairwise_clearance(trs, cfg.radii()), 0.0);
}

TEST(Orchestrator, SingleAgentDrivesDirectly)
{
  auto cfg = scenario("crossing3");
  cfg.agents.resize(1);
  const auto trs = generate_initial_trajectories(cfg);
  ASSERT_EQ(trs.size(), 1u);
  EXPECT_FALSE(trs[0].inputs.front().isZero());
  EXPECT_TRUE(goal_reached(trs[0].final_state(), cfg.agents[0].goal, cfg.eps));
}

TEST(Orchestrator, ZeroIterationsKeepsInitialOnly)
{
  const auto cfg = scenario("toy_double_integrator");
  RunOptions opt;
  opt.max_iterations = 0;
  const auto rec = run(cfg, opt);
  ASSERT_EQ(rec.iterations.size(), 1u);
  EXPECT_FALSE(rec.iterations[0].synthesis);
  EXPECT_TRUE(verify_run(rec, cfg).ok());
}

TEST(Orchestrator, ToyScenarioConverges)
{
  const auto & rec = toy_run();
  EXPECT_TRUE(rec.converged);
  const auto costs = rec.global_costs();
  for (std::size_t q = 1; q < costs.size(); ++q) { EXPECT_LE(costs[q], costs[q - 1]); }
  EXPECT_LT(costs.back(), costs.front());
  EXPECT_TRUE(verify_run(rec, scenario("toy_double_integrator")).ok());
  for (const auto & it : rec.iterations) {
    if (it.synthesis) { EXPECT_EQ(it.synthesis->reachability_violations, 0u); }
  }
}

TEST(Orchestrator, SingleAgentLmpcConverges)
{
  auto cfg = scenario("toy_double_integrator");
  cfg.agents.resize(1);
  const auto rec = run(cfg);
  EXPECT_TRUE(rec.converged);
  EXPECT_LT(rec.global_costs().back(), rec.global_costs().front());
  EXPECT_TRUE(verify_run(rec, cfg).ok());
}

TEST(Orchestrator, SwappedPositionsAreACollision)
{
  auto rec = toy_run();
  auto & trs = rec.iterations.back().trajectories;
  const int t = 10;
  // Put agent 1 on top of agent 0 at one step.
  trs[1].states[t].head<2>() = trs[0].states[t].head<2>();
  const auto report = verify_run(rec, scenario("toy_double_integrator"));
  ASSERT_FALSE(report.ok());
  bool collision = false;
  for (const auto & v : report.violations) { collision |= v.what.find("collision") != std::string::npos; }
  EXPECT_TRUE(collision);
  EXPECT_LT(report.min_clearance, 0.0);
}

TEST(Orchestrator, TruncatedRunMissesTheGoal)
{
  auto rec = toy_run();
  auto & tr = rec.iterations.back().trajectories[0];
  tr.states.resize(tr.states.size() - 5);
  tr.inputs.resize(tr.inputs.size() - 5);
  const auto report = verify_run(rec, scenario("toy_double_integrator"));
  bool missed = false;
  for (const auto & v : report.violations) { missed |= v.what == "did not reach the goal"; }
  EXPECT_TRUE(missed);
}

TEST(Orchestrator, OverlappingGoalIsInfeasible)
{
  auto cfg = scenario("crossing3");
  cfg.agents[0].goal.head<2>() = cfg.agents[1].start.head<2>() + Position(0.5, 0);
  EXPECT_THROW(cfg.validate(), ScenarioInfeasible);
}

TEST(Orchestrator, PositionParksAfterArrival)
{
  const auto & tr = toy_run().iterations.front().trajectories[0];
  EXPECT_EQ(position_at(tr, tr.completion_time() + 50), tr.final_state().head<2>());
  EXPECT_EQ(position_at(tr, 0), tr.states[0].head<2>());
}
