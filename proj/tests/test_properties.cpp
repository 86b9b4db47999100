#include "dlmpc/orchestrator.hpp"

#include "oracles/grid_oracle.hpp"
#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dlmpc;
using testing_helpers::scenario;

namespace {

const AgentModel kModel(DoubleIntegratorParams{0.1});

// Random bang-coast-bang motion of a point mass, preceded by `wait` idle steps.
Trajectory random_motion(std::mt19937 & rng, const State & x0, int wait)
{
  std::uniform_real_distribution<double> acc(-2, 2);
  std::uniform_int_distribution<int> len(2, 8);
  const Input u(acc(rng), acc(rng));
  const int n = len(rng);
  Trajectory tr;
  tr.states.push_back(x0);
  auto push = [&](const Input & v) {
    tr.inputs.push_back(v);
    tr.states.push_back(kModel.step(tr.states.back(), v));
  };
  for (int k = 0; k < wait; ++k) { push(Input::Zero()); }
  for (int k = 0; k < n; ++k) { push(u); }
  for (int k = 0; k < n; ++k) { push(-u); }
  return tr;
}

}  // namespace

TEST(Properties, SeparatedSetsKeepTheirDistance)
{
  std::mt19937 rng(21);
  const std::vector<double> radii{0.5, 0.5, 0.5};
  const std::vector<State> starts{State(-3, 0, 0, 0), State(3, 0, 0, 0), State(0, 3, 0, 0)};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Trajectory> first;
    for (int a = 0; a < 3; ++a) { first.push_back(random_motion(rng, starts[a], 0)); }
    std::vector<State> goals;
    for (const auto & tr : first) { goals.push_back(tr.final_state()); }
    IterationDataset ds(std::vector<AgentModel>(3, kModel), goals, 1e-4);
    ds.record_iteration(first);
    for (const auto schedule : {WindowSchedule::Global, WindowSchedule::PerTime}) {
      const auto res = synthesize(ds, {0, 0, 30}, radii, schedule);
      EXPECT_TRUE(verify_reachability(res.agents, ds).ok());
      for (int t = 0; t <= res.agents[0].safe_set.last_time(); ++t) {
        for (int i = 0; i < 3; ++i) {
          for (const auto & p : res.agents[i].safe_set.at(t)) {
            EXPECT_LE(res.agents[i].hyperplanes.violation(t, p.state.head<2>()), 1e-9);
            for (int j = i + 1; j < 3; ++j) {
              for (const auto & r : res.agents[j].safe_set.at(t)) {
                EXPECT_GE((p.state - r.state).head<2>().norm(), 1.0 - 1e-9);
              }
            }
          }
        }
      }
    }
  }
}

TEST(Properties, ShrinkTerminates)
{
  for (int q = 0; q < 4; ++q) {
    for (int back = 0; back < 4; ++back) {
      SynthesisParams p{q, back, 6};
      int steps = 0;
      while (auto next = shrink(p, q)) {
        EXPECT_TRUE(next->fwd_window < p.fwd_window || next->iter_window < p.iter_window);
        p = *next;
        ++steps;
      }
      EXPECT_EQ(p, (SynthesisParams{0, 0, 0}));
      EXPECT_EQ(steps, (q + 1) * (std::max(back, 6) + 1) - 1);
    }
  }
}

TEST(Properties, RealizedCostWithinChosenBound)
{
  for (std::uint32_t seed = 100; seed < 110; ++seed) {
    const auto g = oracle::make_grid_instance(seed);
    LmpcAgent agent(g.config, g.artifacts, g.previous);
    const auto out = agent.solve_fhocp(g.config.start, 0, Input::Zero());
    EXPECT_LE(out.realized_cost, out.plan.terminal.bound);
    EXPECT_LE(out.plan.terminal_gap, 1e-5);
  }
}

TEST(Properties, LiveRunInvariants)
{
  RunOptions opt;
  opt.parallel_agents = false;
  const auto cfg = scenario("toy_double_integrator");
  const auto rec = run(cfg, opt);
  for (std::size_t q = 1; q < rec.iterations.size(); ++q) {
    const auto & it = rec.iterations[q];
    for (std::size_t a = 0; a < it.trajectories.size(); ++a) {
      const auto & tel = it.telemetry[a];
      const int T = it.trajectories[a].completion_time();
      EXPECT_LE(T, rec.iterations[q - 1].trajectories[a].completion_time());
      ASSERT_EQ(static_cast<int>(tel.size()), T);
      EXPECT_LE(tel.front().realized_cost, rec.iterations[q - 1].trajectories[a].completion_time());
      for (std::size_t k = 0; k + 1 < tel.size(); ++k) { EXPECT_LE(tel[k + 1].realized_cost, tel[k].realized_cost - 1); }
    }
  }

  // The same scenario on threads gives the same trajectories.
  opt.parallel_agents = true;
  const auto again = run(cfg, opt);
  ASSERT_EQ(again.iterations.size(), rec.iterations.size());
  for (std::size_t q = 0; q < rec.iterations.size(); ++q) {
    for (std::size_t a = 0; a < rec.iterations[q].trajectories.size(); ++a) {
      EXPECT_EQ(again.iterations[q].trajectories[a].states, rec.iterations[q].trajectories[a].states);
      EXPECT_EQ(again.iterations[q].trajectories[a].inputs, rec.iterations[q].trajectories[a].inputs);
    }
  }
}
