#include "dlmpc/datastore.hpp"
#include "dlmpc/errors.hpp"

#include <gtest/gtest.h>

using namespace dlmpc;

namespace {

const AgentModel kModel(DoubleIntegratorParams{0.1});

// Accelerate for n steps then brake for n steps along x.
Trajectory accel_brake(State x0, int n)
{
  Trajectory tr;
  tr.states.push_back(x0);
  for (int k = 0; k < 2 * n; ++k) {
    const Input u(k < n ? 1.0 : -1.0, 0.0);
    tr.inputs.push_back(u);
    tr.states.push_back(kModel.step(tr.states.back(), u));
  }
  return tr;
}

IterationDataset one_agent_dataset(const Trajectory & tr)
{
  return IterationDataset({kModel}, {tr.final_state()}, 1e-4);
}

}  // namespace

TEST(Datastore, CostToGo)
{
  const Trajectory tr = accel_brake(State::Zero(), 5);
  ASSERT_EQ(tr.completion_time(), 10);
  EXPECT_EQ(cost_to_go(tr, 4), 6);
  EXPECT_EQ(cost_to_go(tr, 10), 0);
  EXPECT_EQ(cost_to_go(tr, 0), tr.completion_time());
  EXPECT_THROW(cost_to_go(tr, 11), IndexOutOfRange);
  EXPECT_THROW(cost_to_go(tr, -1), IndexOutOfRange);
}

TEST(Datastore, RecordIterationAppends)
{
  const Trajectory tr = accel_brake(State::Zero(), 5);
  IterationDataset ds = one_agent_dataset(tr);
  EXPECT_EQ(ds.num_iterations(), 0);
  ds.record_iteration({tr});
  EXPECT_EQ(ds.num_iterations(), 1);
  for (int z = 0; z < 3; ++z) { ds.record_iteration({tr}); }
  EXPECT_EQ(ds.trajectories(0).size(), 4u);
  EXPECT_EQ(ds.completion_times(0), (std::vector<int>{10, 10, 10, 10}));
  EXPECT_EQ(ds.successful_iterations(0), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(ds.trajectory(0, 2).iteration, 2);
}

TEST(Datastore, TamperedStateRejected)
{
  Trajectory tr = accel_brake(State::Zero(), 5);
  IterationDataset ds = one_agent_dataset(tr);
  tr.states[4](0) += 1e-3;
  EXPECT_THROW(ds.record_iteration({tr}), DynamicsMismatch);
  EXPECT_EQ(ds.num_iterations(), 0);
}

TEST(Datastore, MisalignedListsRejected)
{
  Trajectory tr = accel_brake(State::Zero(), 5);
  tr.inputs.pop_back();
  EXPECT_THROW(check_dynamics(tr, kModel), DynamicsMismatch);
}

TEST(Datastore, UnsuccessfulRunFlagged)
{
  const Trajectory tr = accel_brake(State::Zero(), 5);
  IterationDataset ds({kModel}, {State(9, 9, 0, 0)}, 1e-4);
  ds.record_iteration({tr});
  EXPECT_FALSE(ds.successful(0, 0));
  EXPECT_TRUE(ds.successful_iterations(0).empty());
}
