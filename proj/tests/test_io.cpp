#include "dlmpc/errors.hpp"
#include "dlmpc/io.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace dlmpc;
using testing_helpers::scenario;

namespace {

std::string error_of(const std::string & text)
{
  try {
    parse_scenario(text);
  } catch (const ConfigError & e) {
    return e.what();
  }
  return {};
}

std::string replace(std::string text, const std::string & from, const std::string & to)
{
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

IterationRecord sample_record()
{
  const auto cfg = scenario("toy_double_integrator");
  IterationRecord rec;
  rec.iteration = 0;
  rec.trajectories = generate_initial_trajectories(cfg);
  rec.telemetry.resize(2);
  return rec;
}

}  // namespace

TEST(Io, ScenarioRoundTrip)
{
  const auto cfg = scenario("crossing3");
  const std::string text = emit_scenario(cfg);
  const auto back = parse_scenario(text);
  EXPECT_EQ(emit_scenario(back), text);
  EXPECT_EQ(back.agents.size(), 3u);
  EXPECT_EQ(back.agents[2].start, cfg.agents[2].start);
  EXPECT_EQ(back.synthesis, cfg.synthesis);
  EXPECT_EQ(back.window_schedule, WindowSchedule::PerTime);
}

TEST(Io, Crossing3Values)
{
  const auto cfg = scenario("crossing3");
  EXPECT_EQ(cfg.horizon, 20);
  EXPECT_EQ(cfg.iterations, 20);
  EXPECT_EQ(cfg.synthesis, (SynthesisParams{2, 0, 175}));
  EXPECT_DOUBLE_EQ(cfg.eps, 1e-4);
  for (const auto & a : cfg.agents) { EXPECT_DOUBLE_EQ(a.radius, 0.75); }
  EXPECT_EQ(cfg.agents[0].start.head<2>(), Position(0, 5));
  EXPECT_EQ(cfg.agents[1].goal.head<2>(), Position(5, 5));
  EXPECT_DOUBLE_EQ(cfg.bounds.rate(0), 0.07);
  EXPECT_DOUBLE_EQ(cfg.bounds.rate(1), 0.7);
  EXPECT_TRUE(std::isinf(cfg.bounds.state_hi(2)));
  EXPECT_DOUBLE_EQ(cfg.bounds.state_hi(3), 10);
}

TEST(Io, NullBoundIsUnbounded)
{
  const auto text = emit_scenario(scenario("crossing3"));
  EXPECT_NE(text.find("null"), std::string::npos);
  EXPECT_TRUE(std::isinf(parse_scenario(text).bounds.state_lo(2)));
}

TEST(Io, SyntaxErrorNamesLineAndColumn)
{
  const std::string msg = error_of("{\n  \"name\": \"x\",\n  \"horizon\": ,\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Io, FieldErrorNamesPath)
{
  const auto text = emit_scenario(scenario("crossing3"));
  const auto bad = replace(text, "\"radius\": 0.75", "\"radius\": \"wide\"");
  EXPECT_NE(error_of(bad).find("agents[0].radius"), std::string::npos) << error_of(bad);
  const auto unknown = replace(text, "\"horizon\"", "\"horizn\"");
  EXPECT_FALSE(error_of(unknown).empty());
  const auto model = replace(text, "\"bicycle\"", "\"unicycle\"");
  EXPECT_NE(error_of(model).find("agents[0].model.type"), std::string::npos) << error_of(model);
}

TEST(Io, FormatDoubleRoundTrips)
{
  for (const double v : {0.1, 1.0 / 3.0, -2.356194490192345, 1e-300, 12345.678}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Io, TrajectoryCsvRoundTrip)
{
  const auto rec = sample_record();
  std::ostringstream out;
  write_trajectories_csv(out, rec, true);
  std::istringstream in(out.str());
  const auto back = read_trajectories_csv(in, 2);
  ASSERT_EQ(back.size(), 2u);
  for (int a = 0; a < 2; ++a) {
    EXPECT_EQ(back[a].states, rec.trajectories[a].states);
    EXPECT_EQ(back[a].inputs, rec.trajectories[a].inputs);
  }
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "agent,iteration,t,x,y,psi,v,delta,a,terminal_gap,solve_ms");
}

TEST(Io, MalformedCsvRejected)
{
  std::istringstream wrong_header("agent,t\n0,0\n");
  EXPECT_THROW(read_trajectories_csv(wrong_header, 1), ConfigError);
  std::istringstream bad_cell(
    "agent,iteration,t,x,y,psi,v,delta,a,terminal_gap,solve_ms\n0,0,0,abc,0,0,0,,,,\n");
  EXPECT_THROW(read_trajectories_csv(bad_cell, 1), ConfigError);
}

TEST(Io, MissingFileIsMissingArtifact)
{
  EXPECT_THROW(read_file("/nonexistent/dlmpc/scenario.json"), MissingArtifact);
}
