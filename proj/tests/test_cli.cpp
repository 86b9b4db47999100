#include "dlmpc/cli.hpp"
#include "dlmpc/io.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <sstream>

using namespace dlmpc;
namespace fs = std::filesystem;
using testing_helpers::scratch_dir;
using testing_helpers::scenario_path;

namespace {

// Toy run shared by the tests that only read its artifacts.
const fs::path & toy_artifacts()
{
  static const fs::path dir = [] {
    const auto d = scratch_dir("cli_toy");
    std::ostringstream log;
    RunFlags flags;
    flags.deterministic = true;
    flags.synth_dump = true;
    const int code = cmd_run(scenario_path("toy_double_integrator"), d, flags, log);
    EXPECT_EQ(code, kExitOk) << log.str();
    return d;
  }();
  return dir;
}

std::vector<std::string> lines_of(const std::string & text)
{
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) { out.push_back(line); }
  return out;
}

}  // namespace

TEST(Cli, RunWritesArtifacts)
{
  const auto & dir = toy_artifacts();
  for (const char * f : {"scenario.json", "metrics.json", "synth-dump.json", "iterations/q0/trajectories.csv",
                         "iterations/q1/telemetry.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto metrics = nlohmann::json::parse(read_file(dir / "metrics.json"));
  const auto costs = metrics.at("global_costs").get<std::vector<int>>();
  ASSERT_GE(costs.size(), 2u);
  for (std::size_t q = 1; q < costs.size(); ++q) { EXPECT_LE(costs[q], costs[q - 1]); }
}

TEST(Cli, VerifyAcceptsFreshRun)
{
  std::ostringstream log;
  EXPECT_EQ(cmd_verify(toy_artifacts(), log), kExitOk) << log.str();
  const auto report = nlohmann::json::parse(read_file(toy_artifacts() / "verify-report.json"));
  EXPECT_TRUE(report.at("ok").get<bool>());
}

TEST(Cli, MalformedScenarioExitsOne)
{
  const auto dir = scratch_dir("cli_malformed");
  write_file(dir / "bad.json", "{\"name\": \"x\",,}");
  std::ostringstream log;
  EXPECT_EQ(cmd_run(dir / "bad.json", dir / "out", {}, log), kExitError);
  EXPECT_NE(log.str().find("line 1"), std::string::npos) << log.str();
}

TEST(Cli, GoalInStartBufferExitsTwo)
{
  const auto dir = scratch_dir("cli_infeasible");
  auto cfg = load_scenario(scenario_path("crossing3"));
  cfg.agents[0].goal.head<2>() = cfg.agents[1].start.head<2>() + Position(0.5, 0.0);
  write_file(dir / "s.json", emit_scenario(cfg));
  std::ostringstream log;
  EXPECT_EQ(cmd_run(dir / "s.json", dir / "out", {}, log), kExitInfeasible) << log.str();
}

TEST(Cli, TamperedTrajectoryExitsThree)
{
  const auto dir = scratch_dir("cli_tampered");
  fs::copy(toy_artifacts(), dir, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  const auto file = dir / "iterations" / "q1" / "trajectories.csv";
  auto rows = lines_of(read_file(file));
  // Shift the x coordinate of one interior row.
  auto & row = rows.at(5);
  const auto c3 = [&] {
    std::size_t p = 0;
    for (int k = 0; k < 3; ++k) { p = row.find(',', p) + 1; }
    return p;
  }();
  const auto c4 = row.find(',', c3);
  row.replace(c3, c4 - c3, format_double(std::stod(row.substr(c3, c4 - c3)) + 0.5));
  std::string text;
  for (const auto & r : rows) { text += r + "\n"; }
  write_file(file, text);
  std::ostringstream log;
  EXPECT_EQ(cmd_verify(dir, log), kExitViolations);
  EXPECT_NE(log.str().find("violation"), std::string::npos) << log.str();
}

TEST(Cli, EmptyDirectoryExitsOne)
{
  std::ostringstream log;
  EXPECT_EQ(cmd_verify(scratch_dir("cli_empty"), log), kExitError);
  EXPECT_NE(log.str().find("missing"), std::string::npos) << log.str();
  EXPECT_EQ(cmd_export(scratch_dir("cli_empty"), scratch_dir("cli_empty_out"), log), kExitError);
}

TEST(Cli, ExportWritesPlotInputs)
{
  const auto out = scratch_dir("cli_export");
  std::ostringstream log;
  ASSERT_EQ(cmd_export(toy_artifacts(), out, log), kExitOk) << log.str();
  const auto dist = lines_of(read_file(out / "min_distance.csv"));
  const auto metrics = nlohmann::json::parse(read_file(toy_artifacts() / "metrics.json"));
  EXPECT_EQ(dist.size(), 1 + metrics.at("global_costs").size());
  for (std::size_t k = 1; k < dist.size(); ++k) {
    const auto c = dist[k].find(',', dist[k].find(',') + 1);
    EXPECT_GE(std::stod(dist[k].substr(c + 1)), 1.0 - 1e-6) << dist[k];
  }
  EXPECT_EQ(lines_of(read_file(out / "snapshots.csv")).size(), 1u + 8 * 2);
  EXPECT_TRUE(fs::exists(out / "paths.csv"));
  EXPECT_TRUE(fs::exists(out / "profiles.csv"));
}

TEST(Cli, InitialOnlyExport)
{
  const auto dir = scratch_dir("cli_z0");
  RunFlags flags;
  flags.max_iterations = 0;
  std::ostringstream log;
  ASSERT_EQ(cmd_run(scenario_path("toy_double_integrator"), dir, flags, log), kExitOk) << log.str();
  const auto out = scratch_dir("cli_z0_out");
  ASSERT_EQ(cmd_export(dir, out, log), kExitOk) << log.str();
  const auto paths = lines_of(read_file(out / "paths.csv"));
  for (std::size_t k = 1; k < paths.size(); ++k) { EXPECT_EQ(paths[k].rfind("initial,", 0), 0u); }
  EXPECT_EQ(lines_of(read_file(out / "min_distance.csv")).size(), 2u);
}
