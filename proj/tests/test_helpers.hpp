#pragma once

#include "dlmpc/io.hpp"

#include <filesystem>
#include <string>

namespace testing_helpers {

inline std::filesystem::path scenario_path(const std::string & name)
{
  return std::filesystem::path(DLMPC_SOURCE_DIR) / "scenarios" / (name + ".json");
}

inline dlmpc::ScenarioConfig scenario(const std::string & name) { return dlmpc::load_scenario(scenario_path(name)); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string & name)
{
  const auto dir = std::filesystem::temp_directory_path() / ("dlmpc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_helpers
