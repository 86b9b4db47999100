#include "dlmpc/cli.hpp"

#include "dlmpc/errors.hpp"
#include "dlmpc/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace dlmpc {

namespace fs = std::filesystem;
using OrderedJson = nlohmann::ordered_json;

namespace {

fs::path iteration_dir(const fs::path & root, int q) { return root / "iterations" / ("q" + std::to_string(q)); }

void write_iteration(const fs::path & root, const IterationRecord & rec, bool deterministic)
{
  std::ostringstream traj;
  write_trajectories_csv(traj, rec, deterministic);
  write_file(iteration_dir(root, rec.iteration) / "trajectories.csv", traj.str());
  std::ostringstream tel;
  write_telemetry_csv(tel, rec, deterministic);
  write_file(iteration_dir(root, rec.iteration) / "telemetry.csv", tel.str());
}

OrderedJson dump_synthesis(int q, const SynthesisResult & synth, const ReachabilityReport & reach)
{
  OrderedJson e;
  e["iteration"] = q;
  e["shrink_rounds"] = synth.shrink_rounds;
  OrderedJson windows = OrderedJson::array();
  for (const auto & w : synth.windows) { windows.push_back({w.iter_window, w.back_window, w.fwd_window}); }
  e["windows"] = std::move(windows);
  e["reachability"] = {{"points_checked", reach.points_checked}, {"violations", reach.violations.size()}};
  OrderedJson agents = OrderedJson::array();
  for (const auto & art : synth.agents) {
    OrderedJson a;
    a["agent"] = art.agent_id;
    a["last_completion"] = art.last_completion;
    OrderedJson sizes = OrderedJson::array();
    for (const auto & set : art.safe_set.sets) { sizes.push_back(set.size()); }
    a["safe_set_sizes"] = std::move(sizes);
    OrderedJson rows = OrderedJson::array();
    for (const auto & at_t : art.hyperplanes.rows) {
      OrderedJson r = OrderedJson::array();
      for (const auto & h : at_t) { r.push_back({h.normal(0), h.normal(1), h.offset, h.other_agent}); }
      rows.push_back(std::move(r));
    }
    a["hyperplanes"] = std::move(rows);
    agents.push_back(std::move(a));
  }
  e["agents"] = std::move(agents);
  return e;
}

}  // namespace

int cmd_run(const fs::path & scenario, const fs::path & out_dir, const RunFlags & flags, std::ostream & log)
{
  try {
    const ScenarioConfig config = load_scenario(scenario);
    config.validate();
    fs::create_directories(out_dir);
    write_file(out_dir / "scenario.json", emit_scenario(config));

    OrderedJson dump = OrderedJson::array();
    RunOptions options;
    options.max_iterations = flags.max_iterations.value_or(-1);
    options.parallel_agents = flags.parallel_agents;
    options.on_iteration = [&](const IterationRecord & rec) {
      write_iteration(out_dir, rec, flags.deterministic);
      log << "iteration " << rec.iteration << ": global cost " << rec.global_cost() << " (sum " << rec.sum_cost()
          << "), min distance " << min_pairwise_distance(rec.trajectories) << '\n';
    };
    if (flags.synth_dump) {
      options.on_synthesis = [&](int q, const SynthesisResult & s, const ReachabilityReport & r) {
        dump.push_back(dump_synthesis(q, s, r));
      };
    }
    const RunRecord record = run(config, options);
    write_file(out_dir / "metrics.json", emit_metrics(record, config, flags.deterministic));
    if (flags.synth_dump) { write_file(out_dir / "synth-dump.json", dump.dump(1) + "\n"); }
    log << (record.converged ? "converged" : "stopped") << " after " << record.iterations.size() - 1
        << " learning iterations\n";
    return kExitOk;
  } catch (const ScenarioInfeasible & e) {
    log << "error: scenario infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ConfigError & e) {
    log << "error: configuration: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception & e) {
    log << "error: " << e.what() << '\n';
    return kExitError;
  }
}

LoadedRun load_run(const fs::path & artifacts)
{
  LoadedRun out;
  out.config = parse_scenario(read_file(artifacts / "scenario.json"));
  const int M = static_cast<int>(out.config.agents.size());
  if (!fs::exists(iteration_dir(artifacts, 0) / "trajectories.csv")) {
    throw MissingArtifact("missing artifact " + (iteration_dir(artifacts, 0) / "trajectories.csv").string());
  }
  for (int q = 0; fs::exists(iteration_dir(artifacts, q) / "trajectories.csv"); ++q) {
    IterationRecord rec;
    rec.iteration = q;
    {
      std::istringstream in(read_file(iteration_dir(artifacts, q) / "trajectories.csv"));
      rec.trajectories = read_trajectories_csv(in, M);
    }
    const fs::path tel = iteration_dir(artifacts, q) / "telemetry.csv";
    if (fs::exists(tel)) {
      std::istringstream in(read_file(tel));
      rec.telemetry = read_telemetry_csv(in, M);
    } else {
      rec.telemetry.resize(M);
    }
    out.record.iterations.push_back(std::move(rec));
  }
  const auto & its = out.record.iterations;
  out.record.converged = its.size() >= 2 && its[its.size() - 1].completion_times() == its[its.size() - 2].completion_times();
  return out;
}

int cmd_verify(const fs::path & artifacts, std::ostream & log)
{
  try {
    LoadedRun loaded = load_run(artifacts);
    const ScenarioConfig & config = loaded.config;
    RunRecord & record = loaded.record;

    // Recompute every synthesis from the recorded data preceding it.
    IterationDataset dataset = make_dataset(config);
    OrderedJson reach_json = OrderedJson::array();
    std::string replay_error;
    for (auto & it : record.iterations) {
      if (it.iteration > 0) {
        const auto synth = synthesize(dataset, config.synthesis, config.radii(), config.window_schedule);
        const auto reach = verify_reachability(synth.agents, dataset);
        it.synthesis = SynthesisSummary{synth.params_used, synth.windows, synth.shrink_rounds, reach.points_checked, reach.violations.size()};
        reach_json.push_back(
          {{"iteration", it.iteration}, {"points_checked", reach.points_checked}, {"violations", reach.violations.size()}});
      }
      try {
        dataset.record_iteration(it.trajectories);
      } catch (const DynamicsMismatch & e) {
        replay_error = e.what();
        break;
      }
    }

    const RunReport report = verify_run(record, config);
    OrderedJson doc;
    doc["ok"] = report.ok() && replay_error.empty();
    doc["iterations"] = record.iterations.size();
    doc["global_costs"] = record.global_costs();
    doc["min_clearance"] = report.min_clearance;
    double min_distance = std::numeric_limits<double>::infinity();
    for (const auto & it : record.iterations) { min_distance = std::min(min_distance, min_pairwise_distance(it.trajectories)); }
    doc["min_distance"] = min_distance;
    doc["reachability"] = std::move(reach_json);
    OrderedJson violations = OrderedJson::array();
    for (const auto & v : report.violations) {
      violations.push_back({{"iteration", v.iteration}, {"agent", v.agent}, {"time", v.time}, {"what", v.what}});
      log << "violation: iteration " << v.iteration << ", agent " << v.agent << ", t " << v.time << ": " << v.what << '\n';
    }
    if (!replay_error.empty()) {
      violations.push_back({{"iteration", -1}, {"agent", -1}, {"time", -1}, {"what", "reachability not rechecked: " + replay_error}});
    }
    doc["violations"] = std::move(violations);
    write_file(artifacts / "verify-report.json", doc.dump(2) + "\n");
    const bool ok = doc["ok"].get<bool>();
    log << (ok ? "verify: ok" : "verify: violations found") << " (" << record.iterations.size() << " iterations)\n";
    return ok ? kExitOk : kExitViolations;
  } catch (const std::exception & e) {
    log << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_export(const fs::path & artifacts, const fs::path & out_dir, std::ostream & log)
{
  try {
    const LoadedRun loaded = load_run(artifacts);
    const auto & its = loaded.record.iterations;
    const auto radii = loaded.config.radii();
    const IterationRecord & initial = its.front();
    const IterationRecord & final_it = its.back();

    std::ostringstream paths;
    paths << "kind,iteration,agent,t,x,y\n";
    for (const auto * it : {&initial, &final_it}) {
      const char * kind = it == &initial ? "initial" : "final";
      for (std::size_t a = 0; a < it->trajectories.size(); ++a) {
        const auto & tr = it->trajectories[a];
        for (int k = 0; k <= tr.completion_time(); ++k) {
          paths << kind << ',' << it->iteration << ',' << a << ',' << k << ',' << format_double(tr.states[k](0)) << ','
                << format_double(tr.states[k](1)) << '\n';
        }
      }
      if (its.size() == 1) { break; }
    }

    std::ostringstream profiles;
    profiles << "iteration,agent,t,v,delta,a\n";
    for (const auto & it : its) {
      for (std::size_t a = 0; a < it.trajectories.size(); ++a) {
        const auto & tr = it.trajectories[a];
        for (int k = 0; k <= tr.completion_time(); ++k) {
          profiles << it.iteration << ',' << a << ',' << k << ',' << format_double(tr.states[k](3)) << ',';
          if (k < tr.completion_time()) {
            profiles << format_double(tr.inputs[k](0)) << ',' << format_double(tr.inputs[k](1));
          } else {
            profiles << ',';
          }
          profiles << '\n';
        }
      }
    }

    double floor = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < radii.size(); ++i) {
      for (std::size_t j = i + 1; j < radii.size(); ++j) { floor = std::min(floor, radii[i] + radii[j]); }
    }
    std::ostringstream dist;
    dist << "iteration,global_cost,min_distance,radius_sum\n";
    for (const auto & it : its) {
      dist << it.iteration << ',' << it.global_cost() << ',' << format_double(min_pairwise_distance(it.trajectories))
           << ',' << (std::isinf(floor) ? std::string() : format_double(floor)) << '\n';
    }

    // Eight evenly spaced frames of the last iteration.
    std::ostringstream snaps;
    snaps << "iteration,frame,t,agent,x,y,radius\n";
    const int horizon = final_it.global_cost();
    constexpr int kFrames = 8;
    for (int f = 0; f < kFrames; ++f) {
      const int t = static_cast<int>(std::lround(static_cast<double>(f) * horizon / (kFrames - 1)));
      for (std::size_t a = 0; a < final_it.trajectories.size(); ++a) {
        const Position p = position_at(final_it.trajectories[a], t);
        snaps << final_it.iteration << ',' << f << ',' << t << ',' << a << ',' << format_double(p(0)) << ','
              << format_double(p(1)) << ',' << format_double(radii[a]) << '\n';
      }
    }

    write_file(out_dir / "paths.csv", paths.str());
    write_file(out_dir / "profiles.csv", profiles.str());
    write_file(out_dir / "min_distance.csv", dist.str());
    write_file(out_dir / "snapshots.csv", snaps.str());
    log << "exported " << its.size() << " iterations to " << out_dir.string() << '\n';
    return kExitOk;
  } catch (const std::exception & e) {
    log << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace dlmpc
