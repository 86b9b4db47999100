#pragma once

#include "dlmpc/datastore.hpp"
#include "dlmpc/separation.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dlmpc {

/// Window sizes used to build the time-varying safe sets.
struct SynthesisParams
{
  /// Number of earlier successful iterations kept besides the latest one.
  int iter_window = 2;
  /// Steps looked back from t.
  int back_window = 0;
  /// Steps looked ahead of t.
  int fwd_window = 175;

  void validate() const;
  bool operator==(const SynthesisParams &) const = default;
};

/// How shrinking applies across time.
enum class WindowSchedule
{
  /// One set of windows for all times, shrunk until every time separates.
  Global,
  /// Windows chosen per time, largest first, kept non-decreasing in t so that every
  /// point's successor stays inside the next time's window.
  PerTime,
};

std::string to_string(WindowSchedule schedule);
/// Parses "global" or "per_time"; throws ConfigError otherwise.
WindowSchedule parse_window_schedule(const std::string & text);

/// A recorded state together with the input that was applied to it and its cost-to-go.
/// Points at or past the end of a run are the goal itself with zero input and zero cost,
/// tagged with `goal = true` and source_time = T of the run they extend.
struct SafeSetPoint
{
  int source_iteration = 0;
  int source_time = 0;
  State state = State::Zero();
  Input successor_input = Input::Zero();
  int cost_to_go = 0;
  bool goal = false;
};

/// Per-agent safe sets for every time 0..last_time(); later times reuse the last set.
struct TimedSafeSet
{
  int agent_id = 0;
  /// Longest completion time among the iterations used.
  int horizon_end = 0;
  std::vector<std::vector<SafeSetPoint>> sets;

  int last_time() const { return static_cast<int>(sets.size()) - 1; }
  const std::vector<SafeSetPoint> & at(int t) const;
  /// Point with the given provenance at time t, or nullptr. Goal points are found by
  /// their extended provenance (p, T^p).
  const SafeSetPoint * find(int t, int source_iteration, int source_time) const;
};

struct HyperplaneSet
{
  int agent_id = 0;
  std::vector<std::vector<HalfPlane>> rows;

  const std::vector<HalfPlane> & at(int t) const;
  /// Largest positive constraint value at time t (0 when satisfied).
  double violation(int t, const Position & p) const;
};

/// Minimum cost-to-go of a state among all safe-set occurrences at one time.
/// `point` is the minimizing occurrence (ties go to the smallest source iteration, then time).
struct ValueEntry
{
  SafeSetPoint point;
  int value = 0;
};

struct ValueTable
{
  int agent_id = 0;
  std::vector<std::vector<ValueEntry>> entries;

  const std::vector<ValueEntry> & at(int t) const;
};

/// Componentwise tolerance under which two recorded states count as the same state.
inline constexpr double kStateMatchTolerance = 1e-9;

/// Minimum cost-to-go of `state` at time t; throws NotInSafeSet if no member matches.
int value_lookup(const ValueTable & table, const State & state, int t);
int value_lookup(const ValueTable & table, const SafeSetPoint & point, int t);
/// Entry matching `state` at time t, or nullptr.
const ValueEntry * find_value_entry(const ValueTable & table, const State & state, int t);

/// Everything one agent's controller needs from a synthesis pass.
struct AgentArtifacts
{
  int agent_id = 0;
  State goal = State::Zero();
  /// Completion time of the agent's latest successful iteration (pruning threshold).
  int last_completion = 0;
  TimedSafeSet safe_set;
  HyperplaneSet hyperplanes;
  ValueTable values;
};

struct SynthesisResult
{
  std::vector<AgentArtifacts> agents;
  /// Window sizes after shrinking; under a per-time schedule, those of t = 0 (the smallest).
  SynthesisParams params_used;
  /// Window sizes used at each time.
  std::vector<SynthesisParams> windows;
  /// Shrink steps taken under the global schedule; separation checks under the per-time one.
  int shrink_rounds = 0;
};

/// Recorded points of `agent` inside the sliding window of time t over the most recent
/// params.iter_window + 1 successful iterations, in (iteration, time) order. The window
/// extends past the end of a run with the goal point.
/// Throws EmptyDataset when the agent has no successful iteration.
std::vector<SafeSetPoint> candidate_safe_sets(
  const IterationDataset & dataset, const SynthesisParams & params, int agent, int t);

/// Next window sizes in shrink order: drop one iteration at a time down to the latest alone,
/// then shorten both time windows by one and restore the iteration count. nullopt once
/// everything is zero.
std::optional<SynthesisParams> shrink(const SynthesisParams & current, int initial_iter_window);

/// Builds safe sets, separating-hyperplane constraints and value tables for every agent,
/// shrinking the windows until every pair of safe sets is separated by at least the sum of
/// the two collision radii at every time. Throws SynthesisExhausted if even the latest
/// iteration alone cannot be separated.
SynthesisResult synthesize(
  const IterationDataset & dataset, const SynthesisParams & params, std::span<const double> radii,
  WindowSchedule schedule = WindowSchedule::Global);

struct ReachabilityViolation
{
  int agent = 0;
  int time = 0;
  int source_iteration = 0;
  int source_time = 0;
  std::string what;
};

struct ReachabilityReport
{
  std::vector<ReachabilityViolation> violations;
  std::size_t points_checked = 0;

  bool ok() const { return violations.empty(); }
};

/// Checks that every safe-set point satisfies its agent's hyperplanes at its time, that its
/// stored input reproduces the recorded successor, and that this successor is a member of
/// the next time's safe set (the goal being absorbing). By induction every point then
/// reaches the goal through safe-set members only.
ReachabilityReport verify_reachability(std::span<const AgentArtifacts> agents, const IterationDataset & dataset);

}  // namespace dlmpc
