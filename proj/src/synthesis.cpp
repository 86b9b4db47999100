#include "dlmpc/synthesis.hpp"

#include "dlmpc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>

namespace dlmpc {

namespace {

constexpr double kMarginTolerance = 1e-9;
constexpr double kVerifyTolerance = 1e-9;

// The q̲ + 1 most recent successful iterations of one agent, ascending.
std::vector<int> iteration_window(const IterationDataset & dataset, int iter_window, int agent)
{
  auto all = dataset.successful_iterations(agent);
  if (all.empty()) {
    throw EmptyDataset("agent " + std::to_string(agent) + " has no successful iteration");
  }
  const std::size_t keep = std::min(all.size(), static_cast<std::size_t>(iter_window) + 1);
  return {all.end() - static_cast<std::ptrdiff_t>(keep), all.end()};
}

struct WindowBounds
{
  int lo;
  int hi;
};

WindowBounds time_window(const SynthesisParams & params, int t)
{
  return {std::max(t - params.back_window, 0), t + params.fwd_window};
}

std::vector<SafeSetPoint> window_points(
  const IterationDataset & dataset, const std::vector<int> & iterations, const SynthesisParams & params, int agent,
  int t)
{
  const auto [lo, hi] = time_window(params, t);
  std::vector<SafeSetPoint> out;
  for (const int p : iterations) {
    const Trajectory & tr = dataset.trajectory(agent, p);
    const int T = tr.completion_time();
    for (int k = lo; k <= std::min(hi, T - 1); ++k) {
      out.push_back({p, k, tr.states[k], tr.inputs[k], T - k, false});
    }
    if (hi >= T) { out.push_back({p, T, dataset.goal(agent), Input::Zero(), 0, true}); }
  }
  return out;
}

std::vector<Position> window_hull(
  const IterationDataset & dataset, const std::vector<int> & iterations, const SynthesisParams & params, int agent,
  int t)
{
  const auto [lo, hi] = time_window(params, t);
  std::vector<Position> pts;
  for (const int p : iterations) {
    const Trajectory & tr = dataset.trajectory(agent, p);
    const int T = tr.completion_time();
    for (int k = lo; k <= std::min(hi, T - 1); ++k) { pts.push_back(tr.states[k].head<2>()); }
    if (hi >= T) { pts.push_back(dataset.goal(agent).head<2>()); }
  }
  return convex_hull(std::move(pts));
}

// Rows for agent i and agent j from a separator whose normal points from i's set to j's set.
// Each agent keeps its center behind its own supporting line; the lines are at least
// r_i + r_j apart, so the buffer circles cannot overlap.
std::pair<HalfPlane, HalfPlane> split_rows(const SeparatingHyperplane & h, int i, int j)
{
  HalfPlane row_i{h.normal, -h.support_a, j};
  HalfPlane row_j{-h.normal, h.support_b, i};
  return {row_i, row_j};
}

bool states_match(const State & a, const State & b)
{
  return ((a - b).cwiseAbs().array() <= kStateMatchTolerance).all();
}

bool lex_less(const State & a, const State & b)
{
  return std::lexicographical_compare(a.data(), a.data() + 4, b.data(), b.data() + 4);
}

std::vector<ValueEntry> build_values(const std::vector<SafeSetPoint> & points)
{
  std::vector<const SafeSetPoint *> order;
  order.reserve(points.size());
  for (const auto & p : points) { order.push_back(&p); }
  std::sort(order.begin(), order.end(), [](const SafeSetPoint * a, const SafeSetPoint * b) {
    if (lex_less(a->state, b->state)) { return true; }
    if (lex_less(b->state, a->state)) { return false; }
    return std::tie(a->source_iteration, a->source_time) < std::tie(b->source_iteration, b->source_time);
  });

  auto better = [](const SafeSetPoint & a, const SafeSetPoint & b) {
    return std::tie(a.cost_to_go, a.source_iteration, a.source_time) <
           std::tie(b.cost_to_go, b.source_iteration, b.source_time);
  };
  std::vector<ValueEntry> out;
  for (std::size_t s = 0; s < order.size();) {
    std::size_t e = s + 1;
    const SafeSetPoint * best = order[s];
    while (e < order.size() && states_match(order[s]->state, order[e]->state)) {
      if (better(*order[e], *best)) { best = order[e]; }
      ++e;
    }
    out.push_back({*best, best->cost_to_go});
    s = e;
  }
  std::sort(out.begin(), out.end(), [](const ValueEntry & a, const ValueEntry & b) {
    return std::tie(a.point.source_iteration, a.point.source_time) <
           std::tie(b.point.source_iteration, b.point.source_time);
  });
  return out;
}

int clamp_time(int t, int last, const char * what)
{
  if (t < 0) { throw IndexOutOfRange(std::string(what) + ": negative time " + std::to_string(t)); }
  if (last < 0) { throw IndexOutOfRange(std::string(what) + ": empty"); }
  return std::min(t, last);
}

}  // namespace

void SynthesisParams::validate() const
{
  if (iter_window < 0 || back_window < 0 || fwd_window < 0) {
    throw ConfigError("synthesis windows must be non-negative");
  }
}

const std::vector<SafeSetPoint> & TimedSafeSet::at(int t) const { return sets[clamp_time(t, last_time(), "safe set")]; }

const SafeSetPoint * TimedSafeSet::find(int t, int source_iteration, int source_time) const
{
  const auto & set = at(t);
  const auto key = std::make_pair(source_iteration, source_time);
  auto it = std::lower_bound(set.begin(), set.end(), key, [](const SafeSetPoint & p, const std::pair<int, int> & k) {
    return std::make_pair(p.source_iteration, p.source_time) < k;
  });
  if (it == set.end() || it->source_iteration != source_iteration || it->source_time != source_time) {
    return nullptr;
  }
  return &*it;
}

const std::vector<HalfPlane> & HyperplaneSet::at(int t) const
{
  return rows[clamp_time(t, static_cast<int>(rows.size()) - 1, "hyperplanes")];
}

double HyperplaneSet::violation(int t, const Position & p) const
{
  double worst = 0.0;
  for (const auto & row : at(t)) { worst = std::max(worst, row.eval(p)); }
  return worst;
}

const std::vector<ValueEntry> & ValueTable::at(int t) const
{
  return entries[clamp_time(t, static_cast<int>(entries.size()) - 1, "value table")];
}

const ValueEntry * find_value_entry(const ValueTable & table, const State & state, int t)
{
  for (const auto & e : table.at(t)) {
    if (states_match(e.point.state, state)) { return &e; }
  }
  return nullptr;
}

int value_lookup(const ValueTable & table, const State & state, int t)
{
  if (const ValueEntry * e = find_value_entry(table, state, t)) { return e->value; }
  throw NotInSafeSet("agent " + std::to_string(table.agent_id) + ": state not in safe set at t=" + std::to_string(t));
}

int value_lookup(const ValueTable & table, const SafeSetPoint & point, int t)
{
  return value_lookup(table, point.state, t);
}

std::vector<SafeSetPoint> candidate_safe_sets(
  const IterationDataset & dataset, const SynthesisParams & params, int agent, int t)
{
  params.validate();
  if (t < 0) { throw IndexOutOfRange("candidate_safe_sets: negative time"); }
  return window_points(dataset, iteration_window(dataset, params.iter_window, agent), params, agent, t);
}

std::string to_string(WindowSchedule schedule)
{
  return schedule == WindowSchedule::Global ? "global" : "per_time";
}

WindowSchedule parse_window_schedule(const std::string & text)
{
  if (text == "global") { return WindowSchedule::Global; }
  if (text == "per_time") { return WindowSchedule::PerTime; }
  throw ConfigError("unknown window schedule '" + text + "' (expected global or per_time)");
}

std::optional<SynthesisParams> shrink(const SynthesisParams & current, int initial_iter_window)
{
  SynthesisParams next = current;
  if (current.iter_window > 0) {
    --next.iter_window;
  } else if (current.fwd_window > 0 || current.back_window > 0) {
    next.fwd_window = std::max(current.fwd_window - 1, 0);
    next.back_window = std::max(current.back_window - 1, 0);
    next.iter_window = initial_iter_window;
  } else {
    return std::nullopt;
  }
  return next;
}

namespace {

using Separators = std::vector<SeparatingHyperplane>;

class Separator
{
public:
  Separator(const IterationDataset & dataset, std::span<const double> radii) : dataset_(dataset), radii_(radii) {}

  // Pairwise separators of the windows at time t in (i, j) order, or false on the first
  // pair closer than r_i + r_j.
  bool check(int t, const SynthesisParams & params, Separators * out)
  {
    ++checks_;
    const int M = dataset_.num_agents();
    std::vector<std::vector<Position>> hulls(M);
    for (int a = 0; a < M; ++a) {
      hulls[a] = window_hull(dataset_, iteration_window(dataset_, params.iter_window, a), params, a, t);
    }
    for (int i = 0; i < M; ++i) {
      for (int j = i + 1; j < M; ++j) {
        const auto h = separate_hulls(hulls[i], hulls[j]);
        if (!h || h->margin() < radii_[i] + radii_[j] - kMarginTolerance) { return false; }
        if (out) { out->push_back(*h); }
      }
    }
    return true;
  }

  int checks() const { return checks_; }

private:
  const IterationDataset & dataset_;
  std::span<const double> radii_;
  int checks_ = 0;
};

// Last time with a non-trivial set: longest included run plus the look-back.
int schedule_horizon(const IterationDataset & dataset, const SynthesisParams & params)
{
  int horizon = 0;
  for (int a = 0; a < dataset.num_agents(); ++a) {
    for (const int p : iteration_window(dataset, params.iter_window, a)) {
      horizon = std::max(horizon, dataset.completion_times(a)[p]);
    }
  }
  return horizon + params.back_window;
}

struct Schedule
{
  std::vector<SynthesisParams> windows;
  std::vector<Separators> separators;
  int rounds = 0;
};

Schedule global_schedule(Separator & sep, const IterationDataset & dataset, const SynthesisParams & params)
{
  SynthesisParams cur = params;
  int rounds = 0;
  int last_failure = 0;
  for (;;) {
    const int horizon = schedule_horizon(dataset, cur);
    // A failure at the previous round's failing time decides the round without a full sweep.
    bool ok = last_failure > horizon || sep.check(last_failure, cur, nullptr);
    std::vector<Separators> found(horizon + 1);
    for (int t = 0; ok && t <= horizon; ++t) {
      if (!sep.check(t, cur, &found[t])) {
        ok = false;
        last_failure = t;
      }
    }
    if (ok) { return {std::vector<SynthesisParams>(horizon + 1, cur), std::move(found), rounds}; }
    const auto next = shrink(cur, params.iter_window);
    if (!next) {
      throw SynthesisExhausted(
        "no separable safe sets even for the latest iteration alone (first failure at t=" +
        std::to_string(last_failure) + ")");
    }
    cur = *next;
    ++rounds;
  }
}

// Windows at one level of the shrink order: q̲ iterations back and t̄ = fwd ahead, with the
// look-back shortened in step with t̄.
SynthesisParams level(const SynthesisParams & params, int iter_window, int fwd_window)
{
  SynthesisParams out = params;
  out.iter_window = iter_window;
  out.fwd_window = fwd_window;
  out.back_window = std::max(params.back_window - (params.fwd_window - fwd_window), 0);
  return out;
}

// Walks time backwards so that the windows of t never exceed those of t + 1. At each time it
// keeps the largest separable t̄, preferring more iterations on ties; separability is
// monotone in both, so t̄ is found by bisection.
Schedule per_time_schedule(Separator & sep, const IterationDataset & dataset, const SynthesisParams & params)
{
  const int horizon = schedule_horizon(dataset, params);
  Schedule out;
  out.windows.resize(horizon + 1);
  out.separators.resize(horizon + 1);
  int cap_iter = params.iter_window;
  int cap_fwd = params.fwd_window;
  for (int t = horizon; t >= 0; --t) {
    int best_iter = -1;
    int best_fwd = -1;
    for (int q = cap_iter; q >= 0; --q) {
      if (!sep.check(t, level(params, q, 0), nullptr)) { continue; }
      int lo = 0;
      int hi = cap_fwd;
      while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (sep.check(t, level(params, q, mid), nullptr)) {
          lo = mid;
        } else {
          hi = mid - 1;
        }
      }
      if (lo > best_fwd) {
        best_fwd = lo;
        best_iter = q;
      }
    }
    if (best_iter < 0) {
      throw SynthesisExhausted("no separable safe sets even for the latest iteration alone at t=" + std::to_string(t));
    }
    cap_iter = best_iter;
    cap_fwd = best_fwd;
    out.windows[t] = level(params, best_iter, best_fwd);
    sep.check(t, out.windows[t], &out.separators[t]);
  }
  out.rounds = sep.checks();
  return out;
}

}  // namespace

SynthesisResult synthesize(
  const IterationDataset & dataset, const SynthesisParams & params, std::span<const double> radii,
  WindowSchedule schedule)
{
  params.validate();
  const int M = dataset.num_agents();
  if (static_cast<int>(radii.size()) != M) {
    throw std::invalid_argument("synthesize: one radius per agent required");
  }

  Separator sep(dataset, radii);
  Schedule sched = schedule == WindowSchedule::Global ? global_schedule(sep, dataset, params)
                                                      : per_time_schedule(sep, dataset, params);
  const int horizon = static_cast<int>(sched.windows.size()) - 1;

  SynthesisResult result;
  result.params_used = sched.windows.front();
  result.windows = sched.windows;
  result.shrink_rounds = sched.rounds;
  result.agents.resize(M);
  for (int a = 0; a < M; ++a) {
    auto & art = result.agents[a];
    art.agent_id = a;
    art.goal = dataset.goal(a);
    art.last_completion = dataset.completion_times(a)[iteration_window(dataset, 0, a).back()];
    art.safe_set.agent_id = a;
    art.hyperplanes.agent_id = a;
    art.values.agent_id = a;
    art.safe_set.sets.resize(horizon + 1);
    art.hyperplanes.rows.resize(horizon + 1);
    art.values.entries.resize(horizon + 1);
    for (int t = 0; t <= horizon; ++t) {
      const auto iters = iteration_window(dataset, sched.windows[t].iter_window, a);
      for (const int p : iters) {
        art.safe_set.horizon_end = std::max(art.safe_set.horizon_end, dataset.completion_times(a)[p]);
      }
      art.safe_set.sets[t] = window_points(dataset, iters, sched.windows[t], a, t);
      art.values.entries[t] = build_values(art.safe_set.sets[t]);
    }
  }
  for (int t = 0; t <= horizon; ++t) {
    std::size_t pair = 0;
    for (int i = 0; i < M; ++i) {
      for (int j = i + 1; j < M; ++j) {
        const auto [row_i, row_j] = split_rows(sched.separators[t][pair++], i, j);
        result.agents[i].hyperplanes.rows[t].push_back(row_i);
        result.agents[j].hyperplanes.rows[t].push_back(row_j);
      }
    }
  }
  return result;
}

ReachabilityReport verify_reachability(std::span<const AgentArtifacts> agents, const IterationDataset & dataset)
{
  ReachabilityReport report;
  auto flag = [&](int a, int t, const SafeSetPoint & p, std::string what) {
    report.violations.push_back({a, t, p.source_iteration, p.source_time, std::move(what)});
  };

  for (const auto & art : agents) {
    const int a = art.agent_id;
    const auto & ss = art.safe_set;
    const AgentModel & model = dataset.model(a);
    const State & goal = dataset.goal(a);
    if (ss.sets.empty()) {
      report.violations.push_back({a, 0, -1, -1, "no safe sets"});
      continue;
    }
    for (int t = 0; t <= ss.last_time(); ++t) {
      const auto & set = ss.sets[t];
      if (set.empty()) {
        report.violations.push_back({a, t, -1, -1, "empty safe set"});
        continue;
      }
      for (const auto & pt : set) {
        ++report.points_checked;
        const double hv = art.hyperplanes.violation(t, pt.state.head<2>());
        if (hv > kVerifyTolerance) { flag(a, t, pt, "hyperplane violated by " + std::to_string(hv)); }

        if (pt.source_iteration < 0 || pt.source_iteration >= dataset.num_iterations() ||
            !dataset.successful(a, pt.source_iteration)) {
          flag(a, t, pt, "source iteration is not a recorded success");
          continue;
        }
        const Trajectory & tr = dataset.trajectory(a, pt.source_iteration);
        const int T = tr.completion_time();

        if (pt.goal) {
          if (pt.source_time != T || pt.cost_to_go != 0 || !states_match(pt.state, goal) ||
              !pt.successor_input.isZero()) {
            flag(a, t, pt, "malformed goal point");
          }
          if (!ss.find(t + 1, pt.source_iteration, T)) { flag(a, t, pt, "goal missing from next safe set"); }
          continue;
        }

        const int k = pt.source_time;
        if (k < 0 || k >= T) {
          flag(a, t, pt, "source time outside recorded run");
          continue;
        }
        if (pt.cost_to_go != T - k) { flag(a, t, pt, "cost-to-go differs from completion time minus source time"); }
        if (!states_match(pt.state, tr.states[k]) || !((pt.successor_input - tr.inputs[k]).cwiseAbs().array() <=
                                                        kVerifyTolerance)
                                                        .all()) {
          flag(a, t, pt, "point differs from recorded data");
        }
        const State next = model.step(pt.state, pt.successor_input);
        if (k + 1 == T) {
          if (!goal_reached(next, goal, dataset.eps())) { flag(a, t, pt, "stored input does not reach the goal"); }
          if (!ss.find(t + 1, pt.source_iteration, T)) { flag(a, t, pt, "goal missing from next safe set"); }
          continue;
        }
        const SafeSetPoint * succ = ss.find(t + 1, pt.source_iteration, k + 1);
        if (!succ) {
          flag(a, t, pt, "successor missing from next safe set");
        } else if ((next - succ->state).cwiseAbs().maxCoeff() > kVerifyTolerance) {
          flag(a, t, pt, "stored input does not reproduce the successor");
        }
      }
    }
  }
  return report;
}

}  // namespace dlmpc
