#include "dlmpc/io.hpp"

#include "dlmpc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace dlmpc {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Typed access to one JSON object that reports errors with the full field path and
// rejects keys it does not know.
class Field
{
public:
  Field(const Json & value, std::string path) : value_(value), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string & what) const
  {
    throw ConfigError("field " + (path_.empty() ? std::string("<root>") : path_) + ": " + what);
  }

  Field child(const std::string & key) const
  {
    require_object();
    auto it = value_.find(key);
    if (it == value_.end()) { Field(value_, join(key)).fail("missing"); }
    return Field(*it, join(key));
  }

  bool has(const std::string & key) const
  {
    require_object();
    return value_.contains(key);
  }

  Field element(std::size_t i) const { return Field(value_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const
  {
    if (!value_.is_array()) { fail("expected an array"); }
    return value_.size();
  }

  double number() const
  {
    if (!value_.is_number()) { fail("expected a number"); }
    return value_.get<double>();
  }

  // Number, or null for an unbounded entry.
  double bound(double if_null) const { return value_.is_null() ? if_null : number(); }

  int integer() const
  {
    if (!value_.is_number_integer()) { fail("expected an integer"); }
    return value_.get<int>();
  }

  std::string text() const
  {
    if (!value_.is_string()) { fail("expected a string"); }
    return value_.get<std::string>();
  }

  template <int Dim>
  Eigen::Matrix<double, Dim, 1> vector(double if_null = std::numeric_limits<double>::quiet_NaN()) const
  {
    if (size() != Dim) { fail("expected " + std::to_string(Dim) + " entries"); }
    Eigen::Matrix<double, Dim, 1> v;
    for (int i = 0; i < Dim; ++i) {
      const Field e = element(i);
      v(i) = std::isnan(if_null) ? e.number() : e.bound(if_null);
    }
    return v;
  }

  void only(std::initializer_list<const char *> keys) const
  {
    require_object();
    for (const auto & [key, _] : value_.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char * k) { return key == k; })) {
        Field(value_, join(key)).fail("unknown field");
      }
    }
  }

private:
  const Json & value_;
  std::string path_;

  std::string join(const std::string & key) const { return path_.empty() ? key : path_ + "." + key; }

  void require_object() const
  {
    if (!value_.is_object()) { fail("expected an object"); }
  }
};

AgentModel parse_model(const Field & f)
{
  const std::string type = f.child("type").text();
  if (type == "bicycle") {
    f.only({"type", "l_f", "l_r", "dt"});
    BicycleParams p;
    if (f.has("l_f")) { p.l_f = f.child("l_f").number(); }
    if (f.has("l_r")) { p.l_r = f.child("l_r").number(); }
    if (f.has("dt")) { p.dt = f.child("dt").number(); }
    return AgentModel(p);
  }
  if (type == "double_integrator") {
    f.only({"type", "dt"});
    DoubleIntegratorParams p;
    if (f.has("dt")) { p.dt = f.child("dt").number(); }
    return AgentModel(p);
  }
  f.child("type").fail("unknown model '" + type + "' (expected bicycle or double_integrator)");
}

OrderedJson bound_array(const auto & v)
{
  OrderedJson arr = OrderedJson::array();
  for (int i = 0; i < v.size(); ++i) {
    if (std::isinf(v(i))) {
      arr.push_back(nullptr);
    } else {
      arr.push_back(v(i));
    }
  }
  return arr;
}

OrderedJson vector_array(const auto & v)
{
  OrderedJson arr = OrderedJson::array();
  for (int i = 0; i < v.size(); ++i) { arr.push_back(v(i)); }
  return arr;
}

std::vector<std::string> split_csv(const std::string & line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) { out.push_back(cell); }
  if (!line.empty() && line.back() == ',') { out.emplace_back(); }
  return out;
}

double parse_cell(const std::string & cell, int line, const char * column)
{
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != cell.size()) {
    throw ConfigError("line " + std::to_string(line) + ", column " + column + ": not a number: '" + cell + "'");
  }
  return v;
}

int parse_index(const std::string & cell, int line, const char * column)
{
  const double v = parse_cell(cell, line, column);
  if (v != std::floor(v) || v < 0) {
    throw ConfigError("line " + std::to_string(line) + ", column " + column + ": not an index: '" + cell + "'");
  }
  return static_cast<int>(v);
}

// Rows of a CSV with a fixed header, as (line number, cells).
std::vector<std::pair<int, std::vector<std::string>>> read_rows(std::istream & in, const std::string & header)
{
  std::string line;
  if (!std::getline(in, line) || line != header) { throw ConfigError("line 1: expected header '" + header + "'"); }
  const std::size_t columns = split_csv(header).size();
  std::vector<std::pair<int, std::vector<std::string>>> rows;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) { continue; }
    auto cells = split_csv(line);
    if (cells.size() != columns) {
      throw ConfigError("line " + std::to_string(number) + ": expected " + std::to_string(columns) + " columns");
    }
    rows.emplace_back(number, std::move(cells));
  }
  return rows;
}

const char * kTrajectoryHeader = "agent,iteration,t,x,y,psi,v,delta,a,terminal_gap,solve_ms";
const char * kTelemetryHeader =
  "agent,iteration,t,candidates,pruned,filtered,solves,solved,failed,used_fallback,realized_cost,terminal_gap,solve_ms";

}  // namespace

ScenarioConfig parse_scenario(const std::string & text)
{
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error & e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    const auto last_nl = text.rfind('\n', upto == 0 ? 0 : upto - 1);
    const std::size_t column = last_nl == std::string::npos || upto == 0 ? upto + 1 : upto - last_nl;
    throw ConfigError(
      "line " + std::to_string(line) + ", column " + std::to_string(column) + ": invalid JSON (" + e.what() + ")");
  }

  const Field root(doc, "");
  root.only({"name", "horizon", "iterations", "eps", "synthesis", "bounds", "initial", "agents"});
  ScenarioConfig c;
  if (root.has("name")) { c.name = root.child("name").text(); }
  c.horizon = root.child("horizon").integer();
  c.iterations = root.child("iterations").integer();
  c.eps = root.child("eps").number();

  const Field syn = root.child("synthesis");
  syn.only({"iter_window", "back_window", "fwd_window", "window_schedule"});
  c.synthesis.iter_window = syn.child("iter_window").integer();
  c.synthesis.back_window = syn.child("back_window").integer();
  c.synthesis.fwd_window = syn.child("fwd_window").integer();
  if (syn.has("window_schedule")) {
    try {
      c.window_schedule = parse_window_schedule(syn.child("window_schedule").text());
    } catch (const ConfigError & e) {
      syn.child("window_schedule").fail(e.what());
    }
  }

  const Field b = root.child("bounds");
  b.only({"state_lo", "state_hi", "input_lo", "input_hi", "rate"});
  c.bounds.state_lo = b.child("state_lo").vector<4>(-kInf);
  c.bounds.state_hi = b.child("state_hi").vector<4>(kInf);
  c.bounds.input_lo = b.child("input_lo").vector<2>(-kInf);
  c.bounds.input_hi = b.child("input_hi").vector<2>(kInf);
  c.bounds.rate = b.child("rate").vector<2>(kInf);

  if (root.has("initial")) {
    const Field init = root.child("initial");
    init.only({"cruise_speed", "ramp_steps"});
    if (init.has("cruise_speed")) { c.initial.cruise_speed = init.child("cruise_speed").number(); }
    if (init.has("ramp_steps")) { c.initial.ramp_steps = init.child("ramp_steps").integer(); }
  }

  const Field agents = root.child("agents");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const Field a = agents.element(i);
    a.only({"start", "goal", "radius", "model"});
    AgentSpec spec;
    spec.start = a.child("start").vector<4>();
    spec.goal = a.child("goal").vector<4>();
    spec.radius = a.child("radius").number();
    spec.model = parse_model(a.child("model"));
    c.agents.push_back(spec);
  }
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) { throw ConfigError("cannot open scenario file " + path.string()); }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const ConfigError & e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string emit_scenario(const ScenarioConfig & c)
{
  OrderedJson doc;
  doc["name"] = c.name;
  doc["horizon"] = c.horizon;
  doc["iterations"] = c.iterations;
  doc["eps"] = c.eps;
  doc["synthesis"] = {
    {"iter_window", c.synthesis.iter_window},
    {"back_window", c.synthesis.back_window},
    {"fwd_window", c.synthesis.fwd_window},
    {"window_schedule", to_string(c.window_schedule)}};
  doc["bounds"] = {
    {"state_lo", bound_array(c.bounds.state_lo)},
    {"state_hi", bound_array(c.bounds.state_hi)},
    {"input_lo", bound_array(c.bounds.input_lo)},
    {"input_hi", bound_array(c.bounds.input_hi)},
    {"rate", bound_array(c.bounds.rate)}};
  doc["initial"] = {{"cruise_speed", c.initial.cruise_speed}, {"ramp_steps", c.initial.ramp_steps}};
  doc["agents"] = OrderedJson::array();
  for (const auto & a : c.agents) {
    OrderedJson model;
    if (a.model.is_bicycle()) {
      const auto & p = a.model.bicycle();
      model = {{"type", "bicycle"}, {"l_f", p.l_f}, {"l_r", p.l_r}, {"dt", p.dt}};
    } else {
      model = {{"type", "double_integrator"}, {"dt", a.model.double_integrator().dt}};
    }
    doc["agents"].push_back(
      {{"start", vector_array(a.start)}, {"goal", vector_array(a.goal)}, {"radius", a.radius}, {"model", model}});
  }
  return doc.dump(2) + "\n";
}

std::string format_double(double value)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_trajectories_csv(std::ostream & out, const IterationRecord & record, bool zero_timing)
{
  out << kTrajectoryHeader << '\n';
  for (std::size_t a = 0; a < record.trajectories.size(); ++a) {
    const Trajectory & tr = record.trajectories[a];
    const auto * tel = a < record.telemetry.size() ? &record.telemetry[a] : nullptr;
    for (int k = 0; k <= tr.completion_time(); ++k) {
      const State & x = tr.states[k];
      out << a << ',' << record.iteration << ',' << k;
      for (int i = 0; i < 4; ++i) { out << ',' << format_double(x(i)); }
      if (k < tr.completion_time()) {
        const Input & u = tr.inputs[k];
        out << ',' << format_double(u(0)) << ',' << format_double(u(1));
        if (tel && k < static_cast<int>(tel->size())) {
          const StepTelemetry & s = (*tel)[k];
          out << ',' << format_double(s.terminal_gap) << ',' << format_double(zero_timing ? 0.0 : s.solve_ms);
        } else {
          out << ",0,0";
        }
      } else {
        out << ",,,,";
      }
      out << '\n';
    }
  }
}

std::vector<Trajectory> read_trajectories_csv(std::istream & in, int num_agents)
{
  std::vector<Trajectory> out(num_agents);
  std::vector<bool> closed(num_agents, false);
  for (auto & [line, cells] : read_rows(in, kTrajectoryHeader)) {
    const int a = parse_index(cells[0], line, "agent");
    if (a >= num_agents) { throw ConfigError("line " + std::to_string(line) + ": agent index out of range"); }
    Trajectory & tr = out[a];
    const int q = parse_index(cells[1], line, "iteration");
    const int k = parse_index(cells[2], line, "t");
    if (closed[a] || k != static_cast<int>(tr.states.size())) {
      throw ConfigError("line " + std::to_string(line) + ": rows of agent " + std::to_string(a) + " are not consecutive");
    }
    tr.agent_id = a;
    tr.iteration = q;
    State x;
    const char * names[] = {"x", "y", "psi", "v"};
    for (int i = 0; i < 4; ++i) { x(i) = parse_cell(cells[3 + i], line, names[i]); }
    tr.states.push_back(x);
    if (cells[7].empty()) {
      closed[a] = true;
    } else {
      tr.inputs.emplace_back(parse_cell(cells[7], line, "delta"), parse_cell(cells[8], line, "a"));
    }
  }
  for (int a = 0; a < num_agents; ++a) {
    if (!closed[a]) { throw ConfigError("agent " + std::to_string(a) + ": missing final row"); }
  }
  return out;
}

void write_telemetry_csv(std::ostream & out, const IterationRecord & record, bool zero_timing)
{
  out << kTelemetryHeader << '\n';
  for (std::size_t a = 0; a < record.telemetry.size(); ++a) {
    for (const StepTelemetry & s : record.telemetry[a]) {
      out << a << ',' << record.iteration << ',' << s.t << ',' << s.candidates << ',' << s.pruned << ',' << s.filtered
          << ',' << s.solves << ',' << s.solved << ',' << s.failed << ',' << (s.used_fallback ? 1 : 0) << ','
          << s.realized_cost << ',' << format_double(s.terminal_gap) << ','
          << format_double(zero_timing ? 0.0 : s.solve_ms) << '\n';
    }
  }
}

std::vector<std::vector<StepTelemetry>> read_telemetry_csv(std::istream & in, int num_agents)
{
  std::vector<std::vector<StepTelemetry>> out(num_agents);
  for (auto & [line, c] : read_rows(in, kTelemetryHeader)) {
    const int a = parse_index(c[0], line, "agent");
    if (a >= num_agents) { throw ConfigError("line " + std::to_string(line) + ": agent index out of range"); }
    StepTelemetry s;
    s.t = parse_index(c[2], line, "t");
    s.candidates = parse_index(c[3], line, "candidates");
    s.pruned = parse_index(c[4], line, "pruned");
    s.filtered = parse_index(c[5], line, "filtered");
    s.solves = parse_index(c[6], line, "solves");
    s.solved = parse_index(c[7], line, "solved");
    s.failed = parse_index(c[8], line, "failed");
    s.used_fallback = parse_index(c[9], line, "used_fallback") != 0;
    s.realized_cost = parse_index(c[10], line, "realized_cost");
    s.terminal_gap = parse_cell(c[11], line, "terminal_gap");
    s.solve_ms = parse_cell(c[12], line, "solve_ms");
    out[a].push_back(s);
  }
  return out;
}

std::string emit_metrics(const RunRecord & record, const ScenarioConfig & config, bool zero_timing)
{
  OrderedJson doc;
  doc["scenario"] = config.name;
  doc["converged"] = record.converged;
  OrderedJson global = OrderedJson::array();
  OrderedJson sum = OrderedJson::array();
  OrderedJson iters = OrderedJson::array();
  for (const auto & it : record.iterations) {
    global.push_back(it.global_cost());
    sum.push_back(it.sum_cost());
    OrderedJson e;
    e["iteration"] = it.iteration;
    e["completion_times"] = it.completion_times();
    e["global_cost"] = it.global_cost();
    e["sum_cost"] = it.sum_cost();
    e["min_distance"] = min_pairwise_distance(it.trajectories);
    e["min_clearance"] = min_pairwise_clearance(it.trajectories, config.radii());
    if (it.synthesis) {
      const auto & s = *it.synthesis;
      int max_fwd = 0;
      for (const auto & w : s.windows) { max_fwd = std::max(max_fwd, w.fwd_window); }
      e["synthesis"] = {
        {"iter_window_t0", s.params_used.iter_window},
        {"back_window_t0", s.params_used.back_window},
        {"fwd_window_t0", s.params_used.fwd_window},
        {"fwd_window_max", max_fwd},
        {"shrink_rounds", s.shrink_rounds},
        {"points_checked", s.points_checked},
        {"reachability_violations", s.reachability_violations}};
    }
    std::size_t steps = 0;
    int solves = 0;
    double total_ms = 0.0;
    double max_ms = 0.0;
    for (const auto & agent : it.telemetry) {
      for (const auto & s : agent) {
        ++steps;
        solves += s.solves;
        total_ms += s.solve_ms;
        max_ms = std::max(max_ms, s.solve_ms);
      }
    }
    if (zero_timing) {
      total_ms = 0.0;
      max_ms = 0.0;
    }
    e["controller"] = {
      {"steps", steps},
      {"ocp_solves", solves},
      {"mean_step_ms", steps ? total_ms / static_cast<double>(steps) : 0.0},
      {"max_step_ms", max_ms}};
    iters.push_back(std::move(e));
  }
  doc["global_costs"] = std::move(global);
  doc["sum_costs"] = std::move(sum);
  doc["iterations"] = std::move(iters);
  return doc.dump(2) + "\n";
}

std::string read_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw MissingArtifact("missing artifact " + path.string()); }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path & path, const std::string & content)
{
  if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw Error("cannot write " + path.string()); }
  out << content;
}

}  // namespace dlmpc
