#pragma once

#include <Eigen/Core>

#include <limits>
#include <variant>

namespace dlmpc {

/// Generic 4-dim agent state and 2-dim input used by the solvers.
using State = Eigen::Vector4d;
using Input = Eigen::Vector2d;
using Position = Eigen::Vector2d;

/// Kinematic bicycle state (x, y, psi, v).
struct VehicleState
{
  double x_pos = 0.0;
  double y_pos = 0.0;
  double heading = 0.0;
  double speed = 0.0;

  State vec() const { return State(x_pos, y_pos, heading, speed); }
  static VehicleState from(const State & s) { return {s(0), s(1), s(2), s(3)}; }
  bool operator==(const VehicleState &) const = default;
};

/// Bicycle input (steering angle, acceleration).
struct VehicleInput
{
  double steer = 0.0;
  double accel = 0.0;

  Input vec() const { return Input(steer, accel); }
  static VehicleInput from(const Input & u) { return {u(0), u(1)}; }
  bool operator==(const VehicleInput &) const = default;
};

struct BicycleParams
{
  double l_f = 0.5;
  double l_r = 0.5;
  double dt = 0.1;

  /// Throws std::invalid_argument unless all lengths and dt are positive.
  void validate() const;
};

/// Planar point mass: position and velocity, acceleration input.
struct PointMassState
{
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();

  State vec() const { return State(position(0), position(1), velocity(0), velocity(1)); }
  static PointMassState from(const State & s) { return {s.head<2>(), s.tail<2>()}; }
};

struct DoubleIntegratorParams
{
  double dt = 0.1;

  void validate() const;
};

struct Jacobians
{
  Eigen::Matrix4d state;
  Eigen::Matrix<double, 4, 2> input;
};

VehicleState step(const BicycleParams & params, const VehicleState & state, const VehicleInput & input);
Jacobians jacobians(const BicycleParams & params, const VehicleState & state, const VehicleInput & input);

PointMassState step(const DoubleIntegratorParams & params, const PointMassState & state, const Eigen::Vector2d & accel);
Jacobians jacobians(const DoubleIntegratorParams & params);

/// True iff the Euclidean norm of the full state difference is at most eps.
bool goal_reached(const State & state, const State & goal, double eps);
bool goal_reached(const VehicleState & state, const VehicleState & goal, double eps);

/// Per-dimension box bounds shared by the solver, the controller and verification.
/// Infinite entries mean the dimension is unbounded.
struct Bounds
{
  State state_lo = State::Constant(-std::numeric_limits<double>::infinity());
  State state_hi = State::Constant(std::numeric_limits<double>::infinity());
  Input input_lo = Input::Constant(-std::numeric_limits<double>::infinity());
  Input input_hi = Input::Constant(std::numeric_limits<double>::infinity());
  /// Maximum absolute change of each input component between consecutive steps.
  Input rate = Input::Constant(std::numeric_limits<double>::infinity());
};

/// Runtime-selected agent model. Both models share the 4-state / 2-input layout with
/// the planar position in the first two state components.
class AgentModel
{
public:
  AgentModel() = default;
  AgentModel(BicycleParams p) : params_(p) {}
  AgentModel(DoubleIntegratorParams p) : params_(p) {}

  State step(const State & x, const Input & u) const;
  Jacobians jacobians(const State & x, const Input & u) const;
  double dt() const;
  bool is_bicycle() const { return std::holds_alternative<BicycleParams>(params_); }
  const BicycleParams & bicycle() const { return std::get<BicycleParams>(params_); }
  const DoubleIntegratorParams & double_integrator() const { return std::get<DoubleIntegratorParams>(params_); }

  /// Cheap necessary condition for reaching `target` from `from` in exactly `steps` steps.
  /// Never rejects a pair that the constrained dynamics can connect; `slack` widens every
  /// test to absorb solver tolerances.
  bool may_reach(const State & from, const State & target, int steps, const Bounds & bounds, double slack) const;

private:
  std::variant<BicycleParams, DoubleIntegratorParams> params_ = BicycleParams{};
};

}  // namespace dlmpc
