#include "dlmpc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dlmpc {

namespace {

double abs_max(double lo, double hi) { return std::max(std::abs(lo), std::abs(hi)); }

// Upper bound on dt * sum_k |v_k| for k = 0..steps-1, given |v_0|, |v_steps|, a speed cap
// and a per-step acceleration bound.
double travel_bound(double v0, double vT, int steps, double dt, double accel, double vmax)
{
  if (!std::isfinite(accel) && !std::isfinite(vmax)) {
    return std::numeric_limits<double>::infinity();
  }
  double total = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double from_start = k == 0 ? std::abs(v0) : std::abs(v0) + k * dt * accel;
    const double s = std::min({from_start, std::abs(vT) + (steps - k) * dt * accel, vmax});
    total += dt * s;
  }
  return total;
}

}  // namespace

void BicycleParams::validate() const
{
  if (!(l_f > 0.0) || !(l_r > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("bicycle parameters must satisfy l_f > 0, l_r > 0, dt > 0");
  }
}

void DoubleIntegratorParams::validate() const
{
  if (!(dt > 0.0)) { throw std::invalid_argument("double integrator requires dt > 0"); }
}

VehicleState step(const BicycleParams & p, const VehicleState & s, const VehicleInput & u)
{
  const double beta = std::atan(p.l_r * std::tan(u.steer) / (p.l_f + p.l_r));
  return {
    s.x_pos + p.dt * s.speed * std::cos(s.heading + beta),
    s.y_pos + p.dt * s.speed * std::sin(s.heading + beta),
    s.heading + p.dt * s.speed * std::sin(beta) / p.l_r,
    s.speed + p.dt * u.accel,
  };
}

Jacobians jacobians(const BicycleParams & p, const VehicleState & s, const VehicleInput & u)
{
  const double L = p.l_f + p.l_r;
  const double tan_d = std::tan(u.steer);
  const double ratio = p.l_r * tan_d / L;
  const double beta = std::atan(ratio);
  // d(beta)/d(steer)
  const double dbeta = (p.l_r / L) * (1.0 + tan_d * tan_d) / (1.0 + ratio * ratio);
  const double c = std::cos(s.heading + beta);
  const double sn = std::sin(s.heading + beta);
  const double v = s.speed;

  Jacobians J;
  J.state.setIdentity();
  J.state(0, 2) = -p.dt * v * sn;
  J.state(0, 3) = p.dt * c;
  J.state(1, 2) = p.dt * v * c;
  J.state(1, 3) = p.dt * sn;
  J.state(2, 3) = p.dt * std::sin(beta) / p.l_r;

  J.input.setZero();
  J.input(0, 0) = -p.dt * v * sn * dbeta;
  J.input(1, 0) = p.dt * v * c * dbeta;
  J.input(2, 0) = p.dt * v * std::cos(beta) * dbeta / p.l_r;
  J.input(3, 1) = p.dt;
  return J;
}

PointMassState step(const DoubleIntegratorParams & p, const PointMassState & s, const Eigen::Vector2d & a)
{
  return {s.position + p.dt * s.velocity, s.velocity + p.dt * a};
}

Jacobians jacobians(const DoubleIntegratorParams & p)
{
  Jacobians J;
  J.state.setIdentity();
  J.state(0, 2) = p.dt;
  J.state(1, 3) = p.dt;
  J.input.setZero();
  J.input(2, 0) = p.dt;
  J.input(3, 1) = p.dt;
  return J;
}

bool goal_reached(const State & state, const State & goal, double eps) { return (state - goal).norm() <= eps; }

bool goal_reached(const VehicleState & state, const VehicleState & goal, double eps)
{
  return goal_reached(state.vec(), goal.vec(), eps);
}

State AgentModel::step(const State & x, const Input & u) const
{
  if (const auto * b = std::get_if<BicycleParams>(&params_)) {
    return dlmpc::step(*b, VehicleState::from(x), VehicleInput::from(u)).vec();
  }
  return dlmpc::step(std::get<DoubleIntegratorParams>(params_), PointMassState::from(x), u).vec();
}

Jacobians AgentModel::jacobians(const State & x, const Input & u) const
{
  if (const auto * b = std::get_if<BicycleParams>(&params_)) {
    return dlmpc::jacobians(*b, VehicleState::from(x), VehicleInput::from(u));
  }
  return dlmpc::jacobians(std::get<DoubleIntegratorParams>(params_));
}

double AgentModel::dt() const
{
  return std::visit([](const auto & p) { return p.dt; }, params_);
}

bool AgentModel::may_reach(
  const State & from, const State & target, int steps, const Bounds & b, double slack) const
{
  const double h = dt();
  if (const auto * bp = std::get_if<BicycleParams>(&params_)) {
    const double a = abs_max(b.input_lo(1), b.input_hi(1));
    const double vmax = abs_max(b.state_lo(3), b.state_hi(3));
    if (std::abs(target(3) - from(3)) > steps * h * a + slack) { return false; }
    const double travel = travel_bound(from(3), target(3), steps, h, a, vmax);
    if ((target.head<2>() - from.head<2>()).norm() > travel + slack) { return false; }
    const double steer = abs_max(b.input_lo(0), b.input_hi(0));
    if (steer < M_PI / 2) {
      const double beta = std::atan(bp->l_r * std::tan(steer) / (bp->l_f + bp->l_r));
      if (std::abs(target(2) - from(2)) > travel * std::sin(beta) / bp->l_r + slack) { return false; }
    }
    return true;
  }
  for (int axis = 0; axis < 2; ++axis) {
    const double a = abs_max(b.input_lo(axis), b.input_hi(axis));
    const double vmax = abs_max(b.state_lo(2 + axis), b.state_hi(2 + axis));
    if (std::abs(target(2 + axis) - from(2 + axis)) > steps * h * a + slack) { return false; }
    const double travel = travel_bound(from(2 + axis), target(2 + axis), steps, h, a, vmax);
    if (std::abs(target(axis) - from(axis)) > travel + slack) { return false; }
  }
  return true;
}

}  // namespace dlmpc
