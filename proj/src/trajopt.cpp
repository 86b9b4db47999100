#include "dlmpc/trajopt.hpp"

#include "dlmpc/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dlmpc {

namespace {

// The solver works on z_k = (x_k, u_{k-1}) so that the rate limit becomes a stage
// constraint on (z_k, u_k).
using Z = Eigen::Matrix<double, 6, 1>;
using U = Eigen::Vector2d;
using Mzz = Eigen::Matrix<double, 6, 6>;
using Muu = Eigen::Matrix2d;
using Muz = Eigen::Matrix<double, 2, 6>;
using Mzu = Eigen::Matrix<double, 6, 2>;

struct Row
{
  Z gz = Z::Zero();
  U gu = U::Zero();
  double c0 = 0.0;

  double eval(const Z & z, const U & u) const { return gz.dot(z) + gu.dot(u) + c0; }
};

struct Rows
{
  std::vector<Row> ineq;
  std::vector<Row> eq;
};

struct Transcription
{
  std::vector<Rows> stages;
  Rows terminal;
  std::vector<bool> rate_cost;
};

void add_box(std::vector<Row> & rows, int offset_z, int offset_u, int dim, const double * lo, const double * hi)
{
  for (int i = 0; i < dim; ++i) {
    if (std::isfinite(hi[i])) {
      Row r;
      if (offset_z >= 0) { r.gz(offset_z + i) = 1.0; } else { r.gu(offset_u + i) = 1.0; }
      r.c0 = -hi[i];
      rows.push_back(r);
    }
    if (std::isfinite(lo[i])) {
      Row r;
      if (offset_z >= 0) { r.gz(offset_z + i) = -1.0; } else { r.gu(offset_u + i) = -1.0; }
      r.c0 = lo[i];
      rows.push_back(r);
    }
  }
}

// |u - w| <= rate where w is the previous input held in z (or a constant when `fixed`).
void add_rate(std::vector<Row> & rows, const Input & rate, bool on_u, const Input * fixed)
{
  for (int i = 0; i < 2; ++i) {
    if (!std::isfinite(rate(i))) { continue; }
    for (const double sgn : {1.0, -1.0}) {
      Row r;
      if (on_u) {
        r.gu(i) = sgn;
        r.gz(4 + i) = -sgn;
        r.c0 = -rate(i);
      } else {
        r.gz(4 + i) = sgn;
        r.c0 = -sgn * (*fixed)(i) - rate(i);
      }
      rows.push_back(r);
    }
  }
}

Transcription transcribe(const OcpProblem & pb)
{
  const int N = pb.horizon;
  const Bounds & b = pb.bounds;
  Transcription tr;
  tr.stages.resize(N);
  tr.rate_cost.resize(N);
  for (int k = 0; k < N; ++k) {
    auto & rows = tr.stages[k].ineq;
    add_box(rows, -1, 0, 2, b.input_lo.data(), b.input_hi.data());
    const bool has_prev = k > 0 || pb.previous_input.has_value();
    tr.rate_cost[k] = has_prev;
    if (has_prev) { add_rate(rows, b.rate, true, nullptr); }
    if (k == 0) { continue; }
    add_box(rows, 0, -1, 4, b.state_lo.data(), b.state_hi.data());
    if (!pb.halfplanes.empty()) {
      for (const auto & hp : pb.halfplanes[k]) {
        Row r;
        r.gz.head<2>() = hp.normal;
        r.c0 = hp.offset;
        rows.push_back(r);
      }
    }
  }
  for (int i = 0; i < 4; ++i) {
    Row r;
    r.gz(i) = 1.0;
    r.c0 = -pb.terminal_target(i);
    tr.terminal.eq.push_back(r);
  }
  if (pb.terminal_successor_input) { add_rate(tr.terminal.ineq, b.rate, false, &*pb.terminal_successor_input); }
  return tr;
}

struct Multipliers
{
  std::vector<std::vector<double>> stage;
  std::vector<double> term_ineq;
  std::vector<double> term_eq;
};

struct Trajectory6
{
  std::vector<Z> z;
  std::vector<U> u;
};

Trajectory6 rollout_z(const OcpProblem & pb, const Z & z0, const std::vector<U> & u)
{
  Trajectory6 out;
  out.u = u;
  out.z.resize(u.size() + 1);
  out.z[0] = z0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    out.z[k + 1].head<4>() = pb.model.step(out.z[k].head<4>(), u[k]);
    out.z[k + 1].tail<2>() = u[k];
  }
  return out;
}

double phr_ineq(double lambda, double rho, double c)
{
  const double s = std::max(0.0, lambda + rho * c);
  return (s * s - lambda * lambda) / (2.0 * rho);
}

class AlIlqr
{
public:
  AlIlqr(const OcpProblem & pb, const OcpSettings & st) : pb_(pb), st_(st), tr_(transcribe(pb))
  {
    const int N = pb.horizon;
    mult_.stage.resize(N);
    for (int k = 0; k < N; ++k) { mult_.stage[k].assign(tr_.stages[k].ineq.size(), 0.0); }
    mult_.term_ineq.assign(tr_.terminal.ineq.size(), 0.0);
    mult_.term_eq.assign(tr_.terminal.eq.size(), 0.0);
    z0_.head<4>() = pb.initial_state;
    z0_.tail<2>() = pb.previous_input.value_or(Input::Zero());
    rho_ = st.initial_penalty;
  }

  OcpSolution solve(std::vector<U> u)
  {
    traj_ = rollout_z(pb_, z0_, u);
    int used = 0;
    double prev_violation = std::numeric_limits<double>::infinity();
    bool inner_capped = false;
    ViolationBreakdown v = measure();
    if (targets_met(v)) { return finish(used, false); }

    for (int outer = 0; outer < st_.max_outer; ++outer) {
      inner_capped = true;
      double mu = 1e-6;
      double J = merit(traj_);
      for (int inner = 0; inner < st_.max_inner; ++inner) {
        ++used;
        const auto step = iterate(J, mu);
        if (step == Step::Converged || step == Step::Stuck) {
          inner_capped = false;
          break;
        }
        if (targets_met(measure())) { return finish(used, false); }
      }
      v = measure();
      if (targets_met(v)) { return finish(used, false); }
      if (outer >= 2 && v.max() > st_.stall_floor && v.max() > st_.stall_ratio * prev_violation) {
        return finish(used, false, true);
      }
      prev_violation = v.max();
      update_multipliers();
      rho_ *= st_.penalty_growth;
    }
    return finish(used, inner_capped);
  }

private:
  enum class Step
  {
    Accepted,
    Converged,
    Stuck,
  };

  const OcpProblem & pb_;
  const OcpSettings & st_;
  Transcription tr_;
  Multipliers mult_;
  Z z0_ = Z::Zero();
  Trajectory6 traj_;
  double rho_ = 10.0;

  double rho() const { return rho_; }

  ViolationBreakdown measure() const
  {
    std::vector<State> xs(traj_.z.size());
    for (std::size_t k = 0; k < xs.size(); ++k) { xs[k] = traj_.z[k].head<4>(); }
    return violations(pb_, xs, traj_.u);
  }

  bool targets_met(const ViolationBreakdown & v) const
  {
    return v.path <= st_.target_feas && v.terminal <= st_.target_term;
  }

  OcpSolution finish(int used, bool capped, bool stalled = false) const
  {
    OcpSolution s;
    s.inputs = traj_.u;
    s.states.resize(traj_.z.size());
    for (std::size_t k = 0; k < s.states.size(); ++k) { s.states[k] = traj_.z[k].head<4>(); }
    const auto v = violations(pb_, s.states, s.inputs);
    s.max_violation = v.max();
    s.terminal_gap = v.terminal;
    s.iterations_used = used;
    if (v.path <= st_.tol_feas && v.terminal <= st_.tol_term) {
      s.status = OcpStatus::Solved;
    } else if (capped && !stalled) {
      s.status = OcpStatus::MaxIterations;
    } else {
      s.status = OcpStatus::Infeasible;
    }
    return s;
  }

  double merit(const Trajectory6 & t) const
  {
    const double r = rho();
    double J = 0.0;
    for (int k = 0; k < pb_.horizon; ++k) {
      const Z & z = t.z[k];
      const U & u = t.u[k];
      if (tr_.rate_cost[k]) { J += st_.rate_weight * (u - z.tail<2>()).squaredNorm(); }
      const auto & rows = tr_.stages[k].ineq;
      for (std::size_t i = 0; i < rows.size(); ++i) { J += phr_ineq(mult_.stage[k][i], r, rows[i].eval(z, u)); }
    }
    const Z & zN = t.z.back();
    const U zero = U::Zero();
    for (std::size_t i = 0; i < tr_.terminal.ineq.size(); ++i) {
      J += phr_ineq(mult_.term_ineq[i], r, tr_.terminal.ineq[i].eval(zN, zero));
    }
    for (std::size_t i = 0; i < tr_.terminal.eq.size(); ++i) {
      const double c = tr_.terminal.eq[i].eval(zN, zero);
      J += mult_.term_eq[i] * c + 0.5 * r * c * c;
    }
    return J;
  }

  void update_multipliers()
  {
    const double r = rho();
    const U zero = U::Zero();
    for (int k = 0; k < pb_.horizon; ++k) {
      const auto & rows = tr_.stages[k].ineq;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        mult_.stage[k][i] = std::max(0.0, mult_.stage[k][i] + r * rows[i].eval(traj_.z[k], traj_.u[k]));
      }
    }
    for (std::size_t i = 0; i < tr_.terminal.ineq.size(); ++i) {
      mult_.term_ineq[i] = std::max(0.0, mult_.term_ineq[i] + r * tr_.terminal.ineq[i].eval(traj_.z.back(), zero));
    }
    for (std::size_t i = 0; i < tr_.terminal.eq.size(); ++i) {
      mult_.term_eq[i] += r * tr_.terminal.eq[i].eval(traj_.z.back(), zero);
    }
  }

  Step iterate(double & J, double & mu)
  {
    const int N = pb_.horizon;
    const double r = rho();
    std::vector<Mzu> K(N);
    std::vector<U> d(N);

    for (;;) {
      // Terminal value function.
      Z Vx = Z::Zero();
      Mzz Vxx = Mzz::Zero();
      const U zero = U::Zero();
      const Z & zN = traj_.z.back();
      for (std::size_t i = 0; i < tr_.terminal.ineq.size(); ++i) {
        const Row & row = tr_.terminal.ineq[i];
        const double s = mult_.term_ineq[i] + r * row.eval(zN, zero);
        if (s > 0.0) {
          Vx += s * row.gz;
          Vxx += r * row.gz * row.gz.transpose();
        }
      }
      for (std::size_t i = 0; i < tr_.terminal.eq.size(); ++i) {
        const Row & row = tr_.terminal.eq[i];
        Vx += (mult_.term_eq[i] + r * row.eval(zN, zero)) * row.gz;
        Vxx += r * row.gz * row.gz.transpose();
      }

      double dV1 = 0.0;
      double dV2 = 0.0;
      bool ok = true;
      for (int k = N - 1; k >= 0; --k) {
        const Z & z = traj_.z[k];
        const U & u = traj_.u[k];
        Z lz = Z::Zero();
        U lu = U::Zero();
        Mzz lzz = Mzz::Zero();
        Muu luu = Muu::Zero();
        Muz luz = Muz::Zero();
        if (tr_.rate_cost[k]) {
          const U du = u - z.tail<2>();
          const double w2 = 2.0 * st_.rate_weight;
          lu += w2 * du;
          lz.tail<2>() -= w2 * du;
          luu += w2 * Muu::Identity();
          lzz.bottomRightCorner<2, 2>() += w2 * Muu::Identity();
          luz.rightCols<2>() -= w2 * Muu::Identity();
        }
        const auto & rows = tr_.stages[k].ineq;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const double s = mult_.stage[k][i] + r * rows[i].eval(z, u);
          if (s <= 0.0) { continue; }
          lz += s * rows[i].gz;
          lu += s * rows[i].gu;
          lzz += r * rows[i].gz * rows[i].gz.transpose();
          luu += r * rows[i].gu * rows[i].gu.transpose();
          luz += r * rows[i].gu * rows[i].gz.transpose();
        }

        const Jacobians jac = pb_.model.jacobians(z.head<4>(), u);
        Mzz A = Mzz::Zero();
        A.topLeftCorner<4, 4>() = jac.state;
        Mzu B = Mzu::Zero();
        B.topRows<4>() = jac.input;
        B.bottomRows<2>() = Muu::Identity();

        const Z Qx = lz + A.transpose() * Vx;
        const U Qu = lu + B.transpose() * Vx;
        const Mzz Qxx = lzz + A.transpose() * Vxx * A;
        const Muu Quu = luu + B.transpose() * Vxx * B;
        const Muz Qux = luz + B.transpose() * Vxx * A;

        const Muu Quu_reg = Quu + mu * Muu::Identity();
        Eigen::LLT<Muu> llt(Quu_reg);
        if (llt.info() != Eigen::Success) {
          ok = false;
          break;
        }
        const Muz Kk = -llt.solve(Qux);
        const U dk = -llt.solve(Qu);
        K[k] = Kk.transpose();
        d[k] = dk;
        dV1 += dk.dot(Qu);
        dV2 += 0.5 * dk.dot(Quu * dk);
        Vx = Qx + Kk.transpose() * Quu * dk + Kk.transpose() * Qu + Qux.transpose() * dk;
        Vxx = Qxx + Kk.transpose() * Quu * Kk + Kk.transpose() * Qux + Qux.transpose() * Kk;
        Vxx = 0.5 * (Vxx + Vxx.transpose()).eval();
      }
      if (!ok) {
        mu = std::max(mu * 10.0, 1e-6);
        if (mu > 1e12) { return Step::Stuck; }
        continue;
      }

      if (-dV1 <= 1e-14 * (1.0 + std::abs(J))) { return Step::Converged; }

      for (double alpha = 1.0; alpha >= 1.0 / 1024.0; alpha *= 0.5) {
        Trajectory6 cand;
        cand.z.resize(N + 1);
        cand.u.resize(N);
        cand.z[0] = z0_;
        for (int k = 0; k < N; ++k) {
          const Z dz = cand.z[k] - traj_.z[k];
          cand.u[k] = traj_.u[k] + alpha * d[k] + K[k].transpose() * dz;
          cand.z[k + 1].head<4>() = pb_.model.step(cand.z[k].head<4>(), cand.u[k]);
          cand.z[k + 1].tail<2>() = cand.u[k];
        }
        const double Jn = merit(cand);
        const double expected = -(alpha * dV1 + alpha * alpha * dV2);
        if (std::isfinite(Jn) && J - Jn >= 1e-4 * expected && Jn <= J) {
          const double drop = J - Jn;
          traj_ = std::move(cand);
          J = Jn;
          mu = std::max(mu / 10.0, 1e-9);
          if (drop <= 1e-13 * (1.0 + std::abs(J))) { return Step::Converged; }
          return Step::Accepted;
        }
      }
      mu = std::max(mu * 10.0, 1e-6);
      if (mu > 1e12) { return Step::Stuck; }
    }
  }
};

}  // namespace

const char * to_string(OcpStatus status)
{
  switch (status) {
    case OcpStatus::Solved: return "Solved";
    case OcpStatus::Infeasible: return "Infeasible";
    case OcpStatus::MaxIterations: return "MaxIterations";
  }
  return "?";
}

void OcpProblem::validate() const
{
  if (horizon < 1) { throw std::invalid_argument("OcpProblem: horizon must be positive"); }
  if ((bounds.state_lo.array() > bounds.state_hi.array()).any() ||
      (bounds.input_lo.array() > bounds.input_hi.array()).any() || (bounds.rate.array() < 0.0).any()) {
    throw std::invalid_argument("OcpProblem: empty box");
  }
  if ((terminal_target.array() < bounds.state_lo.array()).any() ||
      (terminal_target.array() > bounds.state_hi.array()).any()) {
    throw std::invalid_argument("OcpProblem: terminal target outside the state box");
  }
  if (!halfplanes.empty() && static_cast<int>(halfplanes.size()) != horizon) {
    throw std::invalid_argument("OcpProblem: one half-plane list per step required");
  }
}

std::vector<State> rollout(const AgentModel & model, const State & x0, const std::vector<Input> & inputs)
{
  std::vector<State> xs;
  xs.reserve(inputs.size() + 1);
  xs.push_back(x0);
  for (const auto & u : inputs) { xs.push_back(model.step(xs.back(), u)); }
  return xs;
}

ViolationBreakdown violations(const OcpProblem & pb, const std::vector<State> & xs, const std::vector<Input> & us)
{
  const int N = pb.horizon;
  if (static_cast<int>(us.size()) != N || static_cast<int>(xs.size()) != N + 1) {
    throw LengthMismatch(
      "expected " + std::to_string(N + 1) + " states and " + std::to_string(N) + " inputs, got " +
      std::to_string(xs.size()) + " and " + std::to_string(us.size()));
  }
  const Bounds & b = pb.bounds;
  double v = (xs[0] - pb.initial_state).cwiseAbs().maxCoeff();
  auto box = [&v](const auto & x, const auto & lo, const auto & hi) {
    v = std::max(v, (x - hi).maxCoeff());
    v = std::max(v, (lo - x).maxCoeff());
  };
  auto rate = [&v, &b](const Input & a, const Input & c) {
    v = std::max(v, ((a - c).cwiseAbs() - b.rate).maxCoeff());
  };
  for (int k = 0; k <= N; ++k) { box(xs[k], b.state_lo, b.state_hi); }
  for (int k = 0; k < N; ++k) {
    v = std::max(v, (xs[k + 1] - pb.model.step(xs[k], us[k])).cwiseAbs().maxCoeff());
    box(us[k], b.input_lo, b.input_hi);
    if (k > 0) {
      rate(us[k], us[k - 1]);
    } else if (pb.previous_input) {
      rate(us[0], *pb.previous_input);
    }
    if (!pb.halfplanes.empty()) {
      for (const auto & hp : pb.halfplanes[k]) { v = std::max(v, hp.eval(xs[k].head<2>())); }
    }
  }
  if (pb.terminal_successor_input) { rate(us[N - 1], *pb.terminal_successor_input); }
  ViolationBreakdown out;
  out.path = std::max(v, 0.0);
  out.terminal = (xs[N] - pb.terminal_target).cwiseAbs().maxCoeff();
  return out;
}

double max_violation(const OcpProblem & problem, const std::vector<State> & states, const std::vector<Input> & inputs)
{
  return violations(problem, states, inputs).max();
}

OcpSolution solve_ocp(
  const OcpProblem & problem, const std::optional<std::vector<Input>> & warm_start, const OcpSettings & settings)
{
  problem.validate();
  std::vector<Input> u0;
  if (warm_start) {
    if (static_cast<int>(warm_start->size()) != problem.horizon) {
      throw LengthMismatch("warm start must hold one input per step");
    }
    u0 = *warm_start;
  } else {
    u0.assign(problem.horizon, problem.previous_input.value_or(Input::Zero()));
  }
  AlIlqr solver(problem, settings);
  return solver.solve(std::move(u0));
}

}  // namespace dlmpc
