#include "oracles/svm_oracle.hpp"

#include <Eigen/Dense>

namespace oracle {

namespace {

struct Labeled
{
  Eigen::Vector2d x;
  double y;
};

// KKT system of the equality-constrained QP with the constraints in `active` held tight.
// Unknowns (w1, w2, b, alpha...).
std::optional<SvmSolution> solve_active(const std::vector<Labeled> & pts, const std::vector<int> & active)
{
  const int m = static_cast<int>(active.size());
  const int n = 3 + m;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  // w - sum alpha_i y_i x_i = 0
  K(0, 0) = 1.0;
  K(1, 1) = 1.0;
  for (int s = 0; s < m; ++s) {
    const auto & p = pts[active[s]];
    K(0, 3 + s) = -p.y * p.x(0);
    K(1, 3 + s) = -p.y * p.x(1);
    // sum alpha_i y_i = 0
    K(2, 3 + s) = p.y;
    // y_i (w·x_i + b) = 1
    K(3 + s, 0) = p.y * p.x(0);
    K(3 + s, 1) = p.y * p.x(1);
    K(3 + s, 2) = p.y;
    rhs(3 + s) = 1.0;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (lu.rank() < n) { return std::nullopt; }
  const Eigen::VectorXd z = lu.solve(rhs);
  if ((K * z - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) { return std::nullopt; }
  for (int s = 0; s < m; ++s) {
    if (z(3 + s) < -1e-12) { return std::nullopt; }
  }
  SvmSolution sol;
  sol.w = z.head<2>();
  sol.b = z(2);
  for (const auto & p : pts) {
    if (p.y * (sol.w.dot(p.x) + sol.b) < 1.0 - 1e-9) { return std::nullopt; }
  }
  if (sol.w.norm() == 0.0) { return std::nullopt; }
  sol.margin = 2.0 / sol.w.norm();
  return sol;
}

}  // namespace

std::optional<SvmSolution> hard_margin_svm(const std::vector<Eigen::Vector2d> & a, const std::vector<Eigen::Vector2d> & b)
{
  std::vector<Labeled> pts;
  for (const auto & x : a) { pts.push_back({x, -1.0}); }
  for (const auto & x : b) { pts.push_back({x, 1.0}); }
  const int n = static_cast<int>(pts.size());
  std::optional<SvmSolution> best;
  auto consider = [&](const std::vector<int> & active) {
    bool has_neg = false;
    bool has_pos = false;
    for (const int i : active) { (pts[i].y < 0 ? has_neg : has_pos) = true; }
    if (!has_neg || !has_pos) { return; }
    auto sol = solve_active(pts, active);
    if (sol && (!best || sol->w.squaredNorm() < best->w.squaredNorm())) { best = sol; }
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      consider({i, j});
      for (int k = j + 1; k < n; ++k) { consider({i, j, k}); }
    }
  }
  return best;
}

}  // namespace oracle
