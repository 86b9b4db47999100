#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace oracle {

struct SvmSolution
{
  Eigen::Vector2d w;
  double b = 0.0;
  /// Distance between the two supporting lines, 2 / |w|.
  double margin = 0.0;
};

/// Hard-margin linear SVM in primal form, min |w|^2 s.t. y (w·x + b) >= 1 with y = -1 on
/// `a` and +1 on `b`, solved by enumerating active sets of two and three constraints and
/// keeping the best KKT point. nullopt when no active set is primal and dual feasible
/// (the sets are not strictly separable).
std::optional<SvmSolution> hard_margin_svm(const std::vector<Eigen::Vector2d> & a, const std::vector<Eigen::Vector2d> & b);

}  // namespace oracle
