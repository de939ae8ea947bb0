#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Core>

namespace ubvm {

// Returns f(x) and writes the gradient into grad (already sized like x).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BfgsOptions {
  std::size_t max_iterations = 200;
  // Converged when |grad| < gradient_tolerance * (1 + |f|).
  double gradient_tolerance = 1e-10;
  // Armijo sufficient-decrease constant and backtracking factor.
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  std::size_t max_line_search_steps = 60;
  // Approximate Armijo fallback: allowed rise in f, relative to 1 + |f|, and
  // the curvature factor on the directional derivative.
  double cost_noise = 1e-12;
  double curvature_c2 = 0.9;
};

enum class BfgsStatus { converged, max_iterations, line_search_failed };

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  BfgsStatus status = BfgsStatus::max_iterations;
};

// Dense BFGS on the inverse Hessian with a backtracking Armijo line search.
// The initial inverse Hessian is rescaled after the first accepted step;
// updates that would break positive definiteness (s.y <= 0) are skipped.
BfgsResult minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0,
                         const BfgsOptions& options = {});

}  // namespace ubvm
