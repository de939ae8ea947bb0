#include "ubvm/bfgs.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace ubvm {

BfgsResult minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = x0;
  Eigen::VectorXd g(n);
  res.value = f(res.x, g);
  res.evaluations = 1;

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  Eigen::VectorXd g_new(n);
  Eigen::VectorXd x_new(n);

  for (res.iterations = 0;; ++res.iterations) {
    res.gradient_norm = g.norm();
    if (res.gradient_norm < options.gradient_tolerance * (1.0 + std::abs(res.value))) {
      res.status = BfgsStatus::converged;
      return res;
    }
    if (res.iterations >= options.max_iterations) {
      res.status = BfgsStatus::max_iterations;
      return res;
    }

    Eigen::VectorXd p = -h * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      // Lost descent; restart from steepest descent.
      h.setIdentity();
      scaled = false;
      p = -g;
      slope = -g.squaredNorm();
    }

    double alpha = 1.0;
    double f_new = res.value;
    bool accepted = false;
    for (std::size_t ls = 0; ls < options.max_line_search_steps; ++ls) {
      x_new = res.x + alpha * p;
      f_new = f(x_new, g_new);
      ++res.evaluations;
      if (!std::isfinite(f_new)) {
        alpha *= options.backtrack;
        continue;
      }
      if (f_new <= res.value + options.armijo_c1 * alpha * slope) {
        accepted = true;
        break;
      }
      // Near the minimum the predicted decrease drops below the resolution
      // of f. Fall back to the approximate Armijo test: f may not rise past
      // its roundoff band and the directional derivative must have shrunk.
      const double slope_new = g_new.dot(p);
      if (f_new <= res.value + options.cost_noise * (1.0 + std::abs(res.value)) &&
          slope_new >= options.curvature_c2 * slope &&
          slope_new <= (1.0 - 2.0 * options.armijo_c1) * -slope) {
        accepted = true;
        break;
      }
      alpha *= options.backtrack;
    }
    if (!accepted) {
      res.status = BfgsStatus::line_search_failed;
      return res;
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (!scaled) {
        h *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded.
      h += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
           rho * (hy * s.transpose() + s * hy.transpose());
    }

    res.x = x_new;
    res.value = f_new;
    g = g_new;
  }
}

}  // namespace ubvm
