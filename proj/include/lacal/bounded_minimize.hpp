#ifndef LACAL_BOUNDED_MINIMIZE_HPP
#define LACAL_BOUNDED_MINIMIZE_HPP

#include "lacal/common.hpp"

#include <functional>

namespace lacal {

/// Objective returning f(x) and filling the gradient. A non-finite value marks
/// an infeasible point; the line search backs away from it.
using SmoothObjective = std::function<double(const Vector& x, Vector& gradient)>;

struct MinimizeOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double function_tolerance = 1e-12;
  /// Longest step (infinity norm) tried by the line search.
  double max_step = 2.0;
};

struct MinimizeResult {
  Vector x;
  double value = 0.0;
  Vector gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Projected BFGS for box constraints: variables pinned at a bound with the
/// gradient pushing outward are frozen for the step, the remaining ones follow
/// the quasi-Newton direction, and an Armijo backtracking search runs along the
/// projected path. Returns value = +inf when the start itself is infeasible.
MinimizeResult minimize_box(const SmoothObjective& objective, const Vector& start, const Vector& lower,
                            const Vector& upper, const MinimizeOptions& options = {});

}  // namespace lacal

#endif  // LACAL_BOUNDED_MINIMIZE_HPP
