#include "lacal/bounded_minimize.hpp"

#include <cmath>
#include <limits>

namespace lacal {

namespace {

Vector project(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// Components that sit on a bound with the descent direction leaving the box.
std::vector<bool> active_set(const Vector& x, const Vector& g, const Vector& lower, const Vector& upper) {
  std::vector<bool> active(static_cast<std::size_t>(x.size()), false);
  for (Index i = 0; i < x.size(); ++i) {
    const bool at_lower = x[i] <= lower[i] && g[i] > 0.0;
    const bool at_upper = x[i] >= upper[i] && g[i] < 0.0;
    active[static_cast<std::size_t>(i)] = at_lower || at_upper;
  }
  return active;
}

double projected_gradient_norm(const Vector& g, const std::vector<bool>& active) {
  double norm = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    if (!active[static_cast<std::size_t>(i)]) norm = std::max(norm, std::abs(g[i]));
  }
  return norm;
}

}  // namespace

MinimizeResult minimize_box(const SmoothObjective& objective, const Vector& start, const Vector& lower,
                            const Vector& upper, const MinimizeOptions& options) {
  const Index n = start.size();
  require(lower.size() == n && upper.size() == n, "minimize_box: bound dimension mismatch");
  require((lower.array() <= upper.array()).all(), "minimize_box: lower bound exceeds upper bound");

  MinimizeResult result;
  result.x = project(start, lower, upper);
  result.gradient = Vector::Zero(n);
  result.value = objective(result.x, result.gradient);
  result.evaluations = 1;
  if (!std::isfinite(result.value) || !result.gradient.allFinite()) {
    result.value = std::numeric_limits<double>::infinity();
    return result;
  }

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  Vector x = result.x;
  Vector g = result.gradient;
  double fx = result.value;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const auto active = active_set(x, g, lower, upper);
    if (projected_gradient_norm(g, active) < options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    bool accepted = false;
    Vector x_new;
    Vector g_new(n);
    double f_new = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Vector direction = -(H * g);
      for (Index i = 0; i < n; ++i) {
        if (active[static_cast<std::size_t>(i)]) direction[i] = 0.0;
      }
      if (direction.dot(g) >= 0.0) {
        H.setIdentity();
        direction = -g;
        for (Index i = 0; i < n; ++i) {
          if (active[static_cast<std::size_t>(i)]) direction[i] = 0.0;
        }
      }
      const double longest = direction.cwiseAbs().maxCoeff();
      double step = longest > options.max_step ? options.max_step / longest : 1.0;
      for (int backtrack = 0; backtrack < 50; ++backtrack, step *= 0.5) {
        x_new = project(x + step * direction, lower, upper);
        if ((x_new - x).cwiseAbs().maxCoeff() == 0.0) break;
        f_new = objective(x_new, g_new);
        ++result.evaluations;
        if (std::isfinite(f_new) && g_new.allFinite() && f_new <= fx + 1e-4 * g.dot(x_new - x)) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (H.isIdentity()) break;
        H.setIdentity();
      }
    }
    if (!accepted) {
      // No descent possible along the projected gradient at machine precision.
      result.converged = projected_gradient_norm(g, active) < std::sqrt(options.gradient_tolerance);
      break;
    }

    const Vector s = x_new - x;
    const Vector yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    const double change = fx - f_new;
    x = x_new;
    g = g_new;
    fx = f_new;
    if (change <= options.function_tolerance * (1.0 + std::abs(fx)) &&
        s.cwiseAbs().maxCoeff() < 1e-10) {
      result.converged = true;
      break;
    }
  }
  result.x = x;
  result.gradient = g;
  result.value = fx;
  return result;
}

}  // namespace lacal
