#pragma once

#include <functional>

#include "modelproj/distributions.hpp"

namespace modelproj {

// Objective evaluated at x; writes the gradient into `grad` (already sized).
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct MinimizeOptions {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-10;  // stop when ||grad|| falls below
  double relative_tolerance = 0.0;    // stop when |f_prev - f| <= tol * f_prev (0 disables)
  double initial_step_norm = 0.0;     // length of the first step; 0 means min(1, 1/||g||)
  int memory = 8;
};

struct MinimizeResult {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Limited-memory BFGS with a backtracking (step-halving) Armijo line search.
MinimizeResult minimize_lbfgs(const Objective& objective, Vector x0, const MinimizeOptions& options);

}  // namespace modelproj
