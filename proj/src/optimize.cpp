#include "modelproj/optimize.hpp"

#include <cmath>
#include <algorithm>
#include <deque>

namespace modelproj {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;
constexpr double kStallTolerance = 1e-6;
constexpr double kRoundoff = 1e-14;

}  // namespace

MinimizeResult minimize_lbfgs(const Objective& objective, Vector x0, const MinimizeOptions& options) {
  MinimizeResult result;
  result.x = std::move(x0);
  Vector grad(result.x.size());
  result.value = objective(result.x, grad);
  result.gradient_norm = grad.norm();

  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  std::deque<double> rho_hist;
  bool first_step = true;

  while (result.iterations < options.max_iterations) {
    if (result.gradient_norm < options.gradient_tolerance || result.value == 0.0) {
      result.converged = true;
      return result;
    }

    // Two-loop recursion.
    Vector dir = -grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t t = s_hist.size(); t-- > 0;) {
      alpha[t] = rho_hist[t] * s_hist[t].dot(dir);
      dir -= alpha[t] * y_hist[t];
    }
    if (!s_hist.empty()) dir *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t t = 0; t < s_hist.size(); ++t) {
      const double beta = rho_hist[t] * y_hist[t].dot(dir);
      dir += (alpha[t] - beta) * s_hist[t];
    }
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -grad;
      slope = -grad.squaredNorm();
      first_step = true;
    }

    double step = 1.0;
    if (first_step) {
      const double dnorm = dir.norm();
      step = options.initial_step_norm > 0.0 ? options.initial_step_norm / dnorm
                                             : std::min(1.0, 1.0 / dnorm);
    }

    Vector trial_grad(grad.size());
    Vector trial;
    double trial_value = 0.0;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h) {
      trial = result.x + step * dir;
      trial_value = objective(trial, trial_grad);
      if (!std::isfinite(trial_value)) {
        step *= 0.5;
        continue;
      }
      const bool armijo =
          trial_value < result.value && trial_value <= result.value + kArmijo * step * slope;
      // Near the optimum the objective stops resolving progress; keep going
      // while the gradient still shrinks and the value is flat to roundoff.
      const bool flat = trial_value <= result.value + kRoundoff * std::abs(result.value) &&
                        trial_grad.norm() < result.gradient_norm;
      if (armijo || flat) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (first_step) {
        // No representable decrease along -grad: stationary to working precision
        // unless the gradient is still large.
        result.converged =
            result.gradient_norm <= kStallTolerance * std::max(1.0, std::abs(result.value));
        return result;
      }
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      first_step = true;
      ++result.iterations;
      continue;
    }

    Vector s = trial - result.x;
    Vector y = trial_grad - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    first_step = false;

    const double previous = result.value;
    result.x = std::move(trial);
    result.value = trial_value;
    grad = trial_grad;
    result.gradient_norm = grad.norm();
    ++result.iterations;

    if (options.relative_tolerance > 0.0 &&
        previous - result.value <= options.relative_tolerance * std::abs(previous)) {
      result.converged = true;
      return result;
    }
  }
  result.converged = result.gradient_norm < options.gradient_tolerance;
  return result;
}

}  // namespace modelproj
