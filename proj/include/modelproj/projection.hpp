#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modelproj/distributions.hpp"

namespace modelproj {

// Location m of the generating process's projection in the embedded model
// space, its squared off-plane distance h2, and per-model KL(g, f_i)
// estimates. kl_to_g[i] == h2 + d(f_i, m)^2 holds exactly.
struct ProjectionResult {
  Vector m;
  double h2 = 0.0;
  double h2_unclamped = 0.0;
  double sgg_used = 0.0;
  Vector kl_to_g;
  double objective_value = 0.0;
  bool clamped = false;
  bool reduced = false;  // coordinates nearly collinear; solved in a subspace
  bool converged = false;
  int start_index = 0;
};

struct AverageResult {
  Vector weights;
  Vector location;
};

// Akaike weights exp(-delta_i/2) / sum exp(-delta_r/2), delta = AIC - min AIC.
Vector akaike_weights(const Vector& aics);

AverageResult model_average_location(const Matrix& coords, const Vector& weights);

// Sum over pairs i<j of (t_i - t_j)^2 with t_i = -sgf_i - ||c_i - m||^2. Sgg
// cancels from every difference, so it does not appear.
double projection_objective(const Vector& m, const Vector& sgf_hats, const Matrix& coords);
Vector projection_gradient(const Vector& m, const Vector& sgf_hats, const Matrix& coords);

struct ProjectionOptions {
  std::uint64_t seed = 0;
  std::optional<Vector> average_start;  // model-average location, tried first
  int quasi_random_starts = 16;
  int max_iterations = 1000;
  double gradient_tolerance = 1e-10;
  int threads = 1;
};

// Minimizes the pairwise-level objective over m by multistart L-BFGS, then
// sets h2 = sgg_hat - mean(sgf_i + d_i^2), clamped at zero. Refuses when there
// are fewer than dim + 1 models.
ProjectionResult solve_projection(const Vector& sgf_hats, const Matrix& coords, double sgg_hat,
                                  const ProjectionOptions& options = {});

enum class DeletionDirection { left, right };

struct SweepStep {
  int step = 0;
  std::string removed;  // model dropped before this step; empty at step 0
  std::vector<std::size_t> survivors;
  ProjectionResult projection;
  AverageResult average;
};

// Repeatedly removes the model with the smallest (left) or largest (right)
// first coordinate and recomputes weights, average and projection inside the
// fixed embedding. Returns steps + 1 entries, the first for the full set.
std::vector<SweepStep> deletion_sweep(const std::vector<std::string>& names, const Matrix& coords,
                                      const Vector& aics, const Vector& sgf_hats, double sgg_hat,
                                      DeletionDirection direction, int steps,
                                      const ProjectionOptions& options = {});

}  // namespace modelproj
