#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modelproj/distributions.hpp"
#include "modelproj/model_fit.hpp"

namespace modelproj {

// R x R matrix of KL divergences between models; entry (i, j) = KL(f_i || f_j).
// Zero diagonal, finite non-negative entries, R >= 3.
struct DivergenceMatrix {
  Matrix values;
  std::vector<std::string> names;

  void validate() const;
  Eigen::Index size() const { return values.rows(); }
  // max |KL_ij - KL_ji|
  double asymmetry() const;
};

struct Embedding {
  Matrix coords;  // R x dim, centered, in dissimilarity units after calibration
  std::vector<std::string> names;
  int dim = 2;
  double stress = 0.0;  // Kruskal stress-1 in [0, 1]
  double scale = 1.0;   // calibration factor applied to the raw configuration
  bool converged = false;
  int restarts_used = 0;
  int best_restart = 0;
  int iterations = 0;
  bool padded = false;  // classical init had fewer positive eigenvalues than dim
};

DivergenceMatrix divergence_matrix(const std::vector<FittedModel>& models);
DivergenceMatrix divergence_matrix(const std::vector<GaussianModel>& models,
                                   std::vector<std::string> names);

// delta_ij = sqrt((KL_ij + KL_ji) / 2).
Matrix dissimilarities(const DivergenceMatrix& dm);

struct ClassicalMdsResult {
  Matrix coords;
  bool padded = false;
};

// Torgerson scaling of -1/2 J delta^2 J; eigenvalues are clamped at zero and
// missing dimensions are padded with zero columns.
ClassicalMdsResult classical_mds(const Matrix& delta, int dim);

// Pool-adjacent-violators: weighted least-squares nondecreasing fit.
Vector isotonic_regression(const Vector& values, const Vector& weights);
Vector isotonic_regression(const Vector& values);

struct NmdsOptions {
  int dim = 2;
  int restarts = 8;
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Kruskal stress-1 of a configuration against the rank order of delta
// (primary approach to ties).
double kruskal_stress(const Matrix& delta, const Matrix& coords);

// Non-metric MDS. Best of a classical-scaling start and restarts-1 random
// starts (lowest stress, ties to the lower restart index), centered, then
// rescaled by sum(delta d) / sum(d^2).
Embedding nmds(const Matrix& delta, const NmdsOptions& options,
               std::vector<std::string> names = {});

double embed_distance(const Embedding& e, Eigen::Index i, const Eigen::Ref<const Vector>& point);

}  // namespace modelproj
