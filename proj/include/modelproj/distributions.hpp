#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace modelproj {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Multivariate normal N(mean, cov).
//
// The covariance is accepted if its symmetrized form is positive definite and
// the asymmetry is within 1e-12 relative to the largest entry; it is stored
// symmetrized together with its Cholesky factor.
class GaussianModel {
 public:
  GaussianModel(Vector mean, Matrix cov);

  static GaussianModel standard(Eigen::Index p);

  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  Eigen::Index dim() const { return mean_.size(); }

  // Lower Cholesky factor L with cov = L L^T.
  const Matrix& cholesky_lower() const { return chol_lower_; }
  double log_det() const { return log_det_; }

  // Solves cov * x = rhs.
  Matrix solve(const Matrix& rhs) const;

  bool operator==(const GaussianModel& other) const {
    return mean_ == other.mean_ && cov_ == other.cov_;
  }

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_lower_;
  double log_det_ = 0.0;
};

// An n x p data matrix with named columns. Requires n >= 2 and finite entries.
class Sample {
 public:
  Sample(Matrix data, std::vector<std::string> names);
  explicit Sample(Matrix data);  // names default to x1..xp

  const Matrix& data() const { return data_; }
  const std::vector<std::string>& names() const { return names_; }
  Eigen::Index n() const { return data_.rows(); }
  Eigen::Index p() const { return data_.cols(); }

  // Column index of a variable; throws ValidationError if absent.
  Eigen::Index column(const std::string& name) const;

  bool operator==(const Sample& other) const {
    return names_ == other.names_ && data_ == other.data_;
  }

 private:
  Matrix data_;
  std::vector<std::string> names_;
};

std::vector<std::string> default_variable_names(Eigen::Index p);

struct PathEdge {
  std::string source;
  std::string target;
  double coefficient = 0.0;

  bool operator==(const PathEdge&) const = default;
};

// Linear-Gaussian structural model x = c + B x + e, e ~ N(0, diag(noise_sd^2)),
// over an acyclic edge graph.
struct PathModel {
  std::vector<std::string> variables;
  std::vector<PathEdge> edges;
  std::vector<double> noise_sd;
  std::vector<double> intercepts;

  // Throws ValidationError on unknown endpoints, duplicate names or edges,
  // non-positive noise, size mismatches, or a cycle (the message names it).
  void validate() const;

  // Variable indices in an order where every edge points forward.
  std::vector<std::size_t> topological_order() const;

  std::size_t index_of(const std::string& name) const;

  bool operator==(const PathModel&) const = default;
};

double log_density(const GaussianModel& model, const Eigen::Ref<const Vector>& x);

// n i.i.d. rows via mean + L z. Deterministic for a fixed seed; n = 1 allowed.
Matrix draw(const GaussianModel& model, Eigen::Index n, std::uint64_t seed);

Sample sample(const GaussianModel& model, Eigen::Index n, std::uint64_t seed,
              std::vector<std::string> names = {});

// KL(a || b) = E_a[ln a - ln b], natural-log scale without Akaike's factor 2.
double kl_gaussian(const GaussianModel& a, const GaussianModel& b);

// Neg-selfentropy Sgg = E[ln f] = -1/2 ln((2 pi e)^p det cov). Negative of the
// differential entropy.
double entropy_gaussian(const GaussianModel& model);

// Exact implied joint distribution: mu = (I-B)^-1 c, cov = (I-B)^-1 D (I-B)^-T.
GaussianModel reduce_path_model(const PathModel& pm);

// Simulates the structural equations directly, one variable at a time in
// topological order. Columns follow pm.variables.
Sample simulate_path_model(const PathModel& pm, Eigen::Index n, std::uint64_t seed);

}  // namespace modelproj
