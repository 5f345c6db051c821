#pragma once

#include <string>
#include <utility>
#include <vector>

#include "modelproj/distributions.hpp"

namespace modelproj {

// A candidate linear-Gaussian model: a named set of regression edges. Every
// variable gets a free intercept and a free residual variance.
struct CandidateSpec {
  std::string name;
  std::vector<std::pair<std::string, std::string>> edges;  // (source, target)

  bool operator==(const CandidateSpec&) const = default;
};

struct FittedModel {
  CandidateSpec spec;
  double loglik = 0.0;  // maximized log-likelihood, summed over observations
  int k = 0;            // free parameters: edges + intercepts + variances
  Eigen::Index n = 0;
  PathModel estimate;   // path model at the MLE
  GaussianModel predictive = GaussianModel::standard(1);
};

// Parameter count for a spec over p variables.
int parameter_count(const CandidateSpec& spec, Eigen::Index p);

// Checks names are distinct and every spec is acyclic over the variables.
void validate_model_set(const std::vector<CandidateSpec>& specs,
                        const std::vector<std::string>& variables);

// Per-equation least squares; residual variances use divisor n. Throws
// ValidationError when n < k or an edge names an unknown variable, and
// NumericalError on a rank-deficient design or a zero residual variance.
FittedModel fit(const CandidateSpec& spec, const Sample& sample);

std::vector<FittedModel> fit_all(const std::vector<CandidateSpec>& specs, const Sample& sample,
                                 int threads = 1);

double aic(const FittedModel& fm);

// loglik/n - k/n, which equals -aic/(2n).
double sgf_hat(const FittedModel& fm);

}  // namespace modelproj
