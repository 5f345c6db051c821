#include "modelproj/model_fit.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <set>

#include "modelproj/error.hpp"
#include "modelproj/parallel.hpp"

namespace modelproj {

namespace {

PathModel skeleton(const CandidateSpec& spec, const std::vector<std::string>& variables) {
  PathModel pm;
  pm.variables = variables;
  pm.noise_sd.assign(variables.size(), 1.0);
  pm.intercepts.assign(variables.size(), 0.0);
  for (const auto& [source, target] : spec.edges) pm.edges.push_back({source, target, 0.0});
  try {
    pm.validate();
  } catch (const ValidationError& e) {
    throw ValidationError("candidate '" + spec.name + "': " + e.what());
  }
  return pm;
}

}  // namespace

int parameter_count(const CandidateSpec& spec, Eigen::Index p) {
  return static_cast<int>(spec.edges.size()) + 2 * static_cast<int>(p);
}

void validate_model_set(const std::vector<CandidateSpec>& specs,
                        const std::vector<std::string>& variables) {
  std::set<std::string> names;
  for (const auto& spec : specs) {
    if (spec.name.empty()) throw ValidationError("candidate with an empty name");
    if (!names.insert(spec.name).second) {
      throw ValidationError("duplicate candidate name '" + spec.name + "'");
    }
    (void)skeleton(spec, variables);
  }
}

FittedModel fit(const CandidateSpec& spec, const Sample& sample) {
  PathModel pm = skeleton(spec, sample.names());
  const Eigen::Index n = sample.n();
  const Eigen::Index p = sample.p();
  const int k = parameter_count(spec, p);
  if (n < k) {
    throw ValidationError("candidate '" + spec.name + "' has " + std::to_string(k) +
                          " parameters but the sample has only " + std::to_string(n) +
                          " observations");
  }

  std::vector<std::vector<std::size_t>> parent_edges(static_cast<std::size_t>(p));
  for (std::size_t e = 0; e < pm.edges.size(); ++e) {
    parent_edges[pm.index_of(pm.edges[e].target)].push_back(e);
  }

  const Matrix& x = sample.data();
  double loglik = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& incoming = parent_edges[static_cast<std::size_t>(j)];
    const auto q = static_cast<Eigen::Index>(incoming.size()) + 1;
    Matrix design(n, q);
    design.col(0).setOnes();
    for (Eigen::Index c = 1; c < q; ++c) {
      design.col(c) = x.col(sample.column(pm.edges[incoming[static_cast<std::size_t>(c - 1)]].source));
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < q) {
      throw NumericalError("candidate '" + spec.name + "': rank-deficient design for variable '" +
                           sample.names()[static_cast<std::size_t>(j)] + "'");
    }
    const Vector beta = qr.solve(x.col(j));
    const double rss = (x.col(j) - design * beta).squaredNorm();
    const double variance = rss / static_cast<double>(n);
    if (!(variance > 0.0) || !std::isfinite(variance)) {
      throw NumericalError("candidate '" + spec.name + "': zero residual variance for variable '" +
                           sample.names()[static_cast<std::size_t>(j)] + "'");
    }
    pm.intercepts[static_cast<std::size_t>(j)] = beta(0);
    pm.noise_sd[static_cast<std::size_t>(j)] = std::sqrt(variance);
    for (Eigen::Index c = 1; c < q; ++c) {
      pm.edges[incoming[static_cast<std::size_t>(c - 1)]].coefficient = beta(c);
    }
    // At the least-squares solution the quadratic term sums to n/2.
    loglik += -0.5 * static_cast<double>(n) * (std::log(2.0 * std::numbers::pi * variance) + 1.0);
  }

  FittedModel fm{spec, loglik, k, n, pm, reduce_path_model(pm)};
  return fm;
}

std::vector<FittedModel> fit_all(const std::vector<CandidateSpec>& specs, const Sample& sample,
                                 int threads) {
  validate_model_set(specs, sample.names());
  std::vector<std::optional<FittedModel>> slots(specs.size());
  parallel_for(specs.size(), threads, [&](std::size_t i) { slots[i] = fit(specs[i], sample); });
  std::vector<FittedModel> fits;
  fits.reserve(specs.size());
  for (auto& s : slots) fits.push_back(std::move(*s));
  return fits;
}

double aic(const FittedModel& fm) { return -2.0 * fm.loglik + 2.0 * fm.k; }

double sgf_hat(const FittedModel& fm) {
  return (fm.loglik - fm.k) / static_cast<double>(fm.n);
}

}  // namespace modelproj
