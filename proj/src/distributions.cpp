#include "modelproj/distributions.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "modelproj/error.hpp"
#include "modelproj/random.hpp"

namespace modelproj {

namespace {

constexpr double kSymmetryTolerance = 1e-12;

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + " contains non-finite entries");
}

}  // namespace

GaussianModel::GaussianModel(Vector mean, Matrix cov) : mean_(std::move(mean)) {
  const Eigen::Index p = mean_.size();
  if (p < 1) throw ValidationError("Gaussian model needs dimension p >= 1");
  if (cov.rows() != p || cov.cols() != p) {
    std::ostringstream os;
    os << "covariance is " << cov.rows() << "x" << cov.cols() << " but mean has length " << p;
    throw ValidationError(os.str());
  }
  require_finite(mean_, "mean");
  require_finite(cov, "covariance");
  const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1e-300);
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw ValidationError("covariance is not symmetric");
  }
  cov_ = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
  chol_lower_ = llt.matrixL();
  const Vector diag = chol_lower_.diagonal();
  if ((diag.array() <= 0.0).any()) throw NumericalError("covariance is not positive definite");
  log_det_ = 2.0 * diag.array().log().sum();
}

GaussianModel GaussianModel::standard(Eigen::Index p) {
  return GaussianModel(Vector::Zero(p), Matrix::Identity(p, p));
}

Matrix GaussianModel::solve(const Matrix& rhs) const {
  const auto lower = chol_lower_.triangularView<Eigen::Lower>();
  return lower.transpose().solve(lower.solve(rhs));
}

std::vector<std::string> default_variable_names(Eigen::Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

Sample::Sample(Matrix data, std::vector<std::string> names)
    : data_(std::move(data)), names_(std::move(names)) {
  if (data_.rows() < 2) throw ValidationError("sample needs at least 2 observations");
  if (data_.cols() < 1) throw ValidationError("sample needs at least one variable");
  require_finite(data_, "sample");
  if (names_.size() != static_cast<std::size_t>(data_.cols())) {
    throw ValidationError("sample has " + std::to_string(data_.cols()) + " columns but " +
                          std::to_string(names_.size()) + " variable names");
  }
  std::set<std::string> seen;
  for (const auto& name : names_) {
    if (name.empty()) throw ValidationError("empty variable name");
    if (!seen.insert(name).second) throw ValidationError("duplicate variable name '" + name + "'");
  }
}

Sample::Sample(Matrix data) : Sample(data, default_variable_names(data.cols())) {}

Eigen::Index Sample::column(const std::string& name) const {
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (names_[j] == name) return static_cast<Eigen::Index>(j);
  }
  throw ValidationError("unknown variable '" + name + "'");
}

std::size_t PathModel::index_of(const std::string& name) const {
  for (std::size_t j = 0; j < variables.size(); ++j) {
    if (variables[j] == name) return j;
  }
  throw ValidationError("path model has no variable '" + name + "'");
}

void PathModel::validate() const {
  const std::size_t p = variables.size();
  if (p == 0) throw ValidationError("path model has no variables");
  std::set<std::string> seen;
  for (const auto& v : variables) {
    if (v.empty()) throw ValidationError("path model has an empty variable name");
    if (!seen.insert(v).second) throw ValidationError("duplicate path model variable '" + v + "'");
  }
  if (noise_sd.size() != p) throw ValidationError("noise_sd must have one entry per variable");
  if (intercepts.size() != p) throw ValidationError("intercepts must have one entry per variable");
  for (std::size_t j = 0; j < p; ++j) {
    if (!(noise_sd[j] > 0.0) || !std::isfinite(noise_sd[j])) {
      throw ValidationError("noise_sd for '" + variables[j] + "' must be a positive finite number");
    }
    if (!std::isfinite(intercepts[j])) {
      throw ValidationError("intercept for '" + variables[j] + "' is not finite");
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& e : edges) {
    const auto s = index_of(e.source);
    const auto t = index_of(e.target);
    if (s == t) throw ValidationError("self-loop on '" + e.source + "'");
    if (!std::isfinite(e.coefficient)) {
      throw ValidationError("edge " + e.source + " -> " + e.target + " has a non-finite coefficient");
    }
    if (!pairs.insert({s, t}).second) {
      throw ValidationError("duplicate edge " + e.source + " -> " + e.target);
    }
  }
  (void)topological_order();
}

std::vector<std::size_t> PathModel::topological_order() const {
  const std::size_t p = variables.size();
  std::vector<std::vector<std::size_t>> children(p);
  std::vector<std::size_t> indegree(p, 0);
  for (const auto& e : edges) {
    const auto s = index_of(e.source);
    const auto t = index_of(e.target);
    children[s].push_back(t);
    ++indegree[t];
  }
  // Kahn's algorithm, smallest index first so the order is stable.
  std::set<std::size_t> ready;
  for (std::size_t j = 0; j < p; ++j) {
    if (indegree[j] == 0) ready.insert(j);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const auto j = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(j);
    for (auto c : children[j]) {
      if (--indegree[c] == 0) ready.insert(c);
    }
  }
  if (order.size() == p) return order;

  // Walk backwards through remaining in-edges until a vertex repeats.
  std::vector<int> pos(p, -1);
  std::vector<std::size_t> walk;
  std::size_t v = 0;
  while (indegree[v] == 0) ++v;
  while (pos[v] < 0) {
    pos[v] = static_cast<int>(walk.size());
    walk.push_back(v);
    for (const auto& e : edges) {
      const auto s = index_of(e.source);
      if (index_of(e.target) == v && indegree[s] > 0) {
        v = s;
        break;
      }
    }
  }
  // Each walk[i + 1] is a parent of walk[i], and v is a parent of walk.back().
  std::vector<std::size_t> cycle(walk.begin() + pos[v], walk.end());
  std::ostringstream cyc;
  cyc << "path model graph has a cycle: " << variables[v];
  for (auto it = cycle.rbegin(); it != cycle.rend(); ++it) cyc << " -> " << variables[*it];
  throw ValidationError(cyc.str());
}

double log_density(const GaussianModel& model, const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.dim()) {
    throw ValidationError("point has dimension " + std::to_string(x.size()) + ", model has " +
                          std::to_string(model.dim()));
  }
  const Vector diff = x - model.mean();
  const Vector z = model.cholesky_lower().triangularView<Eigen::Lower>().solve(diff);
  const double p = static_cast<double>(model.dim());
  return -0.5 * (p * std::log(2.0 * std::numbers::pi) + model.log_det() + z.squaredNorm());
}

Matrix draw(const GaussianModel& model, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("number of draws must be positive");
  Rng rng(seed);
  const Eigen::Index p = model.dim();
  Matrix z(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = rng.normal();
  }
  Matrix x = z * model.cholesky_lower().transpose();
  x.rowwise() += model.mean().transpose();
  return x;
}

Sample sample(const GaussianModel& model, Eigen::Index n, std::uint64_t seed,
              std::vector<std::string> names) {
  if (names.empty()) names = default_variable_names(model.dim());
  return Sample(draw(model, n, seed), std::move(names));
}

double kl_gaussian(const GaussianModel& a, const GaussianModel& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("KL divergence between models of dimension " + std::to_string(a.dim()) +
                          " and " + std::to_string(b.dim()));
  }
  const double p = static_cast<double>(a.dim());
  const Matrix b_inv_a = b.solve(a.cov());
  const Vector dm = b.mean() - a.mean();
  const Vector b_inv_dm = b.solve(dm).col(0);
  const double mahal = dm.dot(b_inv_dm);
  const double kl = 0.5 * (b_inv_a.trace() + mahal - p + b.log_det() - a.log_det());
  return std::max(kl, 0.0);
}

double entropy_gaussian(const GaussianModel& model) {
  const double p = static_cast<double>(model.dim());
  return -0.5 * (p * std::log(2.0 * std::numbers::pi * std::numbers::e) + model.log_det());
}

GaussianModel reduce_path_model(const PathModel& pm) {
  pm.validate();
  const auto p = static_cast<Eigen::Index>(pm.variables.size());
  Matrix i_minus_b = Matrix::Identity(p, p);
  for (const auto& e : pm.edges) {
    i_minus_b(static_cast<Eigen::Index>(pm.index_of(e.target)),
              static_cast<Eigen::Index>(pm.index_of(e.source))) -= e.coefficient;
  }
  Eigen::FullPivLU<Matrix> lu(i_minus_b);
  if (!lu.isInvertible()) throw NumericalError("I - B is singular");
  const Matrix a = lu.inverse();
  Vector c(p);
  Vector d(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    c(j) = pm.intercepts[static_cast<std::size_t>(j)];
    d(j) = pm.noise_sd[static_cast<std::size_t>(j)] * pm.noise_sd[static_cast<std::size_t>(j)];
  }
  Matrix cov = a * d.asDiagonal() * a.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return GaussianModel(a * c, cov);
}

Sample simulate_path_model(const PathModel& pm, Eigen::Index n, std::uint64_t seed) {
  pm.validate();
  if (n < 1) throw ValidationError("number of draws must be positive");
  const auto p = static_cast<Eigen::Index>(pm.variables.size());
  std::vector<std::vector<std::pair<Eigen::Index, double>>> parents(static_cast<std::size_t>(p));
  for (const auto& e : pm.edges) {
    parents[pm.index_of(e.target)].emplace_back(static_cast<Eigen::Index>(pm.index_of(e.source)),
                                                e.coefficient);
  }
  Rng rng(seed);
  Matrix noise(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) noise(i, j) = rng.normal();
  }
  Matrix x(n, p);
  for (auto j : pm.topological_order()) {
    const auto col = static_cast<Eigen::Index>(j);
    x.col(col) = pm.noise_sd[j] * noise.col(col);
    x.col(col).array() += pm.intercepts[j];
    for (const auto& [src, coef] : parents[j]) x.col(col) += coef * x.col(src);
  }
  return Sample(std::move(x), pm.variables);
}

}  // namespace modelproj
