#include "modelproj/mds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "modelproj/error.hpp"
#include "modelproj/optimize.hpp"
#include "modelproj/parallel.hpp"
#include "modelproj/random.hpp"

namespace modelproj {

void DivergenceMatrix::validate() const {
  const Eigen::Index r = values.rows();
  if (values.cols() != r) throw ValidationError("divergence matrix must be square");
  if (r < 3) throw ValidationError("need at least 3 models, got " + std::to_string(r));
  if (names.size() != static_cast<std::size_t>(r)) {
    throw ValidationError("divergence matrix has " + std::to_string(r) + " rows but " +
                          std::to_string(names.size()) + " model names");
  }
  if (!values.allFinite()) throw ValidationError("divergence matrix has non-finite entries");
  if ((values.array() < 0.0).any()) throw ValidationError("divergence matrix has negative entries");
  if (values.diagonal().cwiseAbs().maxCoeff() != 0.0) {
    throw ValidationError("divergence matrix diagonal must be zero");
  }
}

double DivergenceMatrix::asymmetry() const {
  return (values - values.transpose()).cwiseAbs().maxCoeff();
}

DivergenceMatrix divergence_matrix(const std::vector<GaussianModel>& models,
                                   std::vector<std::string> names) {
  const auto r = static_cast<Eigen::Index>(models.size());
  if (names.empty()) {
    for (Eigen::Index i = 0; i < r; ++i) names.push_back("f" + std::to_string(i + 1));
  }
  for (const auto& m : models) {
    if (m.dim() != models.front().dim()) {
      throw ValidationError("models in a divergence matrix must share a dimension");
    }
  }
  DivergenceMatrix dm{Matrix::Zero(r, r), std::move(names)};
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) {
      if (i != j) {
        dm.values(i, j) =
            kl_gaussian(models[static_cast<std::size_t>(i)], models[static_cast<std::size_t>(j)]);
      }
    }
  }
  dm.validate();
  return dm;
}

DivergenceMatrix divergence_matrix(const std::vector<FittedModel>& models) {
  std::vector<GaussianModel> predictive;
  std::vector<std::string> names;
  for (const auto& fm : models) {
    predictive.push_back(fm.predictive);
    names.push_back(fm.spec.name);
  }
  return divergence_matrix(predictive, std::move(names));
}

Matrix dissimilarities(const DivergenceMatrix& dm) {
  dm.validate();
  Matrix delta = (0.5 * (dm.values + dm.values.transpose())).cwiseSqrt();
  delta.diagonal().setZero();
  return delta;
}

ClassicalMdsResult classical_mds(const Matrix& delta, int dim) {
  const Eigen::Index r = delta.rows();
  if (delta.cols() != r || r < 1) throw ValidationError("dissimilarity matrix must be square");
  if (dim < 1) throw ValidationError("embedding dimension must be positive");
  const Matrix j = Matrix::Identity(r, r) - Matrix::Constant(r, r, 1.0 / static_cast<double>(r));
  Matrix b = -0.5 * j * delta.array().square().matrix() * j;
  b = 0.5 * (b + b.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();  // ascending
  const double top = std::max(lambda(r - 1), 0.0);

  ClassicalMdsResult out{Matrix::Zero(r, dim), false};
  for (int c = 0; c < dim; ++c) {
    const Eigen::Index src = r - 1 - c;
    if (src < 0 || !(lambda(src) > 1e-12 * top) || top == 0.0) {
      out.padded = true;
      continue;
    }
    Vector v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.coords.col(c) = v * std::sqrt(lambda(src));
  }
  return out;
}

Vector isotonic_regression(const Vector& values, const Vector& weights) {
  const Eigen::Index n = values.size();
  if (weights.size() != n) throw ValidationError("values and weights differ in length");
  if ((weights.array() <= 0.0).any()) throw ValidationError("weights must be positive");
  struct Block {
    double mean;
    double weight;
    Eigen::Index count;
  };
  std::vector<Block> blocks;
  blocks.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    blocks.push_back({values(i), weights(i), 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      const Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double w = prev.weight + top.weight;
      prev.mean = (prev.weight * prev.mean + top.weight * top.mean) / w;
      prev.weight = w;
      prev.count += top.count;
    }
  }
  Vector out(n);
  Eigen::Index pos = 0;
  for (const auto& b : blocks) {
    out.segment(pos, b.count).setConstant(b.mean);
    pos += b.count;
  }
  return out;
}

Vector isotonic_regression(const Vector& values) {
  return isotonic_regression(values, Vector::Ones(values.size()));
}

namespace {

void validate_delta(const Matrix& delta) {
  const Eigen::Index r = delta.rows();
  if (delta.cols() != r) throw ValidationError("dissimilarity matrix must be square");
  if (r < 3) throw ValidationError("need at least 3 objects to embed");
  if (!delta.allFinite() || (delta.array() < 0.0).any()) {
    throw ValidationError("dissimilarities must be finite and non-negative");
  }
  const double scale = delta.cwiseAbs().maxCoeff();
  if (scale == 0.0) throw ValidationError("all dissimilarities are zero");
  if ((delta - delta.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("dissimilarity matrix is not symmetric");
  }
  if (delta.diagonal().cwiseAbs().maxCoeff() != 0.0) {
    throw ValidationError("dissimilarity matrix diagonal must be zero");
  }
}

// Stress evaluation against the rank order of delta. Pairs are pre-sorted by
// delta; equal-delta blocks are re-sorted by the current distance before the
// monotone fit so that tied dissimilarities impose no order.
class StressFunction {
 public:
  StressFunction(const Matrix& delta, int dim) : r_(delta.rows()), dim_(dim) {
    for (Eigen::Index i = 0; i < r_; ++i) {
      for (Eigen::Index j = i + 1; j < r_; ++j) pairs_.push_back({i, j, delta(i, j)});
    }
    std::stable_sort(pairs_.begin(), pairs_.end(),
                     [](const Pair& a, const Pair& b) { return a.delta < b.delta; });
    for (std::size_t s = 0; s < pairs_.size();) {
      std::size_t e = s + 1;
      while (e < pairs_.size() && pairs_[e].delta == pairs_[s].delta) ++e;
      if (e - s > 1) tie_blocks_.emplace_back(s, e);
      s = e;
    }
  }

  // Returns stress-1 squared; fills grad (R*dim, column-major) when non-null.
  double operator()(const Matrix& x, Matrix* grad) const {
    const std::size_t m = pairs_.size();
    std::vector<double> dist(m);
    for (std::size_t t = 0; t < m; ++t) {
      dist[t] = (x.row(pairs_[t].i) - x.row(pairs_[t].j)).norm();
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    for (const auto& [s, e] : tie_blocks_) {
      std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(s),
                       order.begin() + static_cast<std::ptrdiff_t>(e),
                       [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    }
    Vector ordered(static_cast<Eigen::Index>(m));
    for (std::size_t t = 0; t < m; ++t) ordered(static_cast<Eigen::Index>(t)) = dist[order[t]];
    const Vector fitted = isotonic_regression(ordered);

    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
      const double diff = ordered(static_cast<Eigen::Index>(t)) - fitted(static_cast<Eigen::Index>(t));
      num += diff * diff;
      den += ordered(static_cast<Eigen::Index>(t)) * ordered(static_cast<Eigen::Index>(t));
    }
    if (!(den > 0.0)) throw NumericalError("configuration collapsed to a point");
    const double value = num / den;
    if (grad != nullptr) {
      grad->setZero(r_, dim_);
      for (std::size_t t = 0; t < m; ++t) {
        const auto& pr = pairs_[order[t]];
        const double d = ordered(static_cast<Eigen::Index>(t));
        if (d <= 0.0) continue;
        const double dh = fitted(static_cast<Eigen::Index>(t));
        const double g = 2.0 * (d - dh) / den - 2.0 * num * d / (den * den);
        const Eigen::RowVectorXd u = (g / d) * (x.row(pr.i) - x.row(pr.j));
        grad->row(pr.i) += u;
        grad->row(pr.j) -= u;
      }
    }
    return value;
  }

 private:
  struct Pair {
    Eigen::Index i;
    Eigen::Index j;
    double delta;
  };
  Eigen::Index r_;
  int dim_;
  std::vector<Pair> pairs_;
  std::vector<std::pair<std::size_t, std::size_t>> tie_blocks_;
};

Matrix normalized(Matrix x) {
  x.rowwise() -= x.colwise().mean();
  const double rms = x.norm() / std::sqrt(static_cast<double>(x.rows()));
  if (rms > 0.0) x /= rms;
  return x;
}

Matrix random_start(Eigen::Index r, int dim, std::uint64_t seed, std::uint64_t stream) {
  Rng rng = Rng(seed).split(stream);
  Matrix x(r, dim);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (int c = 0; c < dim; ++c) x(i, c) = rng.normal();
  }
  return normalized(std::move(x));
}

struct RunResult {
  Matrix coords;
  double stress = 1.0;
  bool converged = false;
  int iterations = 0;
};

RunResult run_from(const StressFunction& stress, Matrix start, const NmdsOptions& options) {
  const Eigen::Index r = start.rows();
  const int dim = static_cast<int>(start.cols());
  Objective objective = [&](const Vector& flat, Vector& grad) {
    const Matrix x = Eigen::Map<const Matrix>(flat.data(), r, dim);
    Matrix g;
    const double v = stress(x, &g);
    grad = Eigen::Map<const Vector>(g.data(), g.size());
    return v;
  };
  MinimizeOptions mo;
  mo.max_iterations = options.max_iterations;
  mo.relative_tolerance = options.relative_tolerance;
  mo.gradient_tolerance = 1e-15;
  mo.initial_step_norm = 0.1 * start.norm();
  const MinimizeResult res =
      minimize_lbfgs(objective, Eigen::Map<const Vector>(start.data(), start.size()), mo);
  RunResult out;
  out.coords = Eigen::Map<const Matrix>(res.x.data(), r, dim);
  out.stress = std::sqrt(std::max(stress(out.coords, nullptr), 0.0));
  out.converged = res.converged;
  out.iterations = res.iterations;
  return out;
}

}  // namespace

double kruskal_stress(const Matrix& delta, const Matrix& coords) {
  validate_delta(delta);
  if (coords.rows() != delta.rows()) throw ValidationError("configuration has the wrong row count");
  const StressFunction stress(delta, static_cast<int>(coords.cols()));
  return std::sqrt(std::max(stress(coords, nullptr), 0.0));
}

Embedding nmds(const Matrix& delta, const NmdsOptions& options, std::vector<std::string> names) {
  validate_delta(delta);
  if (options.dim < 1) throw ValidationError("embedding dimension must be positive");
  if (options.restarts < 1) throw ValidationError("need at least one NMDS start");
  if (options.max_iterations < 1) throw ValidationError("max_iterations must be positive");
  const Eigen::Index r = delta.rows();
  if (names.empty()) {
    for (Eigen::Index i = 0; i < r; ++i) names.push_back("f" + std::to_string(i + 1));
  }
  if (names.size() != static_cast<std::size_t>(r)) {
    throw ValidationError("number of names does not match the dissimilarity matrix");
  }

  const StressFunction stress(delta, options.dim);
  const ClassicalMdsResult init = classical_mds(delta, options.dim);

  std::vector<std::optional<RunResult>> runs(static_cast<std::size_t>(options.restarts));
  parallel_for(runs.size(), options.threads, [&](std::size_t s) {
    Matrix start;
    if (s == 0) {
      start = normalized(init.coords);
      if (start.norm() == 0.0) start = random_start(r, options.dim, options.seed, 0);
    } else {
      start = random_start(r, options.dim, options.seed, s);
    }
    runs[s] = run_from(stress, std::move(start), options);
  });

  std::size_t best = 0;
  for (std::size_t s = 1; s < runs.size(); ++s) {
    if (runs[s]->stress < runs[best]->stress - 1e-12) best = s;
  }
  const RunResult& chosen = *runs[best];

  Embedding e;
  e.names = std::move(names);
  e.dim = options.dim;
  e.coords = chosen.coords;
  e.coords.rowwise() -= e.coords.colwise().mean();
  double cross = 0.0;
  double sq = 0.0;
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = i + 1; j < r; ++j) {
      const double d = (e.coords.row(i) - e.coords.row(j)).norm();
      cross += delta(i, j) * d;
      sq += d * d;
    }
  }
  if (!(sq > 0.0)) throw NumericalError("embedding collapsed to a point");
  e.scale = cross / sq;
  e.coords *= e.scale;
  e.stress = std::min(1.0, std::sqrt(std::max(stress(e.coords, nullptr), 0.0)));
  e.converged = chosen.converged;
  e.restarts_used = options.restarts;
  e.best_restart = static_cast<int>(best);
  e.iterations = chosen.iterations;
  e.padded = init.padded;
  return e;
}

double embed_distance(const Embedding& e, Eigen::Index i, const Eigen::Ref<const Vector>& point) {
  if (i < 0 || i >= e.coords.rows()) throw ValidationError("model index out of range");
  if (point.size() != e.coords.cols()) throw ValidationError("point has the wrong dimension");
  return (e.coords.row(i).transpose() - point).norm();
}

}  // namespace modelproj
