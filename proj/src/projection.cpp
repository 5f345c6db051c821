#include "modelproj/projection.hpp"

#include <algorithm>
#include <cmath>

#include "modelproj/error.hpp"
#include "modelproj/optimize.hpp"
#include "modelproj/parallel.hpp"
#include "modelproj/random.hpp"

namespace modelproj {

namespace {

constexpr double kCollinearRatio = 1e-8;

// t_i - mean(t), where t_i = -sgf_i - ||c_i - m||^2.
Vector centered_levels(const Vector& m, const Vector& sgf_hats, const Matrix& coords) {
  const Vector sq = (coords.rowwise() - m.transpose()).rowwise().squaredNorm();
  Vector t = -sgf_hats - sq;
  t.array() -= t.mean();
  return t;
}

void check_inputs(const Vector& m, const Vector& sgf_hats, const Matrix& coords) {
  if (sgf_hats.size() != coords.rows()) {
    throw ValidationError("got " + std::to_string(sgf_hats.size()) + " Sgf estimates for " +
                          std::to_string(coords.rows()) + " embedded models");
  }
  if (m.size() != coords.cols()) throw ValidationError("point has the wrong dimension");
}

double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double out = 0.0;
  while (index > 0) {
    out += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return out;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

// Shifted Halton points in the bounding box of the coordinates, expanded 2x
// about its center.
std::vector<Vector> quasi_random_points(const Matrix& coords, int count, std::uint64_t seed) {
  const Eigen::Index dim = coords.cols();
  const Vector lo = coords.colwise().minCoeff();
  const Vector hi = coords.colwise().maxCoeff();
  const Vector center = 0.5 * (lo + hi);
  Vector half = hi - lo;  // expanded half-width = full width
  const double widest = std::max(half.maxCoeff(), 1e-12);
  for (Eigen::Index c = 0; c < dim; ++c) {
    if (!(half(c) > 0.0)) half(c) = widest;
  }
  Rng rng(seed);
  Vector shift(dim);
  for (Eigen::Index c = 0; c < dim; ++c) shift(c) = rng.uniform();

  std::vector<Vector> points;
  for (int s = 0; s < count; ++s) {
    Vector p(dim);
    for (Eigen::Index c = 0; c < dim; ++c) {
      const unsigned base = kPrimes[static_cast<std::size_t>(c) % std::size(kPrimes)];
      double u = radical_inverse(static_cast<std::uint64_t>(s) + 1, base) + shift(c);
      u -= std::floor(u);
      p(c) = center(c) + (2.0 * u - 1.0) * half(c);
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace

Vector akaike_weights(const Vector& aics) {
  if (aics.size() == 0) throw ValidationError("no AIC values");
  if (!aics.allFinite()) throw ValidationError("AIC values must be finite");
  const double best = aics.minCoeff();
  Vector w = (-0.5 * (aics.array() - best)).exp().matrix();
  w /= w.sum();
  return w;
}

AverageResult model_average_location(const Matrix& coords, const Vector& weights) {
  if (weights.size() != coords.rows()) throw ValidationError("one weight per model required");
  if ((weights.array() < 0.0).any()) throw ValidationError("weights must be non-negative");
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw ValidationError("weights must sum to one");
  return AverageResult{weights, coords.transpose() * weights};
}

double projection_objective(const Vector& m, const Vector& sgf_hats, const Matrix& coords) {
  check_inputs(m, sgf_hats, coords);
  return static_cast<double>(coords.rows()) * centered_levels(m, sgf_hats, coords).squaredNorm();
}

Vector projection_gradient(const Vector& m, const Vector& sgf_hats, const Matrix& coords) {
  check_inputs(m, sgf_hats, coords);
  const Vector t = centered_levels(m, sgf_hats, coords);
  const Matrix offsets = coords.rowwise() - m.transpose();
  return 4.0 * static_cast<double>(coords.rows()) * (offsets.transpose() * t);
}

ProjectionResult solve_projection(const Vector& sgf_hats, const Matrix& coords, double sgg_hat,
                                  const ProjectionOptions& options) {
  const Eigen::Index r = coords.rows();
  const Eigen::Index dim = coords.cols();
  if (sgf_hats.size() != r) {
    throw ValidationError("got " + std::to_string(sgf_hats.size()) + " Sgf estimates for " +
                          std::to_string(r) + " embedded models");
  }
  if (dim < 1) throw ValidationError("embedding has no coordinates");
  // Differences of the level equations are linear in m, so dim + 1 models in
  // general position pin it down; fewer leave a whole locus of minimizers.
  if (r < dim + 1) {
    throw ValidationError("projection is not identifiable with " + std::to_string(r) +
                          " models in " + std::to_string(dim) + " dimensions (need at least " +
                          std::to_string(dim + 1) + ")");
  }
  if (!coords.allFinite() || !sgf_hats.allFinite() || !std::isfinite(sgg_hat)) {
    throw ValidationError("projection inputs must be finite");
  }

  // Work in the span of the centered coordinates; m = centroid + basis * z.
  const Vector centroid = coords.colwise().mean();
  const Matrix centered = coords.rowwise() - centroid.transpose();
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (!(sv(0) > 0.0)) throw NumericalError("all embedded models coincide");
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) >= kCollinearRatio * sv(0)) ++rank;
  const bool reduced = rank < dim;
  const Matrix basis = reduced ? Matrix(svd.matrixV().leftCols(rank)) : Matrix::Identity(dim, dim);

  auto to_m = [&](const Vector& z) -> Vector {
    return reduced ? Vector(centroid + basis * z) : z;
  };
  auto to_z = [&](const Vector& m) -> Vector {
    return reduced ? Vector(basis.transpose() * (m - centroid)) : m;
  };

  std::vector<Vector> starts;
  if (options.average_start) {
    if (options.average_start->size() != dim) {
      throw ValidationError("average start has the wrong dimension");
    }
    starts.push_back(*options.average_start);
  }
  starts.push_back(centroid);
  for (auto& p : quasi_random_points(coords, options.quasi_random_starts, options.seed)) {
    starts.push_back(std::move(p));
  }

  const Objective objective = [&](const Vector& z, Vector& grad) {
    const Vector m = to_m(z);
    const Vector g = projection_gradient(m, sgf_hats, coords);
    grad = reduced ? Vector(basis.transpose() * g) : g;
    return projection_objective(m, sgf_hats, coords);
  };
  MinimizeOptions mo;
  mo.max_iterations = options.max_iterations;
  mo.gradient_tolerance = options.gradient_tolerance;

  std::vector<MinimizeResult> runs(starts.size());
  parallel_for(starts.size(), options.threads,
               [&](std::size_t s) { runs[s] = minimize_lbfgs(objective, to_z(starts[s]), mo); });
  std::size_t best = 0;
  for (std::size_t s = 1; s < runs.size(); ++s) {
    if (runs[s].value < runs[best].value - 1e-12 * std::abs(runs[best].value)) best = s;
  }

  ProjectionResult out;
  out.m = to_m(runs[best].x);
  out.objective_value = projection_objective(out.m, sgf_hats, coords);
  out.converged = runs[best].converged;
  out.start_index = static_cast<int>(best);
  out.reduced = reduced;
  out.sgg_used = sgg_hat;
  const Vector sq = (coords.rowwise() - out.m.transpose()).rowwise().squaredNorm();
  out.h2_unclamped = sgg_hat - (sgf_hats + sq).mean();
  out.clamped = out.h2_unclamped < 0.0;
  out.h2 = out.clamped ? 0.0 : out.h2_unclamped;
  out.kl_to_g = sq.array() + out.h2;
  return out;
}

std::vector<SweepStep> deletion_sweep(const std::vector<std::string>& names, const Matrix& coords,
                                      const Vector& aics, const Vector& sgf_hats, double sgg_hat,
                                      DeletionDirection direction, int steps,
                                      const ProjectionOptions& options) {
  const Eigen::Index r = coords.rows();
  if (names.size() != static_cast<std::size_t>(r) || aics.size() != r || sgf_hats.size() != r) {
    throw ValidationError("names, AICs and Sgf estimates must have one entry per model");
  }
  if (steps < 0) throw ValidationError("number of deletion steps must be non-negative");
  if (steps > r - (coords.cols() + 2)) {
    throw ValidationError("at most " + std::to_string(r - (coords.cols() + 2)) +
                          " deletions leave the required dim + 2 models");
  }

  std::vector<std::size_t> survivors(static_cast<std::size_t>(r));
  for (std::size_t i = 0; i < survivors.size(); ++i) survivors[i] = i;

  std::vector<SweepStep> out;
  std::string removed;
  for (int step = 0; step <= steps; ++step) {
    const auto m = static_cast<Eigen::Index>(survivors.size());
    Matrix sub_coords(m, coords.cols());
    Vector sub_aic(m);
    Vector sub_sgf(m);
    for (Eigen::Index t = 0; t < m; ++t) {
      const auto i = static_cast<Eigen::Index>(survivors[static_cast<std::size_t>(t)]);
      sub_coords.row(t) = coords.row(i);
      sub_aic(t) = aics(i);
      sub_sgf(t) = sgf_hats(i);
    }
    SweepStep entry;
    entry.step = step;
    entry.removed = removed;
    entry.survivors = survivors;
    entry.average = model_average_location(sub_coords, akaike_weights(sub_aic));
    ProjectionOptions po = options;
    po.average_start = entry.average.location;
    entry.projection = solve_projection(sub_sgf, sub_coords, sgg_hat, po);
    out.push_back(std::move(entry));

    if (step == steps) break;
    std::size_t pick = 0;
    for (std::size_t t = 1; t < survivors.size(); ++t) {
      const double x = coords(static_cast<Eigen::Index>(survivors[t]), 0);
      const double best = coords(static_cast<Eigen::Index>(survivors[pick]), 0);
      if (direction == DeletionDirection::left ? x < best : x > best) pick = t;
    }
    removed = names[survivors[pick]];
    survivors.erase(survivors.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

}  // namespace modelproj
