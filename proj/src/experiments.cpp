#include "modelproj/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modelproj/error.hpp"
#include "modelproj/parallel.hpp"
#include "modelproj/random.hpp"

namespace modelproj {

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

ProjectionOptions projection_options(const RunConfig& config, int threads) {
  ProjectionOptions po;
  po.seed = config.seeds.projection;
  po.quasi_random_starts = config.projection.quasi_random_starts;
  po.max_iterations = config.projection.max_iterations;
  po.gradient_tolerance = config.projection.gradient_tolerance;
  po.threads = threads;
  return po;
}

}  // namespace

SummaryStats summarize(std::vector<double> values) {
  if (values.empty()) throw ValidationError("cannot summarize an empty set");
  std::sort(values.begin(), values.end());
  SummaryStats s;
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

DeletionDirection parse_direction(const std::string& s) {
  if (s == "left") return DeletionDirection::left;
  if (s == "right") return DeletionDirection::right;
  throw ValidationError("deletion direction must be 'left' or 'right', got '" + s + "'");
}

EntropyEstimate estimate_entropy(const Sample& sample, const EntropySettings& settings,
                                 int threads) {
  EntropyOptions opts;
  opts.jitter = settings.jitter;
  opts.standardize = settings.standardize;
  opts.threads = threads;
  if (settings.estimator == "kl") return entropy_kl(sample, settings.k, opts);
  if (settings.estimator == "weighted") return entropy_weighted(sample, settings.k, opts);
  throw ValidationError("unknown entropy estimator '" + settings.estimator + "'");
}

BenchmarkReport sgg_benchmark(const BenchmarkSettings& settings, int threads) {
  if (settings.replicates < 1) throw ValidationError("benchmark needs at least one replicate");
  if (settings.p < 1) throw ValidationError("benchmark dimension must be positive");
  if (settings.n_list.empty()) throw ValidationError("benchmark needs at least one sample size");
  const GaussianModel g(Vector::Constant(settings.p, settings.mu),
                        Matrix::Identity(settings.p, settings.p));

  BenchmarkReport report;
  report.p = settings.p;
  report.mu = settings.mu;
  report.true_entropy = -entropy_gaussian(g);
  report.replicates = settings.replicates;
  report.estimator = settings.estimator;
  report.seed = settings.seed;

  for (std::size_t c = 0; c < settings.n_list.size(); ++c) {
    const Eigen::Index n = settings.n_list[c];
    if (n < 2) throw ValidationError("benchmark sample sizes must be at least 2");
    EntropySettings es;
    es.estimator = settings.estimator;
    es.k = static_cast<int>(std::min<Eigen::Index>(settings.k, n - 1));
    const std::uint64_t cell_seed = derive_seed(settings.seed, c);

    BenchmarkCell cell;
    cell.n = n;
    cell.k = es.k;
    cell.ratios.resize(static_cast<std::size_t>(settings.replicates));
    parallel_for(cell.ratios.size(), threads, [&](std::size_t r) {
      const Sample s = sample(g, n, derive_seed(cell_seed, r));
      cell.ratios[r] = estimate_entropy(s, es).h_hat / report.true_entropy;
    });
    cell.summary = summarize(cell.ratios);
    report.cells.push_back(std::move(cell));
  }
  return report;
}

TrueProjection true_projection(const GaussianModel& g, const std::vector<FittedModel>& models,
                               const Embedding& e, const ProjectionOptions& options) {
  const auto r = static_cast<Eigen::Index>(models.size());
  if (e.coords.rows() != r) throw ValidationError("embedding and model set differ in size");
  TrueProjection out;
  out.sgg = entropy_gaussian(g);
  out.kl.resize(r);
  Vector sgf(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    out.kl(i) = kl_gaussian(g, models[static_cast<std::size_t>(i)].predictive);
    sgf(i) = out.sgg - out.kl(i);
  }
  out.solution = solve_projection(sgf, e.coords, out.sgg, options);
  out.m = out.solution.m;
  out.h2 = out.solution.h2;
  return out;
}

PipelineResult run_pipeline(const RunConfig& config, int threads) {
  Sample data = stage("simulate", [&] { return config.simulate(config.seeds.data); });
  auto fits = stage("fit", [&] { return fit_all(config.candidates, data, threads); });

  const auto r = static_cast<Eigen::Index>(fits.size());
  Vector aics(r);
  Vector sgf(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    aics(i) = aic(fits[static_cast<std::size_t>(i)]);
    sgf(i) = sgf_hat(fits[static_cast<std::size_t>(i)]);
  }

  DivergenceMatrix dm = stage("divergence", [&] { return divergence_matrix(fits); });
  Matrix delta = dissimilarities(dm);
  NmdsOptions no;
  no.dim = config.nmds.dim;
  no.restarts = config.nmds.restarts;
  no.max_iterations = config.nmds.max_iterations;
  no.relative_tolerance = config.nmds.relative_tolerance;
  no.seed = config.seeds.nmds;
  no.threads = threads;
  Embedding emb = stage("embed", [&] { return nmds(delta, no, dm.names); });

  EntropyEstimate ent = stage("entropy", [&] { return estimate_entropy(data, config.entropy, threads); });

  AverageResult avg = stage("average", [&] {
    return model_average_location(emb.coords, akaike_weights(aics));
  });
  ProjectionOptions po = projection_options(config, threads);
  po.average_start = avg.location;
  ProjectionResult proj =
      stage("project", [&] { return solve_projection(sgf, emb.coords, ent.sgg_hat, po); });

  const GaussianModel g = config.generating_gaussian();
  TrueProjection truth = stage("true projection", [&] { return true_projection(g, fits, emb, po); });

  PipelineReport rep;
  rep.stress = emb.stress;
  rep.m_hat = proj.m;
  rep.average_location = avg.location;
  rep.m_true = truth.m;
  rep.h2_hat = proj.h2;
  rep.h2_true = truth.h2;
  rep.sgg_hat = ent.sgg_hat;
  rep.sgg_true = truth.sgg;
  rep.distance_projection = (proj.m - truth.m).norm();
  rep.distance_average = (avg.location - truth.m).norm();

  return PipelineResult{std::move(data), std::move(fits), std::move(aics), std::move(sgf),
                        std::move(dm),   std::move(delta), std::move(emb), std::move(ent),
                        std::move(proj), std::move(avg),   std::move(truth), std::move(rep)};
}

DeletionResult deletion_experiment(const RunConfig& config, DeletionDirection direction,
                                   int threads) {
  DeletionResult out{run_pipeline(config, threads), {}, {}, 0.0, 0.0};
  const auto& pipe = out.pipeline;
  ProjectionOptions po = projection_options(config, threads);
  out.sweep = stage("deletion", [&] {
    return deletion_sweep(pipe.embedding.names, pipe.embedding.coords, pipe.aics, pipe.sgf_hats,
                          pipe.entropy.sgg_hat, direction, config.deletion.steps, po);
  });
  const Vector& m_true = pipe.truth.m;
  for (const auto& s : out.sweep) {
    DeletionRow row;
    row.step = s.step;
    row.removed = s.removed;
    row.m_hat = s.projection.m;
    row.average = s.average.location;
    row.distance_projection = (row.m_hat - m_true).norm();
    row.distance_average = (row.average - m_true).norm();
    if (!out.rows.empty()) {
      out.projection_displacement += (row.m_hat - out.rows.back().m_hat).norm();
      out.average_displacement += (row.average - out.rows.back().average).norm();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace modelproj
