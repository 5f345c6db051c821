#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "helpers.hpp"
#include "modelproj/error.hpp"
#include "modelproj/experiments.hpp"

using namespace modelproj;

namespace {

// Unit-covariance Gaussians in the plane: KL = |a - b|^2 / 2, so the
// dissimilarity geometry is the mean geometry scaled by 1/sqrt(2).
struct PlanarFamily {
  std::vector<FittedModel> models;
  Embedding embedding;
};

PlanarFamily planar_family(const Matrix& means) {
  PlanarFamily f;
  f.embedding.coords = means / std::sqrt(2.0);
  f.embedding.dim = 2;
  for (Eigen::Index i = 0; i < means.rows(); ++i) {
    FittedModel fm;
    fm.spec.name = "f" + std::to_string(i);
    fm.predictive = GaussianModel(means.row(i).transpose(), Matrix::Identity(2, 2));
    f.models.push_back(fm);
    f.embedding.names.push_back(fm.spec.name);
  }
  return f;
}

}  // namespace

TEST_CASE("summary statistics") {
  const SummaryStats s = summarize({4.0, 1.0, 3.0, 2.0});
  CHECK(s.min == 1.0);
  CHECK(s.max == 4.0);
  CHECK(s.q1 == 1.75);
  CHECK(s.median == 2.5);
  CHECK(s.q3 == 3.25);
  CHECK(s.mean == 2.5);
  const SummaryStats one = summarize({7.0});
  CHECK(one.q1 == 7.0);
  CHECK(one.q3 == 7.0);
  CHECK_THROWS_AS(summarize({}), ValidationError);
}

TEST_CASE("entropy benchmark") {
  BenchmarkSettings bs;
  bs.n_list = {10, 40};
  bs.replicates = 6;
  bs.seed = 5;

  const BenchmarkReport a = sgg_benchmark(bs, 1);
  const BenchmarkReport b = sgg_benchmark(bs, 3);
  REQUIRE(a.cells.size() == 2);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(a.cells[c].ratios.size() == 6);
    CHECK(a.cells[c].ratios == b.cells[c].ratios);
  }
  CHECK(a.cells[0].k == 9);  // clamped to n - 1
  CHECK(a.cells[1].k == 12);
  CHECK(a.true_entropy == doctest::Approx(3.5 * std::log(2.0 * std::numbers::pi * std::numbers::e)).epsilon(1e-14));

  bs.seed = 6;
  CHECK(sgg_benchmark(bs).cells[0].ratios != a.cells[0].ratios);

  SUBCASE("one dimension, large n") {
    BenchmarkSettings one;
    one.p = 1;
    one.n_list = {10000};
    one.replicates = 50;
    one.estimator = "kl";
    one.k = 1;
    const BenchmarkReport r = sgg_benchmark(one, 4);
    CHECK(std::abs(r.cells[0].summary.mean - 1.0) < 0.03);
  }
  SUBCASE("bad settings") {
    BenchmarkSettings bad = bs;
    bad.replicates = 0;
    CHECK_THROWS_AS(sgg_benchmark(bad), ValidationError);
    bad = bs;
    bad.n_list = {1};
    CHECK_THROWS_AS(sgg_benchmark(bad), ValidationError);
  }
}

TEST_CASE("true projection of a planar family") {
  Rng rng(11);
  const Matrix means = 2.0 * testing::random_matrix(rng, 8, 2);
  const PlanarFamily f = planar_family(means);

  SUBCASE("generating process equal to a candidate") {
    const GaussianModel g(means.row(3).transpose(), Matrix::Identity(2, 2));
    const TrueProjection t = true_projection(g, f.models, f.embedding);
    CHECK((t.m - f.embedding.coords.row(3).transpose()).norm() < 1e-6);
    CHECK(t.h2 < 1e-8);
    CHECK(t.kl(3) == 0.0);
  }
  SUBCASE("off-plane distance from the covariance mismatch") {
    Matrix cov(2, 2);
    cov << 2.0, 0.3, 0.3, 0.5;
    const Vector mu{{0.4, -1.1}};
    const GaussianModel g(mu, cov);
    const TrueProjection t = true_projection(g, f.models, f.embedding);
    const double expected = 0.5 * (cov.trace() - 2.0 - std::log(cov.determinant()));
    CHECK((t.m - mu / std::sqrt(2.0)).norm() < 1e-6);
    CHECK(std::abs(t.h2 - expected) < 1e-8);
    CHECK(t.sgg == entropy_gaussian(g));
  }
  CHECK_THROWS_AS(true_projection(GaussianModel::standard(2), f.models, planar_family(means.topRows(5)).embedding),
                  ValidationError);
}

TEST_CASE("default pipeline") {
  const RunConfig cfg = default_config();
  const PipelineResult a = run_pipeline(cfg, 1);
  const PipelineResult b = run_pipeline(cfg, 4);

  CHECK(a.report.stress < 0.01);
  CHECK(a.report.h2_hat >= 0.0);
  CHECK(a.report.h2_true >= 0.0);
  CHECK(a.projection.converged);
  CHECK(a.fits.size() == cfg.candidates.size());
  CHECK(a.report.sgg_true == entropy_gaussian(cfg.generating_gaussian()));
  CHECK(a.report.distance_projection == (a.report.m_hat - a.report.m_true).norm());

  CHECK(a.report.m_hat == b.report.m_hat);
  CHECK(a.report.m_true == b.report.m_true);
  CHECK(a.embedding.coords == b.embedding.coords);
  CHECK(a.report.sgg_hat == b.report.sgg_hat);

  for (Eigen::Index i = 0; i < a.sgf_hats.size(); ++i) {
    CHECK(a.sgf_hats(i) == -a.aics(i) / (2.0 * static_cast<double>(cfg.n)));
  }
}

TEST_CASE("pipeline errors name the stage") {
  RunConfig cfg = default_config();
  cfg.entropy.estimator = "bogus";
  try {
    run_pipeline(cfg);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).rfind("entropy: ", 0) == 0);
  }

  cfg = default_config();
  cfg.n = 5;
  try {
    run_pipeline(cfg);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).rfind("fit: ", 0) == 0);
  }
}

TEST_CASE("deletion experiment") {
  RunConfig cfg = default_config();
  cfg.deletion.steps = 4;
  const DeletionResult d = deletion_experiment(cfg, DeletionDirection::left, 2);
  REQUIRE(d.rows.size() == 5);
  CHECK(d.rows[0].distance_projection == d.pipeline.report.distance_projection);
  CHECK(d.rows[0].distance_average == d.pipeline.report.distance_average);
  CHECK(d.rows[0].removed.empty());
  double proj = 0.0;
  double avg = 0.0;
  for (std::size_t s = 1; s < d.rows.size(); ++s) {
    CHECK_FALSE(d.rows[s].removed.empty());
    proj += (d.rows[s].m_hat - d.rows[s - 1].m_hat).norm();
    avg += (d.rows[s].average - d.rows[s - 1].average).norm();
  }
  CHECK(proj == doctest::Approx(d.projection_displacement).epsilon(1e-14));
  CHECK(avg == doctest::Approx(d.average_displacement).epsilon(1e-14));

  CHECK(parse_direction("right") == DeletionDirection::right);
  CHECK_THROWS_AS(parse_direction("up"), ValidationError);
}
