#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "modelproj/error.hpp"
#include "modelproj/optimize.hpp"
#include "modelproj/projection.hpp"

using namespace modelproj;

namespace {

struct Geometry {
  Matrix coords;
  Vector m_star;
  double h2 = 0.0;
  double sgg = 0.0;
  Vector sgf;
};

Geometry exact_geometry(const Matrix& coords, const Vector& m_star, double h, double sgg) {
  Geometry g{coords, m_star, h * h, sgg, Vector(coords.rows())};
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    g.sgf(i) = sgg - g.h2 - (coords.row(i).transpose() - m_star).squaredNorm();
  }
  return g;
}

// The objective is a least-squares problem in m once |m|^2 cancels from the
// level differences: (t_i - mean t) = a_i + 2 (c_i - mean c) . m.
Vector least_squares_oracle(const Vector& sgf, const Matrix& coords) {
  const Vector sq = coords.rowwise().squaredNorm();
  const Vector a = -(sgf.array() - sgf.mean()) - (sq.array() - sq.mean());
  const Matrix centered = 2.0 * (coords.rowwise() - coords.colwise().mean());
  return centered.colPivHouseholderQr().solve(-a);
}

double pairwise_objective(const Vector& m, const Vector& sgf, const Matrix& coords) {
  const auto r = coords.rows();
  Vector t(r);
  for (Eigen::Index i = 0; i < r; ++i) t(i) = -sgf(i) - (coords.row(i).transpose() - m).squaredNorm();
  double s = 0.0;
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = i + 1; j < r; ++j) s += (t(i) - t(j)) * (t(i) - t(j));
  return s;
}

Matrix triangle() {
  Matrix c(3, 2);
  c << 0.0, 0.0, 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
  return c;
}

}  // namespace

TEST_CASE("akaike weights") {
  const Vector equal = akaike_weights(Vector::Constant(5, 123.4));
  CHECK((equal.array() - 0.2).abs().maxCoeff() < 1e-15);

  const Vector w = akaike_weights(Vector{{10.0, 12.0}});
  CHECK(w(0) == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(w(1) == doctest::Approx(0.268941).epsilon(1e-6));
  CHECK(w(0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));

  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    Vector aics(8);
    for (int i = 0; i < 8; ++i) aics(i) = 1000.0 + 20.0 * rng.normal();
    const Vector base = akaike_weights(aics);
    CHECK(std::abs(base.sum() - 1.0) < 1e-12);
    CHECK((base.array() >= 0.0).all());
    const Vector shifted = akaike_weights(aics.array() + 5e3 * rng.uniform());
    CHECK((shifted - base).cwiseAbs().maxCoeff() < 1e-12);
    Vector rev = aics.reverse();
    CHECK((akaike_weights(rev) - base.reverse()).cwiseAbs().maxCoeff() == 0.0);
  }
  // Very large spreads stay finite.
  const Vector wide = akaike_weights(Vector{{0.0, 5000.0, 1e6}});
  CHECK(wide(0) == 1.0);
  CHECK(wide.allFinite());
  CHECK_THROWS_AS(akaike_weights(Vector()), ValidationError);
}

TEST_CASE("model average location") {
  Matrix c(3, 2);
  c << 0, 0, 4, 0, 0, 8;
  CHECK(model_average_location(c, Vector{{0.0, 1.0, 0.0}}).location == Vector{{4.0, 0.0}});
  CHECK((model_average_location(c, Vector::Constant(3, 1.0 / 3.0)).location - Vector{{4.0 / 3.0, 8.0 / 3.0}})
            .norm() < 1e-15);
  const Matrix two = c.topRows(2);
  CHECK((model_average_location(two, Vector{{0.25, 0.75}}).location - (0.25 * two.row(0) + 0.75 * two.row(1)).transpose())
            .norm() < 1e-15);
  CHECK_THROWS_AS(model_average_location(c, Vector{{0.5, 0.6, 0.0}}), ValidationError);
  CHECK_THROWS_AS(model_average_location(c, Vector{{1.5, -0.5, 0.0}}), ValidationError);
  CHECK_THROWS_AS(model_average_location(c, Vector{{1.0}}), ValidationError);
}

TEST_CASE("projection objective") {
  Rng rng(2);
  const Matrix coords = testing::random_matrix(rng, 9, 2);
  const Geometry g = exact_geometry(coords, Vector{{0.3, -0.2}}, 0.4, -7.0);
  CHECK(projection_objective(g.m_star, g.sgf, coords) < 1e-24);

  const Vector noisy = g.sgf + 0.1 * testing::random_matrix(rng, 9, 1).col(0);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector m = 3.0 * testing::random_matrix(rng, 2, 1).col(0);
    const double obj = projection_objective(m, noisy, coords);
    CHECK(obj >= 0.0);
    CHECK(obj == doctest::Approx(pairwise_objective(m, noisy, coords)).epsilon(1e-10));

    // Central differences.
    const Vector grad = projection_gradient(m, noisy, coords);
    for (int k = 0; k < 2; ++k) {
      Vector e = Vector::Zero(2);
      e(k) = 1e-6;
      const double fd = (projection_objective(m + e, noisy, coords) - projection_objective(m - e, noisy, coords)) / 2e-6;
      CHECK(grad(k) == doctest::Approx(fd).epsilon(1e-6));
    }
  }

  SUBCASE("two models leave a line of zeros") {
    const Matrix c2 = coords.topRows(2);
    const Vector s2 = noisy.head(2);
    // t_1 = t_2 is linear in m: 2 (c_1 - c_2) . m = |c_1|^2 - |c_2|^2 + s_1 - s_2.
    const Vector n = 2.0 * (c2.row(0) - c2.row(1)).transpose();
    const double rhs = c2.row(0).squaredNorm() - c2.row(1).squaredNorm() + s2(0) - s2(1);
    const Vector p0 = n * rhs / n.squaredNorm();
    const Vector dir{{-n(1), n(0)}};
    for (double t : {-3.0, 0.0, 1.5, 10.0}) {
      CHECK(projection_objective(p0 + t * dir, s2, c2) < 1e-18 * (1 + t * t * t * t));
    }
  }
}

TEST_CASE("solve_projection on exact geometry") {
  SUBCASE("triangle, m* at the centroid") {
    const Matrix c = triangle();
    const Vector centroid = c.colwise().mean();
    const Geometry g = exact_geometry(c, centroid, 0.1, -4.0);
    const auto res = solve_projection(g.sgf, c, g.sgg);
    CHECK((res.m - centroid).norm() < 1e-6);
    CHECK(std::abs(res.h2 - 0.01) < 1e-8);
    CHECK_FALSE(res.clamped);
    CHECK(res.converged);
  }
  SUBCASE("triangle, m* outside the hull") {
    const Matrix c = triangle();
    const Geometry g = exact_geometry(c, Vector{{2.0, 0.0}}, 0.1, -4.0);
    const auto res = solve_projection(g.sgf, c, g.sgg);
    CHECK((res.m - g.m_star).norm() < 1e-6);
    CHECK(std::abs(res.h2 - 0.01) < 1e-8);
  }
  SUBCASE("random boxes") {
    Rng rng(3);
    for (int rep = 0; rep < 30; ++rep) {
      const auto r = 4 + static_cast<Eigen::Index>(rng.uniform() * 20);
      Matrix c(r, 2);
      for (Eigen::Index i = 0; i < r; ++i) c.row(i) << rng.uniform() * 4 - 2, rng.uniform() * 4 - 2;
      const Vector m{{rng.uniform() * 8 - 4, rng.uniform() * 8 - 4}};
      const Geometry g = exact_geometry(c, m, rng.uniform(), -9.0 + rng.normal());
      ProjectionOptions po;
      po.seed = static_cast<std::uint64_t>(rep);
      const auto res = solve_projection(g.sgf, c, g.sgg, po);
      CHECK((res.m - m).norm() < 1e-6);
      CHECK(std::abs(res.h2 - g.h2) < 1e-6);
      CHECK(res.objective_value < 1e-12);
    }
  }
}

TEST_CASE("solve_projection matches the least-squares oracle") {
  Rng rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    const auto r = 4 + static_cast<Eigen::Index>(rng.uniform() * 25);
    const auto dim = 1 + static_cast<Eigen::Index>(rng.uniform() * 3);
    if (r < dim + 1) continue;
    const Matrix c = testing::random_matrix(rng, r, dim);
    const Vector sgf = -5.0 + testing::random_matrix(rng, r, 1).col(0).array();
    const auto res = solve_projection(sgf, c, -4.0);
    const Vector oracle = least_squares_oracle(sgf, c);
    CHECK((res.m - oracle).norm() < 1e-6 * (1.0 + oracle.norm()));
  }
}

TEST_CASE("Sgg enters only the level") {
  Rng rng(5);
  const Matrix c = testing::random_matrix(rng, 12, 2);
  const Vector sgf = -6.0 + 0.3 * testing::random_matrix(rng, 12, 1).col(0).array();
  const auto base = solve_projection(sgf, c, -2.0);
  for (double eps : {1e-3, 0.5, 7.0}) {
    const auto shifted = solve_projection(sgf, c, -2.0 + eps);
    CHECK(shifted.m == base.m);
    CHECK(std::abs(shifted.h2_unclamped - base.h2_unclamped - eps) < 1e-12);
  }
}

TEST_CASE("result invariants") {
  Rng rng(6);
  const Matrix c = testing::random_matrix(rng, 10, 2);
  const Vector sgf = -6.0 + 0.3 * testing::random_matrix(rng, 10, 1).col(0).array();
  const auto res = solve_projection(sgf, c, -2.0);
  for (Eigen::Index i = 0; i < 10; ++i) {
    CHECK(res.kl_to_g(i) == res.h2 + (c.row(i).transpose() - res.m).squaredNorm());
  }
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index j = 0; j < 10; ++j)
      if ((c.row(i).transpose() - res.m).norm() < (c.row(j).transpose() - res.m).norm())
        CHECK(res.kl_to_g(i) <= res.kl_to_g(j));

  SUBCASE("clamping") {
    const auto low = solve_projection(sgf, c, -50.0);
    CHECK(low.clamped);
    CHECK(low.h2 == 0.0);
    CHECK(low.h2_unclamped < 0.0);
    CHECK(low.m == res.m);
  }
  SUBCASE("rigid motion equivariance") {
    const double a = 0.7;
    Matrix rot(2, 2);
    rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    const Vector shift{{3.0, -1.0}};
    const Matrix moved = (c * rot.transpose()).rowwise() + shift.transpose();
    const auto r2 = solve_projection(sgf, moved, -2.0);
    CHECK((r2.m - (rot * res.m + shift)).norm() < 1e-8);
    CHECK(std::abs(r2.h2 - res.h2) < 1e-8);
  }
  SUBCASE("deterministic across threads") {
    ProjectionOptions po;
    po.threads = 4;
    const auto par = solve_projection(sgf, c, -2.0, po);
    CHECK(par.m == res.m);
    CHECK(par.start_index == res.start_index);
  }
}

TEST_CASE("collinear embeddings are solved in the reduced subspace") {
  Matrix c(6, 2);
  for (int i = 0; i < 6; ++i) c.row(i) << i * 0.5 - 1.0, 2.0 * (i * 0.5 - 1.0) + 1.0;
  const Vector m_star = c.row(1).transpose() * 0.3 + c.row(4).transpose() * 0.7 +
                        Vector{{-2.0, 1.0}} * 1.5;  // off the line
  const Geometry g = exact_geometry(c, m_star, 0.2, -3.0);
  const auto res = solve_projection(g.sgf, c, g.sgg);
  CHECK(res.reduced);
  // The component normal to the line is absorbed into the level.
  const Vector dir = (c.row(1) - c.row(0)).transpose().normalized();
  const Vector foot = c.row(0).transpose() + dir * dir.dot(m_star - c.row(0).transpose());
  CHECK((res.m - foot).norm() < 1e-6);
  CHECK(std::abs(res.h2 - (0.04 + (m_star - foot).squaredNorm())) < 1e-6);
}

TEST_CASE("solve_projection errors") {
  CHECK_THROWS_AS(solve_projection(Vector::Zero(2), triangle().topRows(2), 0.0), ValidationError);
  CHECK_THROWS_AS(solve_projection(Vector::Zero(2), triangle(), 0.0), ValidationError);
  Vector bad = Vector::Zero(3);
  bad(1) = NAN;
  CHECK_THROWS_AS(solve_projection(bad, triangle(), 0.0), ValidationError);
  CHECK_THROWS_AS(solve_projection(Vector::Zero(3), Matrix::Zero(3, 2), 0.0), NumericalError);
}

TEST_CASE("deletion sweep") {
  Rng rng(7);
  const Eigen::Index r = 12;
  Matrix c(r, 2);
  for (Eigen::Index i = 0; i < r; ++i) c.row(i) << rng.uniform() * 4 - 2, rng.uniform() * 4 - 2;
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < r; ++i) names.push_back("m" + std::to_string(i));
  const Geometry g = exact_geometry(c, Vector{{2.5, 0.5}}, 0.3, -8.0);
  Vector aics(r);
  for (Eigen::Index i = 0; i < r; ++i) aics(i) = 500.0 + 3.0 * rng.uniform();

  SUBCASE("step 0 equals the full-set solution") {
    const auto sweep = deletion_sweep(names, c, aics, g.sgf, g.sgg, DeletionDirection::left, 0);
    REQUIRE(sweep.size() == 1);
    ProjectionOptions po;
    const AverageResult avg = model_average_location(c, akaike_weights(aics));
    po.average_start = avg.location;
    const auto full = solve_projection(g.sgf, c, g.sgg, po);
    CHECK(sweep[0].projection.m == full.m);
    CHECK(sweep[0].average.location == avg.location);
    CHECK(sweep[0].removed.empty());
  }
  SUBCASE("exact geometry stays put and removal follows axis 1") {
    const int steps = static_cast<int>(r) - 4;
    const auto sweep = deletion_sweep(names, c, aics, g.sgf, g.sgg, DeletionDirection::left, steps);
    REQUIRE(sweep.size() == static_cast<std::size_t>(steps + 1));
    double last_x = -1e300;
    for (const auto& s : sweep) {
      CHECK((s.projection.m - g.m_star).norm() < 1e-6);
      if (s.step > 0) {
        const auto idx = static_cast<Eigen::Index>(std::stoi(s.removed.substr(1)));
        CHECK(c(idx, 0) >= last_x);
        last_x = c(idx, 0);
        for (auto sv : s.survivors) CHECK(c(static_cast<Eigen::Index>(sv), 0) >= c(idx, 0));
      }
    }
    const auto right = deletion_sweep(names, c, aics, g.sgf, g.sgg, DeletionDirection::right, 1);
    Eigen::Index argmax;
    c.col(0).maxCoeff(&argmax);
    CHECK(right[1].removed == names[static_cast<std::size_t>(argmax)]);
  }
  SUBCASE("average displacement bound") {
    const int steps = static_cast<int>(r) - 4;
    const auto sweep = deletion_sweep(names, c, aics, g.sgf, g.sgg, DeletionDirection::left, steps);
    double diameter = 0.0;
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < r; ++j) diameter = std::max(diameter, (c.row(i) - c.row(j)).norm());
    for (std::size_t s = 1; s < sweep.size(); ++s) {
      const auto& prev = sweep[s - 1];
      std::size_t pos = 0;
      while (names[prev.survivors[pos]] != sweep[s].removed) ++pos;
      const double w = prev.average.weights(static_cast<Eigen::Index>(pos));
      const double shift = (sweep[s].average.location - prev.average.location).norm();
      CHECK(shift <= w * diameter / (1.0 - w) + 1e-12);
    }
  }
  SUBCASE("uniform weights move the average rightward") {
    const auto sweep = deletion_sweep(names, c, Vector::Constant(r, 100.0), g.sgf, g.sgg,
                                      DeletionDirection::left, static_cast<int>(r) - 4);
    for (std::size_t s = 1; s < sweep.size(); ++s) {
      CHECK(sweep[s].average.location(0) >= sweep[s - 1].average.location(0));
    }
  }
  SUBCASE("too many steps") {
    CHECK_THROWS_AS(deletion_sweep(names, c, aics, g.sgf, g.sgg, DeletionDirection::left, static_cast<int>(r) - 3),
                    ValidationError);
    CHECK_THROWS_AS(deletion_sweep(names, c, aics, g.sgf, g.sgg, DeletionDirection::left, -1), ValidationError);
  }
}

TEST_CASE("L-BFGS on a Rosenbrock valley") {
  const Objective rosen = [](const Vector& x, Vector& g) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    g.resize(2);
    g(0) = -2.0 * a - 400.0 * x(0) * b;
    g(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  MinimizeOptions mo;
  mo.max_iterations = 2000;
  const auto res = minimize_lbfgs(rosen, Vector{{-1.2, 1.0}}, mo);
  CHECK(res.converged);
  CHECK((res.x - Vector{{1.0, 1.0}}).norm() < 1e-8);
}
