#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "modelproj/distributions.hpp"
#include "modelproj/error.hpp"

using namespace modelproj;
using testing::mean_se;
using testing::random_gaussian;

namespace {

GaussianModel univariate(double mu, double var) {
  return GaussianModel(Vector::Constant(1, mu), Matrix::Constant(1, 1, var));
}

PathModel chain(double beta) {
  PathModel pm;
  pm.variables = {"x1", "x2"};
  pm.edges = {{"x1", "x2", beta}};
  pm.noise_sd = {1.0, 1.0};
  pm.intercepts = {0.0, 0.0};
  return pm;
}

PathModel diamond() {
  PathModel pm;
  pm.variables = {"d", "b", "a", "c"};  // deliberately not in topological order
  pm.edges = {{"a", "b", 0.7}, {"a", "c", -0.4}, {"b", "d", 0.5}, {"c", "d", 0.9}};
  pm.noise_sd = {0.5, 1.2, 1.0, 0.8};
  pm.intercepts = {1.0, -2.0, 0.5, 3.0};
  return pm;
}

Matrix sample_cov(const Matrix& x) {
  const Matrix c = x.rowwise() - x.colwise().mean();
  return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

}  // namespace

TEST_CASE("GaussianModel validation") {
  CHECK_NOTHROW(GaussianModel(Vector::Zero(2), Matrix::Identity(2, 2)));
  CHECK_THROWS_AS(GaussianModel(Vector::Zero(0), Matrix(0, 0)), ValidationError);
  CHECK_THROWS_AS(GaussianModel(Vector::Zero(2), Matrix::Identity(3, 3)), ValidationError);

  Matrix not_pd(2, 2);
  not_pd << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianModel(Vector::Zero(2), not_pd), NumericalError);

  Matrix tiny_asym = Matrix::Identity(2, 2);
  tiny_asym(0, 1) = 0.5;
  tiny_asym(1, 0) = 0.5 + 1e-14;
  const GaussianModel ok(Vector::Zero(2), tiny_asym);
  CHECK(ok.cov()(0, 1) == ok.cov()(1, 0));

  Matrix big_asym = Matrix::Identity(2, 2);
  big_asym(0, 1) = 0.5;
  big_asym(1, 0) = 0.4;
  CHECK_THROWS_AS(GaussianModel(Vector::Zero(2), big_asym), ValidationError);

  Vector nan_mean = Vector::Zero(2);
  nan_mean(0) = std::nan("");
  CHECK_THROWS_AS(GaussianModel(nan_mean, Matrix::Identity(2, 2)), ValidationError);
}

TEST_CASE("log_density hand values") {
  CHECK(log_density(univariate(0, 1), Vector::Zero(1)) ==
        doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
  CHECK(log_density(univariate(0, 1), Vector::Zero(1)) == doctest::Approx(-0.918939).epsilon(1e-6));
  CHECK(log_density(GaussianModel::standard(2), Vector::Zero(2)) ==
        doctest::Approx(-1.837877).epsilon(1e-6));
  CHECK(log_density(univariate(1, 4), Vector::Constant(1, 3.0)) ==
        doctest::Approx(-2.112086).epsilon(1e-6));
  CHECK(log_density(univariate(1, 4), Vector::Constant(1, 3.0)) ==
        doctest::Approx(-0.5 * std::log(8 * std::numbers::pi) - 0.5).epsilon(1e-14));
  CHECK_THROWS_AS(log_density(GaussianModel::standard(2), Vector::Zero(3)), ValidationError);
}

TEST_CASE("log_density integrates against a direct formula") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = random_gaussian(rng, 3);
    const Vector x = testing::random_matrix(rng, 3, 1).col(0);
    const Vector d = x - g.mean();
    const double direct = -0.5 * (3 * std::log(2 * std::numbers::pi) +
                                  std::log(g.cov().determinant()) +
                                  d.dot(g.cov().inverse() * d));
    CHECK(log_density(g, x) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("sampling") {
  const GaussianModel g = GaussianModel::standard(2);
  SUBCASE("deterministic for a fixed seed") {
    const Sample a = sample(g, 50, 42);
    const Sample b = sample(g, 50, 42);
    CHECK(a.data() == b.data());
    CHECK(sample(g, 50, 43).data() != a.data());
  }
  SUBCASE("column means obey the CLT bound") {
    const Eigen::Index n = 100000;
    const Sample s = sample(g, n, 7);
    const Vector means = s.data().colwise().mean();
    CHECK(means.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(static_cast<double>(n)));
  }
  SUBCASE("n = 1 draw is allowed but not a Sample") {
    const Matrix one = draw(g, 1, 3);
    CHECK(one.rows() == 1);
    CHECK_THROWS_AS(Sample{one}, ValidationError);
    CHECK_THROWS_AS(draw(g, 0, 3), ValidationError);
  }
  SUBCASE("sample covariance matches the model") {
    Rng rng(5);
    const auto m = random_gaussian(rng, 3);
    const Eigen::Index n = 200000;
    const Matrix x = draw(m, n, 9);
    const Matrix c = sample_cov(x);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double se = std::sqrt((m.cov()(i, i) * m.cov()(j, j) + m.cov()(i, j) * m.cov()(i, j)) /
                                    static_cast<double>(n));
        CHECK(std::abs(c(i, j) - m.cov()(i, j)) < 5 * se);
      }
    }
  }
}

TEST_CASE("Sample invariants") {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  const Sample s(x, {"a", "b"});
  CHECK(s.n() == 3);
  CHECK(s.p() == 2);
  CHECK(s.data()(2, s.column("b")) == 6.0);
  CHECK_THROWS_AS(s.column("zz"), ValidationError);
  CHECK_THROWS_AS(Sample(x, {"a", "a"}), ValidationError);
  CHECK_THROWS_AS(Sample(x, {"a"}), ValidationError);
  Matrix bad = x;
  bad(1, 1) = INFINITY;
  CHECK_THROWS_AS(Sample(bad, {"a", "b"}), ValidationError);
  CHECK(Sample(x).names() == std::vector<std::string>{"x1", "x2"});
}

TEST_CASE("kl_gaussian closed form") {
  CHECK(kl_gaussian(univariate(0, 1), univariate(1, 1)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(kl_gaussian(univariate(0, 1), univariate(0, 4)) ==
        doctest::Approx(std::log(2.0) + 0.125 - 0.5).epsilon(1e-14));
  CHECK(kl_gaussian(univariate(0, 1), univariate(0, 4)) == doctest::Approx(0.318147).epsilon(1e-6));
  // Reverse direction of the same pair: (4 - 1 - ln 4) / 2.
  CHECK(kl_gaussian(univariate(0, 4), univariate(0, 1)) == doctest::Approx(1.5 - std::log(2.0)).epsilon(1e-14));
  CHECK(kl_gaussian(univariate(0, 4), univariate(0, 1)) == doctest::Approx(0.806853).epsilon(1e-6));
  CHECK_THROWS_AS(kl_gaussian(GaussianModel::standard(1), GaussianModel::standard(2)),
                  ValidationError);

  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const auto a = random_gaussian(rng, 4);
    const auto b = random_gaussian(rng, 4);
    CHECK(kl_gaussian(a, a) < 1e-12);
    CHECK(kl_gaussian(a, b) > 0.0);
    CHECK(kl_gaussian(a, b) != doctest::Approx(kl_gaussian(b, a)));
  }
}

TEST_CASE("kl_gaussian equals Sgg - Sgf by Monte Carlo") {
  Rng rng(21);
  const Eigen::Index n = 200000;
  for (int rep = 0; rep < 5; ++rep) {
    const auto g = random_gaussian(rng, 3);
    const auto f = random_gaussian(rng, 3);
    const Matrix x = draw(g, n, 100 + rep);
    Vector ratio(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      ratio(i) = log_density(g, x.row(i).transpose()) - log_density(f, x.row(i).transpose());
    }
    const auto [m, se] = mean_se(ratio);
    CHECK(std::abs(m - kl_gaussian(g, f)) < 3 * se);
  }
}

TEST_CASE("entropy_gaussian") {
  const double h7 = -entropy_gaussian(GaussianModel::standard(7));
  CHECK(h7 == doctest::Approx(9.93257).epsilon(1e-6));
  CHECK(entropy_gaussian(univariate(3, 1)) == doctest::Approx(-1.418939).epsilon(1e-6));
  Matrix unit_det(2, 2);
  unit_det << 2.0, 0.0, 0.0, 0.5;
  CHECK(entropy_gaussian(GaussianModel(Vector::Zero(2), unit_det)) ==
        doctest::Approx(-2.837877).epsilon(1e-6));

  SUBCASE("rotation invariance") {
    Rng rng(8);
    for (int rep = 0; rep < 10; ++rep) {
      const auto g = random_gaussian(rng, 4);
      const Eigen::HouseholderQR<Matrix> qr(testing::random_matrix(rng, 4, 4));
      const Matrix q = qr.householderQ();
      const GaussianModel rotated(q * g.mean(), q * g.cov() * q.transpose());
      CHECK(entropy_gaussian(rotated) == doctest::Approx(entropy_gaussian(g)).epsilon(1e-12));
    }
  }
  SUBCASE("equals the Monte-Carlo mean log density") {
    Rng rng(4);
    const auto g = random_gaussian(rng, 3);
    const Eigen::Index n = 200000;
    const Matrix x = draw(g, n, 77);
    Vector ld(n);
    for (Eigen::Index i = 0; i < n; ++i) ld(i) = log_density(g, x.row(i).transpose());
    const auto [m, se] = mean_se(ld);
    CHECK(std::abs(m - entropy_gaussian(g)) < 3 * se);
  }
}

TEST_CASE("reduce_path_model") {
  SUBCASE("no edges") {
    PathModel pm;
    pm.variables = {"a", "b", "c"};
    pm.noise_sd = {1, 1, 1};
    pm.intercepts = {0, 0, 0};
    const GaussianModel g = reduce_path_model(pm);
    CHECK(g.mean().isZero(0));
    CHECK(g.cov().isIdentity(0));
  }
  SUBCASE("two-variable chain") {
    const double beta = 0.8;
    const GaussianModel g = reduce_path_model(chain(beta));
    Matrix expected(2, 2);
    expected << 1.0, beta, beta, 1.0 + beta * beta;
    CHECK((g.cov() - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("matches simulation at n = 1e6") {
    const PathModel pm = diamond();
    const GaussianModel g = reduce_path_model(pm);
    const Eigen::Index n = 1000000;
    const Sample s = simulate_path_model(pm, n, 2024);
    CHECK(s.names() == pm.variables);
    const Vector means = s.data().colwise().mean();
    const Matrix c = sample_cov(s.data());
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(means(i) - g.mean()(i)) < 5 * std::sqrt(g.cov()(i, i) / n));
      for (int j = 0; j < 4; ++j) {
        const double se = std::sqrt((g.cov()(i, i) * g.cov()(j, j) + g.cov()(i, j) * g.cov()(i, j)) / n);
        CHECK(std::abs(c(i, j) - g.cov()(i, j)) < 5 * se);
      }
    }
  }
  SUBCASE("sampling the reduction matches sequential simulation in distribution") {
    const PathModel pm = diamond();
    const Eigen::Index n = 1000000;
    const Matrix direct = simulate_path_model(pm, n, 1).data();
    const Matrix reduced = draw(reduce_path_model(pm), n, 2);
    const Matrix c1 = sample_cov(direct);
    const Matrix c2 = sample_cov(reduced);
    const Vector m1 = direct.colwise().mean();
    const Vector m2 = reduced.colwise().mean();
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(m1(i) - m2(i)) < 5 * std::sqrt(2 * c1(i, i) / n));
      for (int j = 0; j < 4; ++j) {
        const double se = std::sqrt(2 * (c1(i, i) * c1(j, j) + c1(i, j) * c1(i, j)) / n);
        CHECK(std::abs(c1(i, j) - c2(i, j)) < 5 * se);
      }
    }
  }
}

TEST_CASE("PathModel validation") {
  PathModel pm = chain(0.5);
  CHECK_NOTHROW(pm.validate());

  PathModel cyc = diamond();
  cyc.edges.push_back({"d", "a", 0.1});
  try {
    cyc.validate();
    FAIL("cycle not detected");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("cycle") != std::string::npos);
    CHECK(msg.find("a") != std::string::npos);
    CHECK(msg.find("d") != std::string::npos);
  }
  CHECK_THROWS_AS(reduce_path_model(cyc), ValidationError);

  PathModel bad = chain(0.5);
  bad.noise_sd[1] = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = chain(0.5);
  bad.edges.push_back({"x1", "zz", 1.0});
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = chain(0.5);
  bad.edges.push_back({"x2", "x2", 1.0});
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = chain(0.5);
  bad.intercepts.pop_back();
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  const auto order = diamond().topological_order();
  const PathModel d = diamond();
  std::vector<std::size_t> pos(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  for (const auto& e : d.edges) CHECK(pos[d.index_of(e.source)] < pos[d.index_of(e.target)]);
}
