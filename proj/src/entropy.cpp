#include "modelproj/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "modelproj/error.hpp"
#include "modelproj/kdtree.hpp"
#include "modelproj/parallel.hpp"
#include "modelproj/random.hpp"

namespace modelproj {

namespace {

constexpr std::size_t kBruteForceBelow = 64;
constexpr std::uint64_t kJitterSeed = 0x6a177e5ULL;

// n x k table of sorted neighbor distances (orders 1..k).
Matrix neighbor_table(const Matrix& x, int k, int threads) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (k < 1 || static_cast<std::size_t>(k) > n - 1) {
    throw ValidationError("neighbor order k=" + std::to_string(k) + " must lie in [1, n-1] with n=" +
                          std::to_string(n));
  }
  const auto kk = static_cast<std::size_t>(k);
  Matrix table(x.rows(), k);

  if (n < kBruteForceBelow) {
    std::vector<double> rows(n * d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        rows[i * d + j] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    parallel_for(n, threads, [&](std::size_t i) {
      std::vector<double> d2;
      d2.reserve(n - 1);
      for (std::size_t t = 0; t < n; ++t) {
        if (t != i) d2.push_back(squared_distance(&rows[i * d], &rows[t * d], d));
      }
      std::partial_sort(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(kk), d2.end());
      for (std::size_t j = 0; j < kk; ++j) {
        table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::sqrt(d2[j]);
      }
    });
  } else {
    const KdTree tree(x);
    parallel_for(n, threads, [&](std::size_t i) {
      const auto d2 = tree.nearest_squared(i, kk);
      for (std::size_t j = 0; j < kk; ++j) {
        table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::sqrt(d2[j]);
      }
    });
  }
  if ((table.col(0).array() <= 0.0).any()) {
    throw NumericalError(
        "duplicate points give a zero nearest-neighbor distance; deduplicate the sample or enable "
        "jitter");
  }
  return table;
}

struct Prepared {
  Matrix x;
  double log_jacobian = 0.0;  // added to H to undo standardization
};

Prepared prepare(const Sample& sample, const EntropyOptions& options) {
  Prepared out{sample.data()};
  const Eigen::Index n = out.x.rows();
  if (options.standardize) {
    for (Eigen::Index j = 0; j < out.x.cols(); ++j) {
      const double mean = out.x.col(j).mean();
      const double sd =
          std::sqrt((out.x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1));
      if (!(sd > 0.0)) throw NumericalError("cannot standardize a constant column");
      out.x.col(j) /= sd;
      out.log_jacobian += std::log(sd);
    }
  }
  if (options.jitter) {
    double scale = 0.0;
    for (Eigen::Index j = 0; j < out.x.cols(); ++j) {
      const double mean = out.x.col(j).mean();
      scale = std::max(scale, std::sqrt((out.x.col(j).array() - mean).square().mean()));
    }
    if (!(scale > 0.0)) scale = std::max(out.x.cwiseAbs().maxCoeff(), 1.0);
    Rng rng(kJitterSeed);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < out.x.cols(); ++j) {
        out.x(i, j) += 1e-9 * scale * (2.0 * rng.uniform() - 1.0);
      }
    }
  }
  return out;
}

}  // namespace

double digamma(double x) {
  if (!(x > 0.0)) throw ValidationError("digamma implemented for x > 0 only");
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  // Bernoulli-number series: -1/12, 1/120, -1/252, 1/240, -1/132, 691/32760.
  const double series =
      inv2 * (-1.0 / 12.0 +
              inv2 * (1.0 / 120.0 +
                      inv2 * (-1.0 / 252.0 +
                              inv2 * (1.0 / 240.0 + inv2 * (-1.0 / 132.0 + inv2 * 691.0 / 32760.0)))));
  return acc + std::log(x) - 0.5 / x + series;
}

double log_unit_ball_volume(int d) {
  const double half = 0.5 * d;
  return half * std::log(std::numbers::pi) - std::lgamma(half + 1.0);
}

std::vector<double> knn_distances(const Sample& sample, int k, int threads) {
  const Matrix table = neighbor_table(sample.data(), k, threads);
  const Vector col = table.col(k - 1);
  return {col.data(), col.data() + col.size()};
}

namespace {

double kl_estimate(const Matrix& table, int k, Eigen::Index d) {
  const auto n = table.rows();
  const double mean_log = table.col(k - 1).array().log().sum() / static_cast<double>(n);
  return digamma(static_cast<double>(n)) - digamma(k) + log_unit_ball_volume(static_cast<int>(d)) +
         static_cast<double>(d) * mean_log;
}

EntropyEstimate finish(double h, int k, const Sample& sample, std::string estimator) {
  EntropyEstimate e;
  e.h_hat = h;
  e.sgg_hat = -h;
  e.k = k;
  e.n = sample.n();
  e.d = sample.p();
  e.estimator = std::move(estimator);
  return e;
}

}  // namespace

EntropyEstimate entropy_kl(const Sample& sample, int k, const EntropyOptions& options) {
  const Prepared prep = prepare(sample, options);
  const Matrix table = neighbor_table(prep.x, k, options.threads);
  auto e = finish(kl_estimate(table, k, sample.p()) + prep.log_jacobian, k, sample, "kl");
  e.weights = {{k, 1.0}};
  return e;
}

int default_k_max(Eigen::Index d, Eigen::Index n) {
  const auto half_up = static_cast<int>((d + 1) / 2);
  return std::max(1, std::min(3 * half_up, static_cast<int>(n - 1)));
}

std::vector<std::pair<int, double>> bias_cancelling_weights(int d, int k_max) {
  if (d < 1 || k_max < 1) throw ValidationError("weights need d >= 1 and k_max >= 1");
  std::vector<int> support;
  for (int l = 1; l <= d; ++l) {
    const int j = std::max(1, (l * k_max) / d);
    if (support.empty() || support.back() != j) support.push_back(j);
  }
  const int constraints = 1 + d / 4;
  const auto m = static_cast<Eigen::Index>(support.size());
  if (m < constraints) return {};

  Matrix a(constraints, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    const double j = support[static_cast<std::size_t>(c)];
    a(0, c) = 1.0;
    for (int l = 1; l < constraints; ++l) {
      a(l, c) = std::exp(std::lgamma(j + 2.0 * l / d) - std::lgamma(j));
    }
  }
  // Minimum-norm solution of a w = e1.
  Vector rhs = Vector::Zero(constraints);
  rhs(0) = 1.0;
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  if (cod.rank() < constraints) return {};
  const Vector w = cod.solve(rhs);
  if (!w.allFinite() || (a * w - rhs).norm() > 1e-8) return {};

  std::vector<std::pair<int, double>> out;
  for (Eigen::Index c = 0; c < m; ++c) out.emplace_back(support[static_cast<std::size_t>(c)], w(c));
  return out;
}

EntropyEstimate entropy_weighted(const Sample& sample, int k_max, const EntropyOptions& options) {
  if (k_max < 1 || k_max > sample.n() - 1) {
    throw ValidationError("k_max=" + std::to_string(k_max) + " must lie in [1, n-1]");
  }
  const int d = static_cast<int>(sample.p());
  if (d <= 3 || k_max == 1) {
    auto e = entropy_kl(sample, k_max, options);
    e.estimator = "weighted";
    return e;
  }
  auto weights = bias_cancelling_weights(d, k_max);
  if (weights.empty()) {
    auto e = entropy_kl(sample, k_max, options);
    e.estimator = "weighted";
    e.fallback = true;
    return e;
  }
  const Prepared prep = prepare(sample, options);
  const Matrix table = neighbor_table(prep.x, k_max, options.threads);
  double h = 0.0;
  for (const auto& [j, w] : weights) h += w * kl_estimate(table, j, sample.p());
  auto e = finish(h + prep.log_jacobian, k_max, sample, "weighted");
  e.weights = std::move(weights);
  return e;
}

}  // namespace modelproj
