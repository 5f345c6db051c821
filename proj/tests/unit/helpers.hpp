#pragma once

#include <cmath>
#include <utility>

#include "modelproj/distributions.hpp"
#include "modelproj/random.hpp"

namespace testing {

using modelproj::Matrix;
using modelproj::Vector;

inline Matrix random_matrix(modelproj::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

inline Matrix random_spd(modelproj::Rng& rng, Eigen::Index p) {
  const Matrix a = random_matrix(rng, p, p);
  return a * a.transpose() / static_cast<double>(p) + 0.5 * Matrix::Identity(p, p);
}

inline modelproj::GaussianModel random_gaussian(modelproj::Rng& rng, Eigen::Index p) {
  return {random_matrix(rng, p, 1).col(0), random_spd(rng, p)};
}

// Mean and standard error of a set of values.
inline std::pair<double, double> mean_se(const Vector& v) {
  const double m = v.mean();
  const double var = (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
  return {m, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace testing
