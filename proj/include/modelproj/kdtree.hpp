#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace modelproj {

// Exact k-d tree over the rows of a point matrix. Queries return squared
// Euclidean distances computed coordinate by coordinate in column order, so a
// brute-force scan using the same summation produces bit-identical values.
class KdTree {
 public:
  explicit KdTree(const Eigen::MatrixXd& points, std::size_t leaf_size = 16);

  // Sorted squared distances from point `i` to its k nearest other points.
  std::vector<double> nearest_squared(std::size_t i, std::size_t k) const;

  std::size_t size() const { return n_; }
  std::size_t dim() const { return d_; }

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t axis = 0;
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  const double* row(std::size_t i) const { return coords_.data() + i * d_; }

  std::size_t n_;
  std::size_t d_;
  std::size_t leaf_size_;
  std::vector<double> coords_;  // row-major copy
  std::vector<std::size_t> index_;
  std::vector<Node> nodes_;
};

double squared_distance(const double* a, const double* b, std::size_t d);

}  // namespace modelproj
