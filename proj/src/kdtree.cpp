#include "modelproj/kdtree.hpp"

#include <algorithm>
#include <queue>

#include "modelproj/error.hpp"

namespace modelproj {

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

KdTree::KdTree(const Eigen::MatrixXd& points, std::size_t leaf_size)
    : n_(static_cast<std::size_t>(points.rows())),
      d_(static_cast<std::size_t>(points.cols())),
      leaf_size_(std::max<std::size_t>(leaf_size, 1)),
      coords_(n_ * d_),
      index_(n_) {
  if (n_ == 0 || d_ == 0) throw ValidationError("k-d tree needs a non-empty point set");
  for (std::size_t i = 0; i < n_; ++i) {
    index_[i] = i;
    for (std::size_t j = 0; j < d_; ++j) {
      coords_[i * d_ + j] = points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  nodes_.reserve(2 * n_ / leaf_size_ + 1);
  build(0, n_);
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  // Split on the axis of largest spread at the median.
  std::size_t axis = 0;
  double best_spread = -1.0;
  for (std::size_t j = 0; j < d_; ++j) {
    double lo = row(index_[begin])[j];
    double hi = lo;
    for (std::size_t t = begin + 1; t < end; ++t) {
      const double v = row(index_[t])[j];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      axis = j;
    }
  }
  if (best_spread <= 0.0) return id;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                   index_.begin() + static_cast<std::ptrdiff_t>(mid),
                   index_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) { return row(a)[axis] < row(b)[axis]; });
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = row(index_[mid])[axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

std::vector<double> KdTree::nearest_squared(std::size_t i, std::size_t k) const {
  if (k == 0 || k >= n_) throw ValidationError("neighbor order must satisfy 1 <= k <= n-1");
  const double* q = row(i);
  std::priority_queue<double> best;  // max-heap of the k smallest so far

  auto visit = [&](auto&& self, int node_id) -> void {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.left < 0) {
      for (std::size_t t = node.begin; t < node.end; ++t) {
        const std::size_t other = index_[t];
        if (other == i) continue;
        const double d2 = squared_distance(q, row(other), d_);
        if (best.size() < k) {
          best.push(d2);
        } else if (d2 < best.top()) {
          best.pop();
          best.push(d2);
        }
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    if (best.size() < k || diff * diff <= best.top()) self(self, far);
  };
  visit(visit, 0);

  std::vector<double> out(best.size());
  for (std::size_t t = out.size(); t-- > 0;) {
    out[t] = best.top();
    best.pop();
  }
  return out;
}

}  // namespace modelproj
