#pragma once

#include <string>
#include <utility>
#include <vector>

#include "modelproj/distributions.hpp"

namespace modelproj {

// Digamma via upward recurrence to x >= 6 and a six-term asymptotic series.
// Absolute error below 1e-10 for x > 0.
double digamma(double x);

// ln of the volume of the unit ball in R^d.
double log_unit_ball_volume(int d);

struct EntropyOptions {
  bool jitter = false;       // deterministic jitter of 1e-9 * data scale
  bool standardize = false;  // estimate on unit-variance columns, then correct back
  int threads = 1;
};

// Nonparametric estimate of the differential entropy H and of Sgg = -H.
struct EntropyEstimate {
  double sgg_hat = 0.0;
  double h_hat = 0.0;
  int k = 1;  // neighbor order (k_max for the weighted estimator)
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  std::string estimator = "kl";
  bool fallback = false;                    // weighted system infeasible
  std::vector<std::pair<int, double>> weights;  // (neighbor order, weight)
};

// Distance from each row to its k-th nearest other row (exact). k-d tree for
// n >= 64, direct scan below. Throws NumericalError if any distance is zero.
std::vector<double> knn_distances(const Sample& sample, int k, int threads = 1);

// Kozachenko-Leonenko: H = psi(n) - psi(k) + ln V_d + (d/n) sum ln rho_k.
EntropyEstimate entropy_kl(const Sample& sample, int k = 1, const EntropyOptions& options = {});

// Weighted combination of the k = 1..k_max estimates whose weights sum to one
// and cancel the leading floor(d/4) bias terms. Reduces to entropy_kl with
// k = k_max when d <= 3 or k_max = 1.
EntropyEstimate entropy_weighted(const Sample& sample, int k_max,
                                 const EntropyOptions& options = {});

int default_k_max(Eigen::Index d, Eigen::Index n);

// Weights on neighbor orders for the weighted estimator; empty if the
// constraint system cannot be satisfied with the available orders.
std::vector<std::pair<int, double>> bias_cancelling_weights(int d, int k_max);

}  // namespace modelproj
