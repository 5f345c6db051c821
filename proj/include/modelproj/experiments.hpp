#pragma once

#include <string>
#include <vector>

#include "modelproj/config.hpp"
#include "modelproj/entropy.hpp"
#include "modelproj/mds.hpp"
#include "modelproj/projection.hpp"

namespace modelproj {

struct SummaryStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

// Quartiles by linear interpolation between order statistics.
SummaryStats summarize(std::vector<double> values);

struct BenchmarkCell {
  Eigen::Index n = 0;
  int k = 1;
  std::vector<double> ratios;  // estimated entropy / true entropy, one per replicate
  SummaryStats summary;
};

struct BenchmarkReport {
  int p = 0;
  double mu = 0.0;
  double true_entropy = 0.0;  // differential entropy H = -Sgg
  int replicates = 0;
  std::string estimator;
  std::uint64_t seed = 0;
  std::vector<BenchmarkCell> cells;
};

// Draws `replicates` samples from N(mu * 1, I_p) per sample size and records
// the ratio of the nonparametric entropy estimate to the closed form.
BenchmarkReport sgg_benchmark(const BenchmarkSettings& settings, int threads = 1);

struct TrueProjection {
  Vector m;       // M
  double h2 = 0.0;
  double sgg = 0.0;
  Vector kl;      // exact KL(g, f_i)
  ProjectionResult solution;
};

// Solves the projection system with exact inputs: Sgf_i = Sgg - KL(g, f_i).
TrueProjection true_projection(const GaussianModel& g, const std::vector<FittedModel>& models,
                               const Embedding& e, const ProjectionOptions& options = {});

struct PipelineReport {
  double stress = 0.0;
  Vector m_hat;
  Vector average_location;
  Vector m_true;
  double h2_hat = 0.0;
  double h2_true = 0.0;
  double sgg_hat = 0.0;
  double sgg_true = 0.0;
  double distance_projection = 0.0;  // |m_hat - M|
  double distance_average = 0.0;     // |average - M|
};

struct PipelineResult {
  Sample sample;
  std::vector<FittedModel> fits;
  Vector aics;
  Vector sgf_hats;
  DivergenceMatrix divergence;
  Matrix delta;
  Embedding embedding;
  EntropyEstimate entropy;
  ProjectionResult projection;
  AverageResult average;
  TrueProjection truth;
  PipelineReport report;
};

EntropyEstimate estimate_entropy(const Sample& sample, const EntropySettings& settings,
                                 int threads = 1);

// simulate -> fit -> AIC, Sgf -> divergences -> NMDS -> Sgg -> projection ->
// average -> true projection. Errors carry the failing stage in the message.
PipelineResult run_pipeline(const RunConfig& config, int threads = 1);

struct DeletionRow {
  int step = 0;
  std::string removed;
  Vector m_hat;
  Vector average;
  double distance_projection = 0.0;
  double distance_average = 0.0;
};

struct DeletionResult {
  PipelineResult pipeline;
  std::vector<SweepStep> sweep;
  std::vector<DeletionRow> rows;
  double projection_displacement = 0.0;  // summed step-to-step movement of m_hat
  double average_displacement = 0.0;
};

DeletionResult deletion_experiment(const RunConfig& config, DeletionDirection direction,
                                   int threads = 1);

DeletionDirection parse_direction(const std::string& s);

}  // namespace modelproj
