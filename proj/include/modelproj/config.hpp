#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "modelproj/distributions.hpp"
#include "modelproj/model_fit.hpp"

namespace modelproj {

struct NamedGaussian {
  std::vector<std::string> variables;
  GaussianModel model;

  bool operator==(const NamedGaussian&) const = default;
};

using GeneratingProcess = std::variant<PathModel, NamedGaussian>;

struct Seeds {
  std::uint64_t data = 0;
  std::uint64_t nmds = 0;
  std::uint64_t projection = 0;
  bool operator==(const Seeds&) const = default;
};

struct NmdsSettings {
  int dim = 2;
  int restarts = 8;
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
  bool operator==(const NmdsSettings&) const = default;
};

struct EntropySettings {
  std::string estimator = "kl";  // "kl" or "weighted"
  int k = 1;                     // neighbor order, or k_max for "weighted"
  bool jitter = false;
  bool standardize = false;
  bool operator==(const EntropySettings&) const = default;
};

struct ProjectionSettings {
  int quasi_random_starts = 16;
  int max_iterations = 1000;
  double gradient_tolerance = 1e-10;
  bool operator==(const ProjectionSettings&) const = default;
};

struct DeletionSettings {
  std::string direction = "left";  // "left" or "right"
  int steps = 0;                   // defaults to candidates - (dim + 2)
  bool operator==(const DeletionSettings&) const = default;
};

struct BenchmarkSettings {
  int p = 7;
  double mu = 10.0;
  std::vector<Eigen::Index> n_list{10, 25, 50, 75, 150};
  int replicates = 2000;
  std::string estimator = "weighted";
  int k = 12;  // per cell, clamped to n - 1
  std::uint64_t seed = 0;
  bool operator==(const BenchmarkSettings&) const = default;
};

struct RunConfig {
  GeneratingProcess generating;
  std::vector<CandidateSpec> candidates;
  Eigen::Index n = 450;
  Seeds seeds;
  NmdsSettings nmds;
  EntropySettings entropy;
  ProjectionSettings projection;
  DeletionSettings deletion;
  BenchmarkSettings benchmark;
  std::string output_dir = "out";

  bool operator==(const RunConfig&) const = default;

  const std::vector<std::string>& variables() const;
  // Exact distribution of the generating process.
  GaussianModel generating_gaussian() const;
  // Simulated data set of size n from the generating process.
  Sample simulate(std::uint64_t seed) const;
};

// Strict parse: unknown keys are errors, every default is filled in.
RunConfig parse_config(const nlohmann::ordered_json& j);
RunConfig parse_config_file(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& config);

// Six-variable fire/diversity path model with a 20-model candidate lattice.
RunConfig default_config();

}  // namespace modelproj
