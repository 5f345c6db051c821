#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "modelproj/experiments.hpp"

namespace modelproj {

using nlohmann::ordered_json;

// Shortest decimal string that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& text, const std::string& context);

// CSV with a header row of names, LF line endings.
Sample read_sample_csv(const std::filesystem::path& path);
void write_sample_csv(const std::filesystem::path& path, const Sample& sample);
std::string sample_to_csv(const Sample& sample);
Sample sample_from_csv(const std::string& text, const std::string& source = "<string>");

// Square matrix with a header row of model names.
std::string matrix_to_csv(const Matrix& values, const std::vector<std::string>& names);
DivergenceMatrix divergence_from_csv(const std::string& text, const std::string& source = "<string>");

ordered_json vector_json(const Vector& v);
Vector vector_from_json(const ordered_json& j, const std::string& context);
ordered_json matrix_json(const Matrix& m);
Matrix matrix_from_json(const ordered_json& j, const std::string& context);

// Fitted summary {name, loglik, k, n, aic, sgf_hat} plus edges and the
// predictive Gaussian so a later stage can rebuild divergences.
ordered_json to_json(const FittedModel& fm);
ordered_json fits_json(const std::vector<FittedModel>& fits);

// What later stages need from a fitted-models file.
struct FitRecord {
  std::string name;
  double loglik = 0.0;
  int k = 0;
  Eigen::Index n = 0;
  double aic = 0.0;
  double sgf_hat = 0.0;
  std::optional<GaussianModel> predictive;
};
std::vector<FitRecord> fit_records_from_json(const ordered_json& j);

ordered_json to_json(const Embedding& e, double asymmetry = 0.0);
Embedding embedding_from_json(const ordered_json& j);

ordered_json to_json(const EntropyEstimate& e);
ordered_json to_json(const AverageResult& a);
ordered_json to_json(const ProjectionResult& p, const std::vector<std::string>& names,
                     const AverageResult* average = nullptr);
ordered_json to_json(const BenchmarkReport& r);
std::string benchmark_replicates_csv(const BenchmarkReport& r);
ordered_json to_json(const PipelineReport& r);
// Summary report plus the exact-input projection it is compared against.
ordered_json pipeline_json(const PipelineResult& p);
ordered_json to_json(const SweepStep& s, const std::vector<std::string>& names);
std::string deletion_csv(const DeletionResult& d);

// Scatter of the model space: candidates shaded by delta AIC, the estimated
// projection m, the true projection M and the model average a.
std::string model_space_svg(const PipelineResult& p, bool timestamp);

ordered_json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
// Pretty JSON with two-space indent and a trailing newline.
std::string dump_json(const ordered_json& j);

}  // namespace modelproj
