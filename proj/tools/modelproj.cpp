// modelproj command line tool.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "modelproj/error.hpp"
#include "modelproj/io.hpp"

namespace fs = std::filesystem;
using namespace modelproj;

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed_override;
  int threads = 1;
  bool no_timestamp = false;
};

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
}

std::optional<RunConfig> maybe_config(const Globals& g) {
  if (g.config.empty()) return std::nullopt;
  return parse_config_file(g.config);
}

RunConfig require_config(const Globals& g, const char* command) {
  if (g.config.empty()) throw ValidationError(std::string(command) + " needs --config");
  RunConfig c = parse_config_file(g.config);
  if (g.seed_override) {
    c.seeds.data = *g.seed_override;
    c.benchmark.seed = *g.seed_override;
  }
  return c;
}

fs::path out_dir(const Globals& g, const RunConfig& c) {
  return g.out.empty() ? fs::path(c.output_dir) : fs::path(g.out);
}

// The embedding and the fits file must describe the same models in the same order.
void check_names(const Embedding& e, const std::vector<FitRecord>& fits) {
  if (fits.size() != e.names.size()) {
    throw ValidationError("embedding has " + std::to_string(e.names.size()) +
                          " models but the fits file has " + std::to_string(fits.size()));
  }
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (fits[i].name != e.names[i]) {
      throw ValidationError("model " + std::to_string(i) + " is '" + e.names[i] +
                            "' in the embedding but '" + fits[i].name + "' in the fits file");
    }
  }
}

AverageResult average_of(const Embedding& e, const std::vector<FitRecord>& fits) {
  Vector aics(static_cast<Eigen::Index>(fits.size()));
  for (std::size_t i = 0; i < fits.size(); ++i) aics(static_cast<Eigen::Index>(i)) = fits[i].aic;
  return model_average_location(e.coords, akaike_weights(aics));
}

void write_pipeline(const PipelineResult& p, const RunConfig& c, const fs::path& dir,
                    bool timestamp) {
  write_text_file(dir / "config.json", dump_json(to_json(c)));
  write_sample_csv(dir / "sample.csv", p.sample);
  write_text_file(dir / "fits.json", dump_json(fits_json(p.fits)));
  write_text_file(dir / "divergence.csv", matrix_to_csv(p.divergence.values, p.divergence.names));
  write_text_file(dir / "embedding.json",
                  dump_json(to_json(p.embedding, p.divergence.asymmetry())));
  write_text_file(dir / "entropy.json", dump_json(to_json(p.entropy)));
  write_text_file(dir / "projection.json",
                  dump_json(to_json(p.projection, p.embedding.names, &p.average)));
  write_text_file(dir / "report.json", dump_json(pipeline_json(p)));
  write_text_file(dir / "model_space.svg", model_space_svg(p, timestamp));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model projection in a KL-divergence model space"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output file, or directory for pipeline/bench-sgg/deletion");
  app.add_option("--seed-override", g.seed_override,
                 "replace the seed of the random source the subcommand uses");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--no-timestamp", g.no_timestamp, "omit the timestamp comment from SVG output");

  // fit
  std::string fit_sample;
  auto* fit = app.add_subcommand("fit", "fit the candidate models to a sample");
  fit->add_option("--sample", fit_sample, "sample CSV; simulated from the config when omitted")
      ->check(CLI::ExistingFile);

  // divergence
  std::string div_fits;
  auto* div = app.add_subcommand("divergence", "pairwise KL divergences between fitted models");
  div->add_option("--fits", div_fits, "fits JSON from `fit`")->required()->check(CLI::ExistingFile);

  // embed
  std::string emb_matrix;
  auto* emb = app.add_subcommand("embed", "non-metric MDS of a divergence matrix");
  emb->add_option("--matrix", emb_matrix, "divergence CSV")->required()->check(CLI::ExistingFile);

  // entropy
  std::string ent_sample;
  std::optional<std::string> ent_estimator;
  std::optional<int> ent_k;
  bool ent_jitter = false;
  bool ent_standardize = false;
  auto* ent = app.add_subcommand("entropy", "nonparametric Sgg estimate of a sample");
  ent->add_option("--sample", ent_sample, "sample CSV")->required()->check(CLI::ExistingFile);
  ent->add_option("--estimator", ent_estimator, "kl or weighted")
      ->check(CLI::IsMember({"kl", "weighted"}));
  ent->add_option("--k", ent_k, "neighbor order (k_max for weighted)")->check(CLI::PositiveNumber);
  ent->add_flag("--jitter", ent_jitter, "break exact ties with a tiny fixed perturbation");
  ent->add_flag("--standardize", ent_standardize, "rescale columns to unit variance first");

  // project
  std::string prj_embedding;
  std::string prj_fits;
  std::string prj_entropy;
  std::optional<double> prj_sgg;
  auto* prj = app.add_subcommand("project", "locate the generating process in the model space");
  prj->add_option("--embedding", prj_embedding, "embedding JSON")->required()->check(CLI::ExistingFile);
  prj->add_option("--fits", prj_fits, "fits JSON (sgf_hat and aic per model)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* prj_ent_opt =
      prj->add_option("--entropy", prj_entropy, "entropy JSON")->check(CLI::ExistingFile);
  auto* prj_sgg_opt = prj->add_option("--sgg", prj_sgg, "Sgg value");
  prj_ent_opt->excludes(prj_sgg_opt);

  // average
  std::string avg_embedding;
  std::string avg_fits;
  auto* avg = app.add_subcommand("average", "Akaike-weighted average location");
  avg->add_option("--embedding", avg_embedding, "embedding JSON")->required()->check(CLI::ExistingFile);
  avg->add_option("--fits", avg_fits, "fits JSON")->required()->check(CLI::ExistingFile);

  auto* pipe = app.add_subcommand("pipeline", "simulate, fit, embed and project end to end");

  // bench-sgg
  std::optional<int> bench_replicates;
  std::optional<std::string> bench_estimator;
  std::optional<int> bench_k;
  std::vector<Eigen::Index> bench_n;
  auto* bench = app.add_subcommand("bench-sgg", "Sgg estimator benchmark on N(mu 1, I)");
  bench->add_option("--replicates", bench_replicates)->check(CLI::PositiveNumber);
  bench->add_option("--estimator", bench_estimator)->check(CLI::IsMember({"kl", "weighted"}));
  bench->add_option("--k", bench_k)->check(CLI::PositiveNumber);
  bench->add_option("--n", bench_n, "sample sizes");

  // deletion
  std::optional<std::string> del_direction;
  std::optional<int> del_steps;
  auto* del = app.add_subcommand("deletion", "sequential deletion of models along NMDS axis 1");
  del->add_option("--direction", del_direction)->check(CLI::IsMember({"left", "right"}));
  del->add_option("--steps", del_steps)->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (fit->parsed()) {
      const RunConfig c = require_config(g, "fit");
      const Sample s = fit_sample.empty() ? c.simulate(c.seeds.data) : read_sample_csv(fit_sample);
      emit(g.out, dump_json(fits_json(fit_all(c.candidates, s, g.threads))));

    } else if (div->parsed()) {
      const auto records = fit_records_from_json(read_json_file(div_fits));
      std::vector<GaussianModel> models;
      std::vector<std::string> names;
      for (const auto& r : records) {
        if (!r.predictive) {
          throw ValidationError("fits file entry '" + r.name + "' has no predictive model");
        }
        models.push_back(*r.predictive);
        names.push_back(r.name);
      }
      const DivergenceMatrix dm = divergence_matrix(models, names);
      emit(g.out, matrix_to_csv(dm.values, dm.names));

    } else if (emb->parsed()) {
      const auto config = maybe_config(g);
      NmdsOptions no;
      if (config) {
        no.dim = config->nmds.dim;
        no.restarts = config->nmds.restarts;
        no.max_iterations = config->nmds.max_iterations;
        no.relative_tolerance = config->nmds.relative_tolerance;
        no.seed = config->seeds.nmds;
      }
      if (g.seed_override) {
        no.seed = *g.seed_override;
      } else if (!config) {
        throw ValidationError("embed needs a seed: pass --config or --seed-override");
      }
      no.threads = g.threads;
      const DivergenceMatrix dm = divergence_from_csv(read_text_file(emb_matrix), emb_matrix);
      const Embedding e = nmds(dissimilarities(dm), no, dm.names);
      emit(g.out, dump_json(to_json(e, dm.asymmetry())));

    } else if (ent->parsed()) {
      EntropySettings es;
      if (const auto config = maybe_config(g)) es = config->entropy;
      if (ent_estimator) {
        es.estimator = *ent_estimator;
        if (!ent_k) es.k = 0;  // estimator default below
      }
      if (ent_k) es.k = *ent_k;
      es.jitter = es.jitter || ent_jitter;
      es.standardize = es.standardize || ent_standardize;
      const Sample s = read_sample_csv(ent_sample);
      if (es.k == 0) es.k = es.estimator == "kl" ? 1 : default_k_max(static_cast<int>(s.p()), s.n());
      emit(g.out, dump_json(to_json(estimate_entropy(s, es, g.threads))));

    } else if (prj->parsed()) {
      const auto config = maybe_config(g);
      ProjectionOptions po;
      if (config) {
        po.seed = config->seeds.projection;
        po.quasi_random_starts = config->projection.quasi_random_starts;
        po.max_iterations = config->projection.max_iterations;
        po.gradient_tolerance = config->projection.gradient_tolerance;
      }
      if (g.seed_override) {
        po.seed = *g.seed_override;
      } else if (!config) {
        throw ValidationError("project needs a seed: pass --config or --seed-override");
      }
      po.threads = g.threads;
      double sgg = 0.0;
      if (prj_sgg) {
        sgg = *prj_sgg;
      } else if (!prj_entropy.empty()) {
        const auto j = read_json_file(prj_entropy);
        if (!j.contains("sgg_hat") || !j.at("sgg_hat").is_number()) {
          throw ValidationError(prj_entropy + ": missing numeric 'sgg_hat'");
        }
        sgg = j.at("sgg_hat").get<double>();
      } else {
        throw ValidationError("project needs --entropy or --sgg");
      }
      const Embedding e = embedding_from_json(read_json_file(prj_embedding));
      const auto fits = fit_records_from_json(read_json_file(prj_fits));
      check_names(e, fits);
      Vector sgf(e.coords.rows());
      for (std::size_t i = 0; i < fits.size(); ++i) sgf(static_cast<Eigen::Index>(i)) = fits[i].sgf_hat;
      const AverageResult a = average_of(e, fits);
      po.average_start = a.location;
      const ProjectionResult p = solve_projection(sgf, e.coords, sgg, po);
      emit(g.out, dump_json(to_json(p, e.names, &a)));

    } else if (avg->parsed()) {
      const Embedding e = embedding_from_json(read_json_file(avg_embedding));
      const auto fits = fit_records_from_json(read_json_file(avg_fits));
      check_names(e, fits);
      const AverageResult a = average_of(e, fits);
      ordered_json weights = ordered_json::object();
      for (std::size_t i = 0; i < fits.size(); ++i) {
        weights[fits[i].name] = a.weights(static_cast<Eigen::Index>(i));
      }
      emit(g.out, dump_json({{"weights", weights}, {"location", vector_json(a.location)}}));

    } else if (pipe->parsed()) {
      const RunConfig c = require_config(g, "pipeline");
      const PipelineResult p = run_pipeline(c, g.threads);
      const fs::path dir = out_dir(g, c);
      write_pipeline(p, c, dir, !g.no_timestamp);
      std::cout << dump_json(to_json(p.report));

    } else if (bench->parsed()) {
      RunConfig c = g.config.empty() ? RunConfig{} : require_config(g, "bench-sgg");
      BenchmarkSettings bs = g.config.empty() ? BenchmarkSettings{} : c.benchmark;
      if (g.config.empty()) {
        bs.seed = g.seed_override.value_or(default_config().seeds.data);
        c.output_dir = "out";
      }
      if (bench_replicates) bs.replicates = *bench_replicates;
      if (bench_estimator) bs.estimator = *bench_estimator;
      if (bench_k) bs.k = *bench_k;
      if (!bench_n.empty()) bs.n_list = bench_n;
      const BenchmarkReport r = sgg_benchmark(bs, g.threads);
      const fs::path dir = out_dir(g, c);
      write_text_file(dir / "bench_sgg.json", dump_json(to_json(r)));
      write_text_file(dir / "bench_sgg_replicates.csv", benchmark_replicates_csv(r));
      std::cout << dump_json(to_json(r));

    } else if (del->parsed()) {
      RunConfig c = require_config(g, "deletion");
      if (del_steps) c.deletion.steps = *del_steps;
      if (del_direction) c.deletion.direction = *del_direction;
      const DeletionResult d = deletion_experiment(c, parse_direction(c.deletion.direction), g.threads);
      const fs::path dir = out_dir(g, c);
      ordered_json steps = ordered_json::array();
      for (const auto& s : d.sweep) steps.push_back(to_json(s, d.pipeline.embedding.names));
      const ordered_json summary = {{"direction", c.deletion.direction},
                                    {"steps", c.deletion.steps},
                                    {"projection_displacement", d.projection_displacement},
                                    {"average_displacement", d.average_displacement},
                                    {"m_true", vector_json(d.pipeline.truth.m)}};
      ordered_json full = summary;
      full["sweep"] = steps;
      write_text_file(dir / "deletion.json", dump_json(full));
      write_text_file(dir / "deletion.csv", deletion_csv(d));
      std::cout << dump_json(summary);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
