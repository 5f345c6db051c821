#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "modelproj/error.hpp"
#include "modelproj/io.hpp"

namespace py = pybind11;
using namespace modelproj;

namespace {

GaussianModel gaussian(const Vector& mean, const Matrix& cov) { return GaussianModel(mean, cov); }

py::dict embedding_dict(const Embedding& e) {
  py::dict d;
  d["coords"] = e.coords;
  d["stress"] = e.stress;
  d["scale"] = e.scale;
  d["converged"] = e.converged;
  d["restarts_used"] = e.restarts_used;
  d["best_restart"] = e.best_restart;
  d["padded"] = e.padded;
  return d;
}

py::dict projection_dict(const ProjectionResult& p) {
  py::dict d;
  d["m"] = p.m;
  d["h2"] = p.h2;
  d["h2_unclamped"] = p.h2_unclamped;
  d["sgg_used"] = p.sgg_used;
  d["kl_to_g"] = p.kl_to_g;
  d["objective_value"] = p.objective_value;
  d["clamped"] = p.clamped;
  d["reduced"] = p.reduced;
  d["converged"] = p.converged;
  return d;
}

RunConfig config_from_text(const std::optional<std::string>& text) {
  if (!text) return default_config();
  return parse_config(ordered_json::parse(*text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Model projection in a KL-divergence model space";

  static py::exception<ValidationError> validation(m, "ValidationError", PyExc_ValueError);
  static py::exception<NumericalError> numerical(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(validation, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical, e.what());
    } catch (const nlohmann::json::exception& e) {
      py::set_error(validation, e.what());
    }
  });

  m.def("kl_gaussian",
        [](const Vector& mean_a, const Matrix& cov_a, const Vector& mean_b, const Matrix& cov_b) {
          return kl_gaussian(gaussian(mean_a, cov_a), gaussian(mean_b, cov_b));
        },
        py::arg("mean_a"), py::arg("cov_a"), py::arg("mean_b"), py::arg("cov_b"));
  m.def("entropy_gaussian",
        [](const Vector& mean, const Matrix& cov) { return entropy_gaussian(gaussian(mean, cov)); },
        py::arg("mean"), py::arg("cov"), "Sgg of a Gaussian, i.e. minus its differential entropy");

  m.def("estimate_sgg",
        [](const Matrix& data, const std::string& estimator, int k, bool jitter, bool standardize,
           int threads) {
          EntropySettings es;
          es.estimator = estimator;
          es.k = k;
          es.jitter = jitter;
          es.standardize = standardize;
          const EntropyEstimate e = estimate_entropy(Sample(data), es, threads);
          py::dict d;
          d["sgg_hat"] = e.sgg_hat;
          d["h_hat"] = e.h_hat;
          d["k"] = e.k;
          d["fallback"] = e.fallback;
          d["weights"] = e.weights;
          return d;
        },
        py::arg("data"), py::arg("estimator") = "kl", py::arg("k") = 1, py::arg("jitter") = false,
        py::arg("standardize") = false, py::arg("threads") = 1);

  m.def("divergence_matrix",
        [](const std::vector<std::pair<Vector, Matrix>>& models) {
          std::vector<GaussianModel> gs;
          std::vector<std::string> names;
          for (const auto& [mu, cov] : models) {
            gs.push_back(gaussian(mu, cov));
            names.push_back("f" + std::to_string(names.size() + 1));
          }
          return divergence_matrix(gs, names).values;
        },
        py::arg("models"), "KL(f_i || f_j) for a list of (mean, cov) pairs");
  m.def("dissimilarities",
        [](const Matrix& kl) {
          DivergenceMatrix dm{kl, {}};
          for (Eigen::Index i = 0; i < kl.rows(); ++i) dm.names.push_back("f" + std::to_string(i + 1));
          dm.validate();
          return dissimilarities(dm);
        },
        py::arg("kl"));

  m.def("nmds",
        [](const Matrix& delta, int dim, int restarts, int max_iterations, std::uint64_t seed, int threads) {
          NmdsOptions o;
          o.dim = dim;
          o.restarts = restarts;
          o.max_iterations = max_iterations;
          o.seed = seed;
          o.threads = threads;
          return embedding_dict(nmds(delta, o));
        },
        py::arg("delta"), py::arg("dim") = 2, py::arg("restarts") = 8, py::arg("max_iterations") = 500,
        py::arg("seed") = 0, py::arg("threads") = 1);
  m.def("kruskal_stress", &kruskal_stress, py::arg("delta"), py::arg("coords"));
  m.def("isotonic_regression", py::overload_cast<const Vector&, const Vector&>(&isotonic_regression),
        py::arg("values"), py::arg("weights"));

  m.def("akaike_weights", &akaike_weights, py::arg("aics"));
  m.def("model_average_location",
        [](const Matrix& coords, const Vector& weights) { return model_average_location(coords, weights).location; },
        py::arg("coords"), py::arg("weights"));
  m.def("solve_projection",
        [](const Vector& sgf_hats, const Matrix& coords, double sgg_hat, std::uint64_t seed,
           std::optional<Vector> average_start) {
          ProjectionOptions o;
          o.seed = seed;
          o.average_start = std::move(average_start);
          return projection_dict(solve_projection(sgf_hats, coords, sgg_hat, o));
        },
        py::arg("sgf_hats"), py::arg("coords"), py::arg("sgg_hat"), py::arg("seed") = 0,
        py::arg("average_start") = py::none());

  m.def("default_config", [] { return dump_json(to_json(default_config())); },
        "Default run configuration as JSON text");
  m.def("run_pipeline",
        [](const std::optional<std::string>& config, int threads) {
          const RunConfig cfg = config_from_text(config);
          py::gil_scoped_release release;
          return dump_json(pipeline_json(run_pipeline(cfg, threads)));
        },
        py::arg("config") = py::none(), py::arg("threads") = 1,
        "Runs the full pipeline; returns the report as JSON text");
}
