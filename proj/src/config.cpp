#include "modelproj/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "modelproj/entropy.hpp"
#include "modelproj/error.hpp"

namespace modelproj {

using nlohmann::ordered_json;

namespace {

// Walks one JSON object, tracking which keys were consumed so that leftovers
// can be reported.
class Fields {
 public:
  Fields(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  bool has(const std::string& key) {
    allowed_.insert(key);
    return j_.contains(key);
  }

  const ordered_json& at(const std::string& key) {
    if (!has(key)) fail(where(key), "missing required key");
    return j_.at(key);
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ValidationError("config " + where + ": " + what);
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? as_number(at(key), where(key)) : fallback;
  }
  long long integer(const std::string& key, long long fallback, long long min) {
    return has(key) ? as_integer(at(key), where(key), min) : fallback;
  }
  std::uint64_t seed(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(where(key), "expected a non-negative integer seed");
    }
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_boolean()) fail(where(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback,
                     const std::set<std::string>& choices) {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_string()) fail(where(key), "expected a string");
    auto s = v.get<std::string>();
    if (!choices.empty() && !choices.count(s)) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      fail(where(key), "expected one of " + list + ", got '" + s + "'");
    }
    return s;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!allowed_.count(it.key())) fail(where(it.key()), "unknown key");
    }
  }

  static double as_number(const ordered_json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(where, "expected a finite number");
    return x;
  }
  static long long as_integer(const ordered_json& v, const std::string& where, long long min) {
    if (!v.is_number_integer()) fail(where, "expected an integer");
    const auto x = v.get<long long>();
    if (x < min) fail(where, "must be at least " + std::to_string(min));
    return x;
  }
  static std::string as_string(const ordered_json& v, const std::string& where) {
    if (!v.is_string()) fail(where, "expected a string");
    return v.get<std::string>();
  }
  static const ordered_json& as_array(const ordered_json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array");
    return v;
  }

 private:
  const ordered_json& j_;
  std::string path_;
  std::set<std::string> allowed_;
};

std::vector<std::string> string_list(const ordered_json& v, const std::string& where) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < Fields::as_array(v, where).size(); ++i) {
    out.push_back(Fields::as_string(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<double> number_list(const ordered_json& v, const std::string& where) {
  std::vector<double> out;
  for (std::size_t i = 0; i < Fields::as_array(v, where).size(); ++i) {
    out.push_back(Fields::as_number(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

PathModel parse_path_model(const ordered_json& j, const std::string& path) {
  Fields f(j, path);
  PathModel pm;
  pm.variables = string_list(f.at("variables"), f.where("variables"));
  const auto& edges = Fields::as_array(f.at("edges"), f.where("edges"));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    Fields e(edges[i], f.where("edges") + "[" + std::to_string(i) + "]");
    pm.edges.push_back({Fields::as_string(e.at("source"), e.where("source")),
                        Fields::as_string(e.at("target"), e.where("target")),
                        Fields::as_number(e.at("coefficient"), e.where("coefficient"))});
    e.finish();
  }
  pm.noise_sd = number_list(f.at("noise_sd"), f.where("noise_sd"));
  pm.intercepts = f.has("intercepts") ? number_list(f.at("intercepts"), f.where("intercepts"))
                                      : std::vector<double>(pm.variables.size(), 0.0);
  f.finish();
  try {
    pm.validate();
  } catch (const ValidationError& e) {
    Fields::fail(path, e.what());
  }
  return pm;
}

NamedGaussian parse_gaussian(const ordered_json& j, const std::string& path) {
  Fields f(j, path);
  auto variables = string_list(f.at("variables"), f.where("variables"));
  const auto mean = number_list(f.at("mean"), f.where("mean"));
  const auto& rows = Fields::as_array(f.at("cov"), f.where("cov"));
  const auto p = static_cast<Eigen::Index>(mean.size());
  if (static_cast<Eigen::Index>(variables.size()) != p) {
    Fields::fail(f.where("variables"), "must have one name per mean entry");
  }
  if (static_cast<Eigen::Index>(rows.size()) != p) Fields::fail(f.where("cov"), "must be p x p");
  Matrix cov(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto row = number_list(rows[static_cast<std::size_t>(i)],
                                 f.where("cov") + "[" + std::to_string(i) + "]");
    if (static_cast<Eigen::Index>(row.size()) != p) Fields::fail(f.where("cov"), "must be p x p");
    for (Eigen::Index c = 0; c < p; ++c) cov(i, c) = row[static_cast<std::size_t>(c)];
  }
  f.finish();
  try {
    return NamedGaussian{std::move(variables),
                         GaussianModel(Eigen::Map<const Vector>(mean.data(), p), cov)};
  } catch (const std::exception& e) {
    Fields::fail(path, e.what());
  }
}

ordered_json path_model_json(const PathModel& pm) {
  ordered_json edges = ordered_json::array();
  for (const auto& e : pm.edges) {
    edges.push_back({{"source", e.source}, {"target", e.target}, {"coefficient", e.coefficient}});
  }
  return {{"variables", pm.variables},
          {"edges", edges},
          {"noise_sd", pm.noise_sd},
          {"intercepts", pm.intercepts}};
}

ordered_json gaussian_json(const NamedGaussian& g) {
  ordered_json cov = ordered_json::array();
  for (Eigen::Index i = 0; i < g.model.dim(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(g.model.dim()));
    for (Eigen::Index c = 0; c < g.model.dim(); ++c) row[static_cast<std::size_t>(c)] = g.model.cov()(i, c);
    cov.push_back(row);
  }
  const Vector& mu = g.model.mean();
  return {{"variables", g.variables},
          {"mean", std::vector<double>(mu.data(), mu.data() + mu.size())},
          {"cov", cov}};
}

}  // namespace

const std::vector<std::string>& RunConfig::variables() const {
  if (const auto* pm = std::get_if<PathModel>(&generating)) return pm->variables;
  return std::get<NamedGaussian>(generating).variables;
}

GaussianModel RunConfig::generating_gaussian() const {
  if (const auto* pm = std::get_if<PathModel>(&generating)) return reduce_path_model(*pm);
  return std::get<NamedGaussian>(generating).model;
}

Sample RunConfig::simulate(std::uint64_t seed) const {
  if (const auto* pm = std::get_if<PathModel>(&generating)) return simulate_path_model(*pm, n, seed);
  const auto& g = std::get<NamedGaussian>(generating);
  return sample(g.model, n, seed, g.variables);
}

RunConfig parse_config(const ordered_json& j) {
  Fields root(j, "");
  RunConfig cfg;

  {
    Fields gen(root.at("generating"), ".generating");
    const bool has_path = gen.has("path_model");
    const bool has_gauss = gen.has("gaussian");
    if (has_path == has_gauss) {
      Fields::fail(".generating", "give exactly one of 'path_model' or 'gaussian'");
    }
    if (has_path) {
      cfg.generating = parse_path_model(gen.at("path_model"), ".generating.path_model");
    } else {
      cfg.generating = parse_gaussian(gen.at("gaussian"), ".generating.gaussian");
    }
    gen.finish();
  }

  const auto& cands = Fields::as_array(root.at("candidates"), ".candidates");
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const std::string where = ".candidates[" + std::to_string(i) + "]";
    Fields c(cands[i], where);
    CandidateSpec spec;
    spec.name = Fields::as_string(c.at("name"), c.where("name"));
    const auto& edges = Fields::as_array(c.at("edges"), c.where("edges"));
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto pair = string_list(edges[e], c.where("edges") + "[" + std::to_string(e) + "]");
      if (pair.size() != 2) {
        Fields::fail(c.where("edges") + "[" + std::to_string(e) + "]", "expected [source, target]");
      }
      spec.edges.emplace_back(pair[0], pair[1]);
    }
    c.finish();
    cfg.candidates.push_back(std::move(spec));
  }
  try {
    validate_model_set(cfg.candidates, cfg.variables());
  } catch (const ValidationError& e) {
    Fields::fail(".candidates", e.what());
  }

  cfg.n = static_cast<Eigen::Index>(root.integer("n", 450, 2));

  {
    Fields s(root.at("seeds"), ".seeds");
    cfg.seeds.data = s.seed("data");
    cfg.seeds.nmds = s.seed("nmds");
    cfg.seeds.projection = s.seed("projection");
    s.finish();
  }

  if (root.has("nmds")) {
    Fields s(root.at("nmds"), ".nmds");
    cfg.nmds.dim = static_cast<int>(s.integer("dim", 2, 1));
    cfg.nmds.restarts = static_cast<int>(s.integer("restarts", 8, 1));
    cfg.nmds.max_iterations = static_cast<int>(s.integer("max_iterations", 500, 1));
    cfg.nmds.relative_tolerance = s.number("relative_tolerance", 1e-10);
    if (!(cfg.nmds.relative_tolerance >= 0.0)) {
      Fields::fail(".nmds.relative_tolerance", "must be non-negative");
    }
    s.finish();
  }
  const auto min_models = static_cast<std::size_t>(cfg.nmds.dim + 2);
  if (cfg.candidates.size() < min_models) {
    Fields::fail(".candidates", "need at least dim + 2 = " + std::to_string(min_models) +
                                    " candidates, got " + std::to_string(cfg.candidates.size()));
  }

  const auto d = static_cast<Eigen::Index>(cfg.variables().size());
  if (root.has("entropy")) {
    Fields s(root.at("entropy"), ".entropy");
    cfg.entropy.estimator = s.string("estimator", "kl", {"kl", "weighted"});
    const long long fallback =
        cfg.entropy.estimator == "kl" ? 1 : default_k_max(d, cfg.n);
    cfg.entropy.k = static_cast<int>(s.integer("k", fallback, 1));
    cfg.entropy.jitter = s.boolean("jitter", false);
    cfg.entropy.standardize = s.boolean("standardize", false);
    s.finish();
  }
  if (cfg.entropy.k > cfg.n - 1) Fields::fail(".entropy.k", "must be at most n - 1");

  if (root.has("projection")) {
    Fields s(root.at("projection"), ".projection");
    cfg.projection.quasi_random_starts = static_cast<int>(s.integer("quasi_random_starts", 16, 0));
    cfg.projection.max_iterations = static_cast<int>(s.integer("max_iterations", 1000, 1));
    cfg.projection.gradient_tolerance = s.number("gradient_tolerance", 1e-10);
    if (!(cfg.projection.gradient_tolerance > 0.0)) {
      Fields::fail(".projection.gradient_tolerance", "must be positive");
    }
    s.finish();
  }

  const int max_steps = static_cast<int>(cfg.candidates.size()) - (cfg.nmds.dim + 2);
  cfg.deletion.steps = max_steps;
  if (root.has("deletion")) {
    Fields s(root.at("deletion"), ".deletion");
    cfg.deletion.direction = s.string("direction", "left", {"left", "right"});
    cfg.deletion.steps = static_cast<int>(s.integer("steps", max_steps, 0));
    if (cfg.deletion.steps > max_steps) {
      Fields::fail(".deletion.steps", "at most " + std::to_string(max_steps) +
                                          " deletions keep the projection identifiable");
    }
    s.finish();
  }

  cfg.benchmark.seed = cfg.seeds.data;
  if (root.has("benchmark")) {
    Fields s(root.at("benchmark"), ".benchmark");
    cfg.benchmark.p = static_cast<int>(s.integer("p", 7, 1));
    cfg.benchmark.mu = s.number("mu", 10.0);
    if (s.has("n_list")) {
      cfg.benchmark.n_list.clear();
      const auto& list = Fields::as_array(s.at("n_list"), ".benchmark.n_list");
      if (list.empty()) Fields::fail(".benchmark.n_list", "must not be empty");
      for (std::size_t i = 0; i < list.size(); ++i) {
        cfg.benchmark.n_list.push_back(static_cast<Eigen::Index>(
            Fields::as_integer(list[i], ".benchmark.n_list[" + std::to_string(i) + "]", 2)));
      }
    }
    cfg.benchmark.replicates = static_cast<int>(s.integer("replicates", 2000, 1));
    cfg.benchmark.estimator = s.string("estimator", "weighted", {"kl", "weighted"});
    const long long k_fallback =
        cfg.benchmark.estimator == "kl" ? 1 : 3 * ((cfg.benchmark.p + 1) / 2);
    cfg.benchmark.k = static_cast<int>(s.integer("k", k_fallback, 1));
    cfg.benchmark.seed = s.has("seed") ? s.seed("seed") : cfg.seeds.data;
    s.finish();
  }

  if (root.has("output_dir")) {
    cfg.output_dir = Fields::as_string(root.at("output_dir"), ".output_dir");
  }
  root.finish();
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

ordered_json to_json(const RunConfig& cfg) {
  ordered_json j;
  if (const auto* pm = std::get_if<PathModel>(&cfg.generating)) {
    j["generating"] = {{"path_model", path_model_json(*pm)}};
  } else {
    j["generating"] = {{"gaussian", gaussian_json(std::get<NamedGaussian>(cfg.generating))}};
  }
  ordered_json cands = ordered_json::array();
  for (const auto& c : cfg.candidates) {
    ordered_json edges = ordered_json::array();
    for (const auto& [s, t] : c.edges) edges.push_back({s, t});
    cands.push_back({{"name", c.name}, {"edges", edges}});
  }
  j["candidates"] = cands;
  j["n"] = cfg.n;
  j["seeds"] = {{"data", cfg.seeds.data}, {"nmds", cfg.seeds.nmds}, {"projection", cfg.seeds.projection}};
  j["nmds"] = {{"dim", cfg.nmds.dim},
               {"restarts", cfg.nmds.restarts},
               {"max_iterations", cfg.nmds.max_iterations},
               {"relative_tolerance", cfg.nmds.relative_tolerance}};
  j["entropy"] = {{"estimator", cfg.entropy.estimator},
                  {"k", cfg.entropy.k},
                  {"jitter", cfg.entropy.jitter},
                  {"standardize", cfg.entropy.standardize}};
  j["projection"] = {{"quasi_random_starts", cfg.projection.quasi_random_starts},
                     {"max_iterations", cfg.projection.max_iterations},
                     {"gradient_tolerance", cfg.projection.gradient_tolerance}};
  j["deletion"] = {{"direction", cfg.deletion.direction}, {"steps", cfg.deletion.steps}};
  j["benchmark"] = {{"p", cfg.benchmark.p},
                    {"mu", cfg.benchmark.mu},
                    {"n_list", cfg.benchmark.n_list},
                    {"replicates", cfg.benchmark.replicates},
                    {"estimator", cfg.benchmark.estimator},
                    {"k", cfg.benchmark.k},
                    {"seed", cfg.benchmark.seed}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

RunConfig default_config() {
  PathModel pm;
  pm.variables = {"landscape", "fire", "cover", "heterogeneity", "abiotic", "richness"};
  pm.edges = {{"landscape", "heterogeneity", 0.45}, {"landscape", "abiotic", 0.55},
              {"landscape", "fire", 0.40},          {"fire", "cover", -0.45},
              {"heterogeneity", "richness", 0.40},  {"abiotic", "richness", 0.35},
              {"cover", "richness", 0.30}};
  // Residual scales chosen so every variable has unit marginal variance.
  pm.noise_sd = {1.0,
                 std::sqrt(1.0 - 0.40 * 0.40),
                 std::sqrt(1.0 - 0.45 * 0.45),
                 std::sqrt(1.0 - 0.45 * 0.45),
                 std::sqrt(1.0 - 0.55 * 0.55),
                 std::sqrt(1.0 - 0.40157)};
  pm.intercepts = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};

  using E = std::pair<std::string, std::string>;
  const E a{"landscape", "heterogeneity"};
  const E b{"landscape", "abiotic"};
  const E c{"landscape", "fire"};
  const E d{"fire", "cover"};
  const E e{"heterogeneity", "richness"};
  const E f{"abiotic", "richness"};
  const E g{"cover", "richness"};
  const E s1{"landscape", "richness"};
  const E s2{"fire", "richness"};
  const E s3{"landscape", "cover"};

  RunConfig cfg;
  cfg.generating = pm;
  // Two nested paths from the null model to the generating structure, adding
  // the true edges in opposite orders, then supersets with spurious edges.
  cfg.candidates = {
      {"m01_null", {}},
      {"m02", {a}},
      {"m03", {a, b}},
      {"m04", {a, b, c}},
      {"m05", {a, b, c, d}},
      {"m06", {a, b, c, d, e}},
      {"m07", {a, b, c, d, e, f}},
      {"m08_true", {a, b, c, d, e, f, g}},
      {"m09", {g}},
      {"m10", {g, f}},
      {"m11", {g, f, e}},
      {"m12", {g, f, e, d}},
      {"m13", {g, f, e, d, c}},
      {"m14", {g, f, e, d, c, b}},
      {"m15", {a, b, c, d, e, f, g, s1}},
      {"m16", {a, b, c, d, e, f, g, s2}},
      {"m17", {a, b, c, d, e, f, g, s3}},
      {"m18", {a, b, c, d, e, f, g, s1, s2}},
      {"m19", {a, b, c, d, e, f, g, s2, s3}},
      {"m20_full", {a, b, c, d, e, f, g, s1, s2, s3}},
  };
  cfg.n = 450;
  cfg.seeds = {1, 2, 3};
  cfg.entropy.estimator = "kl";
  cfg.entropy.k = 3;
  cfg.deletion.steps = static_cast<int>(cfg.candidates.size()) - (cfg.nmds.dim + 2);
  cfg.benchmark.seed = cfg.seeds.data;
  return cfg;
}

}  // namespace modelproj
