#include "modelproj/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "modelproj/error.hpp"

namespace modelproj {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  const char* first = text.data() + b;
  if (b < e && *first == '+') ++first;
  double x = 0.0;
  const auto res = std::from_chars(first, text.data() + e, x);
  if (res.ec != std::errc() || res.ptr != text.data() + e || b == e) {
    throw ValidationError(context + ": '" + text + "' is not a number");
  }
  return x;
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split_fields(const std::string& line, const std::string& context) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw ValidationError(context + ": unterminated quoted field");
  out.push_back(std::move(field));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Header row plus numeric body.
std::pair<std::vector<std::string>, Matrix> parse_numeric_csv(const std::string& text,
                                                              const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ValidationError(source + ": empty CSV");
  auto header = split_fields(lines[0], source + ":1");
  const auto cols = static_cast<Eigen::Index>(header.size());
  Matrix body(static_cast<Eigen::Index>(lines.size() - 1), cols);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::string where = source + ":" + std::to_string(r + 1);
    const auto fields = split_fields(lines[r], where);
    if (static_cast<Eigen::Index>(fields.size()) != cols) {
      throw ValidationError(where + ": expected " + std::to_string(cols) + " fields, got " +
                            std::to_string(fields.size()));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      body(static_cast<Eigen::Index>(r - 1), c) =
          parse_double(fields[static_cast<std::size_t>(c)], where);
    }
  }
  return {std::move(header), std::move(body)};
}

std::string numeric_csv(const std::vector<std::string>& header, const Matrix& body) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + csv_field(header[c]);
  out += '\n';
  for (Eigen::Index r = 0; r < body.rows(); ++r) {
    for (Eigen::Index c = 0; c < body.cols(); ++c) out += (c ? "," : "") + format_double(body(r, c));
    out += '\n';
  }
  return out;
}

const ordered_json& field(const ordered_json& j, const std::string& key, const std::string& context) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(context + ": missing key '" + key + "'");
  }
  return j.at(key);
}

double number_field(const ordered_json& j, const std::string& key, const std::string& context) {
  const auto& v = field(j, key, context);
  if (!v.is_number()) throw ValidationError(context + "." + key + ": expected a number");
  return v.get<double>();
}

ordered_json named(const Vector& values, const std::vector<std::string>& names) {
  ordered_json j = ordered_json::object();
  for (Eigen::Index i = 0; i < values.size(); ++i) j[names[static_cast<std::size_t>(i)]] = values(i);
  return j;
}

}  // namespace

Sample sample_from_csv(const std::string& text, const std::string& source) {
  auto [header, body] = parse_numeric_csv(text, source);
  try {
    return Sample(std::move(body), std::move(header));
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

std::string sample_to_csv(const Sample& sample) { return numeric_csv(sample.names(), sample.data()); }

Sample read_sample_csv(const std::filesystem::path& path) {
  return sample_from_csv(read_text_file(path), path.string());
}

void write_sample_csv(const std::filesystem::path& path, const Sample& sample) {
  write_text_file(path, sample_to_csv(sample));
}

std::string matrix_to_csv(const Matrix& values, const std::vector<std::string>& names) {
  return numeric_csv(names, values);
}

DivergenceMatrix divergence_from_csv(const std::string& text, const std::string& source) {
  auto [header, body] = parse_numeric_csv(text, source);
  DivergenceMatrix dm{std::move(body), std::move(header)};
  try {
    dm.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return dm;
}

ordered_json vector_json(const Vector& v) {
  return ordered_json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const ordered_json& j, const std::string& context) {
  if (!j.is_array()) throw ValidationError(context + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(context + ": expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

Matrix matrix_from_json(const ordered_json& j, const std::string& context) {
  if (!j.is_array()) throw ValidationError(context + ": expected an array of rows");
  Matrix m;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = vector_from_json(j[r], context + "[" + std::to_string(r) + "]");
    if (r == 0) m.resize(static_cast<Eigen::Index>(j.size()), row.size());
    if (row.size() != m.cols()) throw ValidationError(context + ": ragged rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

ordered_json to_json(const FittedModel& fm) {
  ordered_json edges = ordered_json::array();
  for (const auto& e : fm.estimate.edges) {
    edges.push_back({{"source", e.source}, {"target", e.target}, {"coefficient", e.coefficient}});
  }
  return {{"name", fm.spec.name},
          {"loglik", fm.loglik},
          {"k", fm.k},
          {"n", fm.n},
          {"aic", aic(fm)},
          {"sgf_hat", sgf_hat(fm)},
          {"edges", edges},
          {"predictive",
           {{"variables", fm.estimate.variables},
            {"mean", vector_json(fm.predictive.mean())},
            {"cov", matrix_json(fm.predictive.cov())}}}};
}

ordered_json fits_json(const std::vector<FittedModel>& fits) {
  ordered_json arr = ordered_json::array();
  for (const auto& f : fits) arr.push_back(to_json(f));
  return arr;
}

std::vector<FitRecord> fit_records_from_json(const ordered_json& j) {
  if (!j.is_array()) throw ValidationError("fitted models: expected a JSON array");
  std::vector<FitRecord> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = "fitted models[" + std::to_string(i) + "]";
    const auto& rec = j[i];
    FitRecord r;
    const auto& name = field(rec, "name", ctx);
    if (!name.is_string()) throw ValidationError(ctx + ".name: expected a string");
    r.name = name.get<std::string>();
    r.loglik = number_field(rec, "loglik", ctx);
    r.k = static_cast<int>(number_field(rec, "k", ctx));
    r.n = static_cast<Eigen::Index>(number_field(rec, "n", ctx));
    r.aic = number_field(rec, "aic", ctx);
    r.sgf_hat = number_field(rec, "sgf_hat", ctx);
    if (rec.contains("predictive")) {
      const auto& p = rec.at("predictive");
      r.predictive = GaussianModel(vector_from_json(field(p, "mean", ctx), ctx + ".predictive.mean"),
                                   matrix_from_json(field(p, "cov", ctx), ctx + ".predictive.cov"));
    }
    out.push_back(std::move(r));
  }
  return out;
}

ordered_json to_json(const Embedding& e, double asymmetry) {
  return {{"names", e.names},
          {"dim", e.dim},
          {"coords", matrix_json(e.coords)},
          {"stress", e.stress},
          {"stress_percent", 100.0 * e.stress},
          {"scale", e.scale},
          {"converged", e.converged},
          {"restarts_used", e.restarts_used},
          {"best_restart", e.best_restart},
          {"iterations", e.iterations},
          {"padded", e.padded},
          {"asymmetry", asymmetry}};
}

Embedding embedding_from_json(const ordered_json& j) {
  const std::string ctx = "embedding";
  Embedding e;
  const auto& names = field(j, "names", ctx);
  if (!names.is_array()) throw ValidationError("embedding.names: expected an array");
  for (const auto& n : names) {
    if (!n.is_string()) throw ValidationError("embedding.names: expected strings");
    e.names.push_back(n.get<std::string>());
  }
  e.coords = matrix_from_json(field(j, "coords", ctx), "embedding.coords");
  if (e.coords.rows() != static_cast<Eigen::Index>(e.names.size())) {
    throw ValidationError("embedding: one coordinate row per name required");
  }
  e.dim = static_cast<int>(e.coords.cols());
  e.stress = number_field(j, "stress", ctx);
  e.scale = number_field(j, "scale", ctx);
  if (j.contains("converged")) e.converged = j.at("converged").get<bool>();
  if (j.contains("restarts_used")) e.restarts_used = j.at("restarts_used").get<int>();
  if (j.contains("best_restart")) e.best_restart = j.at("best_restart").get<int>();
  if (j.contains("iterations")) e.iterations = j.at("iterations").get<int>();
  if (j.contains("padded")) e.padded = j.at("padded").get<bool>();
  return e;
}

ordered_json to_json(const EntropyEstimate& e) {
  ordered_json weights = ordered_json::array();
  for (const auto& [k, w] : e.weights) weights.push_back({{"k", k}, {"weight", w}});
  return {{"sgg_hat", e.sgg_hat}, {"h_hat", e.h_hat},         {"k", e.k},
          {"n", e.n},             {"d", e.d},                 {"estimator", e.estimator},
          {"fallback", e.fallback}, {"weights", weights}};
}

ordered_json to_json(const AverageResult& a) {
  return {{"weights", vector_json(a.weights)}, {"location", vector_json(a.location)}};
}

ordered_json to_json(const ProjectionResult& p, const std::vector<std::string>& names,
                     const AverageResult* average) {
  ordered_json j = {{"m", vector_json(p.m)},
                    {"h2", p.h2},
                    {"h", std::sqrt(p.h2)},
                    {"h2_unclamped", p.h2_unclamped},
                    {"sgg_used", p.sgg_used},
                    {"kl_to_g", named(p.kl_to_g, names)},
                    {"objective_value", p.objective_value},
                    {"clamped", p.clamped},
                    {"reduced", p.reduced},
                    {"converged", p.converged},
                    {"start_index", p.start_index}};
  if (average != nullptr) {
    j["average"] = {{"weights", named(average->weights, names)},
                    {"location", vector_json(average->location)}};
  }
  return j;
}

ordered_json to_json(const BenchmarkReport& r) {
  ordered_json cells = ordered_json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"n", c.n},
                     {"k", c.k},
                     {"replicates", c.ratios.size()},
                     {"min", c.summary.min},
                     {"q1", c.summary.q1},
                     {"median", c.summary.median},
                     {"q3", c.summary.q3},
                     {"max", c.summary.max},
                     {"mean", c.summary.mean}});
  }
  return {{"p", r.p},
          {"mu", r.mu},
          {"true_entropy", r.true_entropy},
          {"true_sgg", -r.true_entropy},
          {"replicates", r.replicates},
          {"estimator", r.estimator},
          {"seed", r.seed},
          {"cells", cells}};
}

std::string benchmark_replicates_csv(const BenchmarkReport& r) {
  std::string out = "n,replicate,ratio\n";
  for (const auto& c : r.cells) {
    for (std::size_t i = 0; i < c.ratios.size(); ++i) {
      out += std::to_string(c.n) + "," + std::to_string(i) + "," + format_double(c.ratios[i]) + "\n";
    }
  }
  return out;
}

ordered_json to_json(const PipelineReport& r) {
  return {{"stress", r.stress},
          {"stress_percent", 100.0 * r.stress},
          {"m_hat", vector_json(r.m_hat)},
          {"average_location", vector_json(r.average_location)},
          {"m_true", vector_json(r.m_true)},
          {"h2_hat", r.h2_hat},
          {"h_hat", std::sqrt(r.h2_hat)},
          {"h2_true", r.h2_true},
          {"h_true", std::sqrt(r.h2_true)},
          {"sgg_hat", r.sgg_hat},
          {"sgg_true", r.sgg_true},
          {"distance_projection_to_true", r.distance_projection},
          {"distance_average_to_true", r.distance_average}};
}

ordered_json pipeline_json(const PipelineResult& p) {
  return {{"report", to_json(p.report)},
          {"true_projection",
           {{"m", vector_json(p.truth.m)},
            {"h2", p.truth.h2},
            {"sgg", p.truth.sgg},
            {"kl_to_g", named(p.truth.kl, p.embedding.names)},
            {"objective_value", p.truth.solution.objective_value}}}};
}

ordered_json to_json(const SweepStep& s, const std::vector<std::string>& names) {
  std::vector<std::string> surviving;
  for (auto i : s.survivors) surviving.push_back(names[i]);
  return {{"step", s.step},
          {"removed", s.removed},
          {"survivors", surviving},
          {"projection", to_json(s.projection, surviving, &s.average)}};
}

std::string deletion_csv(const DeletionResult& d) {
  std::string out = "step,removed";
  const auto dim = d.pipeline.embedding.coords.cols();
  for (Eigen::Index c = 0; c < dim; ++c) out += ",m" + std::to_string(c + 1);
  for (Eigen::Index c = 0; c < dim; ++c) out += ",a" + std::to_string(c + 1);
  out += ",distance_projection,distance_average\n";
  for (const auto& r : d.rows) {
    out += std::to_string(r.step) + "," + csv_field(r.removed);
    for (Eigen::Index c = 0; c < dim; ++c) out += "," + format_double(r.m_hat(c));
    for (Eigen::Index c = 0; c < dim; ++c) out += "," + format_double(r.average(c));
    out += "," + format_double(r.distance_projection) + "," + format_double(r.distance_average) + "\n";
  }
  return out;
}

std::string model_space_svg(const PipelineResult& p, bool timestamp) {
  const Matrix& c = p.embedding.coords;
  const double width = 720.0;
  const double height = 540.0;
  const double margin = 60.0;
  const double legend_w = 150.0;

  Eigen::RowVectorXd lo = c.colwise().minCoeff();
  Eigen::RowVectorXd hi = c.colwise().maxCoeff();
  for (const Vector* v : {&p.projection.m, &p.truth.m, &p.average.location}) {
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, v->size()); ++k) {
      lo(k) = std::min(lo(k), (*v)(k));
      hi(k) = std::max(hi(k), (*v)(k));
    }
  }
  const double x_span = std::max(hi(0) - lo(0), 1e-12);
  const double y_span = c.cols() > 1 ? std::max(hi(1) - lo(1), 1e-12) : 1.0;
  const double plot_w = width - 2 * margin - legend_w;
  const double plot_h = height - 2 * margin;
  auto px = [&](double x) { return margin + (x - lo(0)) / x_span * plot_w; };
  auto py = [&](double y) {
    return c.cols() > 1 ? height - margin - (y - lo(1)) / y_span * plot_h : height / 2;
  };
  auto y_of = [&](const Vector& v) { return v.size() > 1 ? v(1) : 0.0; };

  std::ostringstream s;
  s << std::setprecision(6);
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    s << "<!-- generated " << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ") << " -->\n";
  }
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
    << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
    << "\" fill=\"white\"/>\n";
  s << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot_w << "\" height=\""
    << plot_h << "\" fill=\"none\" stroke=\"#444\"/>\n";
  s << "<text x=\"" << margin + plot_w / 2 << "\" y=\"" << height - 20
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">NMDS 1</text>\n";
  s << "<text x=\"20\" y=\"" << margin + plot_h / 2 << "\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 20 " << margin + plot_h / 2
    << ")\">NMDS 2</text>\n";
  s << "<text x=\"" << margin << "\" y=\"" << margin - 20
    << "\" font-family=\"sans-serif\" font-size=\"14\">Model space (stress "
    << 100.0 * p.embedding.stress << "%)</text>\n";

  // Delta-AIC bands, darker is better.
  const double best = p.aics.minCoeff();
  const struct {
    double upper;
    const char* fill;
    const char* label;
  } bands[] = {{2.0, "#252525", "dAIC < 2"},
               {4.0, "#636363", "2 - 4"},
               {7.0, "#969696", "4 - 7"},
               {10.0, "#bdbdbd", "7 - 10"},
               {INFINITY, "#e0e0e0", "> 10"}};
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    const double delta = p.aics(i) - best;
    const char* fill = bands[4].fill;
    for (const auto& b : bands) {
      if (delta < b.upper) {
        fill = b.fill;
        break;
      }
    }
    const double x = px(c(i, 0));
    const double y = py(c.cols() > 1 ? c(i, 1) : 0.0);
    s << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"5\" fill=\"" << fill
      << "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
    s << "<text x=\"" << x + 7 << "\" y=\"" << y - 4
      << "\" font-family=\"sans-serif\" font-size=\"9\" fill=\"#555\">"
      << p.embedding.names[static_cast<std::size_t>(i)] << "</text>\n";
  }

  auto marker = [&](const Vector& v, const char* color, const char* label) {
    const double x = px(v(0));
    const double y = py(y_of(v));
    s << "<path d=\"M " << x - 7 << " " << y << " L " << x + 7 << " " << y << " M " << x << " "
      << y - 7 << " L " << x << " " << y + 7 << "\" stroke=\"" << color
      << "\" stroke-width=\"2.5\"/>\n";
    s << "<text x=\"" << x + 8 << "\" y=\"" << y + 14
      << "\" font-family=\"sans-serif\" font-size=\"14\" font-weight=\"bold\" fill=\"" << color
      << "\">" << label << "</text>\n";
  };
  marker(p.truth.m, "black", "M");
  marker(p.projection.m, "#1f4fd1", "m");
  marker(p.average.location, "#d1261f", "a");

  const double lx = width - legend_w - 10;
  double ly = margin + 10;
  s << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (const auto& b : bands) {
    s << "<circle cx=\"" << lx + 6 << "\" cy=\"" << ly << "\" r=\"5\" fill=\"" << b.fill
      << "\" stroke=\"black\" stroke-width=\"0.5\"/>";
    s << "<text x=\"" << lx + 16 << "\" y=\"" << ly + 4 << "\">" << b.label << "</text>\n";
    ly += 18;
  }
  for (const auto& [color, text] : {std::pair{"black", "M: true projection"},
                                    std::pair{"#1f4fd1", "m: estimated projection"},
                                    std::pair{"#d1261f", "a: model average"}}) {
    s << "<text x=\"" << lx << "\" y=\"" << ly + 4 << "\" fill=\"" << color << "\">" << text
      << "</text>\n";
    ly += 18;
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

ordered_json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace modelproj
