#include "adl/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace adl {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

bool parse_double(std::string_view s, double &out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

json num(double v) { return round_sig6(v); }

json opt_num(const std::optional<double> &v) { return v ? num(*v) : json(nullptr); }

json edge_row(const EdgeRow &r) {
  return {{"name", r.name}, {"overall", num(r.overall)}, {"normal", num(r.normal)},
          {"tangent", num(r.tangent)}, {"bias_rate", opt_num(r.bias_rate)}};
}

std::string dump(const json &doc) { return doc.dump(2) + "\n"; }

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string opt_text(const std::optional<double> &v) { return v ? format_sig6(*v) : ""; }

}  // namespace

PointSet read_pts(std::string_view text) {
  const auto lines = split_lines(text);
  std::size_t i = 0;
  const auto next_content = [&]() -> std::string_view {
    while (i < lines.size() && trim(lines[i]).empty()) ++i;
    if (i == lines.size()) throw ParseError("unexpected end of file", lines.size() + 1);
    return trim(lines[i++]);
  };
  const auto header = [&](std::string_view key) -> std::string_view {
    const auto line = next_content();
    const auto colon = line.find(':');
    if (colon == std::string_view::npos || trim(line.substr(0, colon)) != key)
      throw ParseError("expected '" + std::string(key) + ":' header", i);
    return trim(line.substr(colon + 1));
  };

  double version = 0.0;
  if (!parse_double(header("version"), version) || version != 1.0) throw ParseError("unsupported version", i);
  double n_raw = 0.0;
  const auto n_text = header("n_points");
  if (!parse_double(n_text, n_raw) || n_raw < 0 || n_raw != static_cast<double>(static_cast<long>(n_raw)))
    throw ParseError("n_points is not a non-negative integer", i);
  const auto n = static_cast<std::size_t>(n_raw);
  if (next_content() != "{") throw ParseError("expected '{'", i);

  std::vector<Vec2> pts;
  for (;;) {
    const auto line = next_content();
    if (line == "}") break;
    const auto sep = line.find_first_of(" \t");
    double x = 0.0, y = 0.0;
    if (sep == std::string_view::npos || !parse_double(trim(line.substr(0, sep)), x) ||
        !parse_double(trim(line.substr(sep)), y))
      throw ParseError("expected two numbers, got '" + std::string(line) + "'", i);
    if (!std::isfinite(x) || !std::isfinite(y)) throw ParseError("non-finite coordinate", i);
    pts.push_back({x, y});
  }
  if (pts.size() != n)
    throw ParseError("n_points says " + std::to_string(n) + " but " + std::to_string(pts.size()) + " points follow", i);
  while (i < lines.size()) {
    if (!trim(lines[i++]).empty()) throw ParseError("trailing content after '}'", i);
  }
  return PointSet(std::move(pts), CoordUnit::image_px);
}

std::string write_pts(const PointSet &points) {
  std::string out = "version: 1\nn_points: " + std::to_string(points.size()) + "\n{\n";
  char buf[64];
  for (Vec2 p : points) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
    out += buf;
  }
  return out + "}\n";
}

std::vector<LandmarkRecord> read_predictions(std::istream &in) {
  std::vector<LandmarkRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error &e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!doc.is_object() || !doc.contains("id") || !doc.contains("points"))
      throw ParseError("expected an object with \"id\" and \"points\"", line_no);
    if (!doc["id"].is_string()) throw ParseError("\"id\" must be a string", line_no);
    if (!doc["points"].is_array()) throw ParseError("\"points\" must be an array", line_no);
    std::vector<Vec2> pts;
    for (const auto &p : doc["points"]) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw ParseError("each point must be [x, y]", line_no);
      pts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    auto id = doc["id"].get<std::string>();
    if (!seen.insert(id).second) throw ParseError("duplicate id '" + id + "'", line_no);
    out.push_back({std::move(id), PointSet(std::move(pts), CoordUnit::image_px)});
  }
  return out;
}

std::string write_predictions(const std::vector<LandmarkRecord> &records) {
  std::string out;
  for (const auto &r : records) {
    json pts = json::array();
    for (Vec2 p : r.points) pts.push_back({p.x, p.y});
    out += json{{"id", r.id}, {"points", pts}}.dump() + "\n";
  }
  return out;
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path &path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed: " + path.string());
}

std::vector<LandmarkRecord> load_records(const std::filesystem::path &path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pts") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<LandmarkRecord> out;
    for (const auto &f : files) {
      try {
        out.push_back({f.stem().string(), read_pts(read_text_file(f))});
      } catch (const ParseError &e) {
        throw ParseError(f.filename().string() + ": " + e.what(), e.line());
      }
    }
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return read_predictions(in);
  } catch (const ParseError &e) {
    throw ParseError(path.filename().string() + ": " + e.what(), e.line());
  }
}

std::string report_json(const EvalReport &report) {
  json fr = json::object(), auc = json::object();
  for (const auto &[t, v] : report.fr) fr[format_sig6(t)] = num(v);
  for (const auto &[t, v] : report.auc) auc[format_sig6(t)] = num(v);
  json edges = json::array();
  for (const auto &row : report.per_edge.edges) edges.push_back(edge_row(row));
  json samples = json::object();
  for (const auto &[id, v] : report.per_sample_nme) samples[id] = num(v);
  const json doc{{"n_samples", report.n_samples},
                 {"nme", num(report.nme)},
                 {"nme_normal", num(report.nme_normal)},
                 {"nme_tangent", num(report.nme_tangent)},
                 {"bias_rate", opt_num(report.bias_rate)},
                 {"fr", fr},
                 {"auc", auc},
                 {"per_edge", edges},
                 {"whole_face", edge_row(report.per_edge.whole_face)},
                 {"per_sample_nme", samples}};
  return dump(doc);
}

std::string report_csv(const EvalReport &report) {
  std::string out = "edge,overall,normal,tangent,bias_rate\n";
  const auto row = [&](const EdgeRow &r) {
    out += csv_field(r.name) + "," + format_sig6(r.overall) + "," + format_sig6(r.normal) + "," +
           format_sig6(r.tangent) + "," + opt_text(r.bias_rate) + "\n";
  };
  for (const auto &r : report.per_edge.edges) row(r);
  row(report.per_edge.whole_face);
  return out;
}

std::string scatter_csv(const ErrorScatter &scatter) {
  std::string out = "landmark,sample_id,e_normal,e_tangent\n";
  for (std::size_t i = 0; i < scatter.per_landmark.size(); ++i) {
    for (const auto &p : scatter.per_landmark[i])
      out += std::to_string(i) + "," + csv_field(p.sample_id) + "," + format_sig6(p.e_normal) + "," +
             format_sig6(p.e_tangent) + "\n";
  }
  return out;
}

std::string ellipses_json(const ErrorScatter &scatter) {
  json arr = json::array();
  for (std::size_t i = 0; i < scatter.ellipses.size(); ++i) {
    const auto &e = scatter.ellipses[i];
    arr.push_back({{"landmark", i}, {"major", num(e.major)}, {"minor", num(e.minor)}, {"angle", num(e.angle)},
                   {"count", e.count}});
  }
  return dump(json{{"ellipses", arr}});
}

std::string lambda_json(const LambdaEstimate &estimate) {
  json arr = json::array();
  for (std::size_t i = 0; i < estimate.lambda.size(); ++i) {
    arr.push_back({{"landmark", i},
                   {"lambda", num(estimate.lambda[i])},
                   {"major", num(estimate.ellipses[i].major)},
                   {"minor", num(estimate.ellipses[i].minor)},
                   {"degenerate", static_cast<bool>(estimate.degenerate[i])}});
  }
  return dump(json{{"landmarks", arr}});
}

std::string bias_experiment_json(const BiasExperimentResult &result) {
  json per_lambda = json::array();
  for (std::size_t l = 0; l < result.lambdas.size(); ++l) {
    json seeds = json::array();
    for (const auto &o : result.outcomes[l]) {
      seeds.push_back({{"seed", o.seed},
                       {"median_normal", num(o.median_normal)},
                       {"median_tangent", num(o.median_tangent)},
                       {"median_overall", num(o.median_overall)},
                       {"mean_normal", num(o.mean_normal)},
                       {"mean_tangent", num(o.mean_tangent)},
                       {"mean_overall", num(o.mean_overall)},
                       {"bias_rate", opt_num(o.bias_rate)}});
    }
    per_lambda.push_back(
        {{"lambda", num(result.lambdas[l])}, {"median_bias_rate", num(result.median_bias_rate(l))}, {"seeds", seeds}});
  }
  json wins = json::object();
  for (std::size_t a = 0; a < result.lambdas.size(); ++a) {
    for (std::size_t b = 0; b < result.lambdas.size(); ++b) {
      if (a != b)
        wins[format_sig6(result.lambdas[a]) + "_vs_" + format_sig6(result.lambdas[b])] = result.normal_wins(a, b);
    }
  }
  return dump(json{{"runs", per_lambda}, {"normal_wins", wins}});
}

std::string traces_csv(const BiasExperimentResult &result) {
  std::string out = "lambda,seed,face,iteration,loss,boundary_crossings\n";
  for (std::size_t l = 0; l < result.lambdas.size(); ++l) {
    for (const auto &o : result.outcomes[l]) {
      for (std::size_t f = 0; f < o.traces.size(); ++f) {
        const auto &t = o.traces[f];
        for (std::size_t k = 0; k < t.loss.size(); ++k) {
          out += format_sig6(result.lambdas[l]) + "," + std::to_string(o.seed) + "," + std::to_string(f) + "," +
                 std::to_string(k) + "," + format_sig6(t.loss[k]) + "," +
                 (k == 0 ? std::string("0") : std::to_string(t.boundary_crossings[k - 1])) + "\n";
        }
      }
    }
  }
  return out;
}

}  // namespace adl
