#include "adl/scheme.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace adl {

using nlohmann::json;

namespace {

std::string edge_label(const EdgeDef &e, std::size_t j) {
  return "edge " + std::to_string(j) + " ('" + e.name + "')";
}

}  // namespace

LandmarkScheme::LandmarkScheme(std::string name, int n_points, std::vector<EdgeDef> edges, NormalizationSpec norm)
    : name_(std::move(name)), n_points_(n_points), edges_(std::move(edges)), norm_(std::move(norm)) {
  validate();
  build_neighbors();
}

void LandmarkScheme::validate() const {
  if (n_points_ < 1) throw ValidationError("scheme '" + name_ + "': n_points must be positive");
  auto in_range = [&](int i) { return i >= 0 && i < n_points_; };

  for (std::size_t j = 0; j < edges_.size(); ++j) {
    const auto &e = edges_[j];
    if (e.vertices.size() < 2) throw ValidationError(edge_label(e, j) + " needs at least 2 vertices");
    for (int v : e.vertices) {
      if (!in_range(v))
        throw ValidationError(edge_label(e, j) + ": vertex " + std::to_string(v) + " outside [0, " +
                              std::to_string(n_points_) + ")");
    }
    for (std::size_t k = 1; k < e.vertices.size(); ++k) {
      if (e.vertices[k] == e.vertices[k - 1])
        throw ValidationError(edge_label(e, j) + ": immediate duplicate vertex " + std::to_string(e.vertices[k]));
    }
    if (e.closed && e.vertices.front() == e.vertices.back())
      throw ValidationError(edge_label(e, j) + ": closed edge repeats its first vertex");
  }

  for (int i : norm_.inter_ocular) {
    if (!in_range(i)) throw ValidationError("norm.inter_ocular: index " + std::to_string(i) + " out of range");
  }
  if (norm_.inter_ocular[0] == norm_.inter_ocular[1])
    throw ValidationError("norm.inter_ocular: the two indices must differ");
  for (const auto &group : norm_.inter_pupil) {
    if (group.empty()) throw ValidationError("norm.inter_pupil: groups must be non-empty");
    for (int i : group) {
      if (!in_range(i)) throw ValidationError("norm.inter_pupil: index " + std::to_string(i) + " out of range");
    }
  }
  std::set<int> first(norm_.inter_pupil[0].begin(), norm_.inter_pupil[0].end());
  for (int i : norm_.inter_pupil[1]) {
    if (first.count(i)) throw ValidationError("norm.inter_pupil: groups share index " + std::to_string(i));
  }
}

void LandmarkScheme::build_neighbors() {
  const auto n = static_cast<std::size_t>(n_points_);
  std::vector<std::vector<int>> incoming(n), outgoing(n);
  auto link = [&](int from, int to) {
    auto &out = outgoing[static_cast<std::size_t>(from)];
    auto &in = incoming[static_cast<std::size_t>(to)];
    if (std::find(out.begin(), out.end(), to) == out.end()) out.push_back(to);
    if (std::find(in.begin(), in.end(), from) == in.end()) in.push_back(from);
  };
  for (const auto &e : edges_) {
    for (std::size_t k = 1; k < e.vertices.size(); ++k) link(e.vertices[k - 1], e.vertices[k]);
    if (e.closed) link(e.vertices.back(), e.vertices.front());
  }

  neighbors_.assign(n, Neighborhood{});
  for (std::size_t i = 0; i < n; ++i) {
    std::set<int> all(incoming[i].begin(), incoming[i].end());
    all.insert(outgoing[i].begin(), outgoing[i].end());
    auto &nb = neighbors_[i];
    if (all.empty()) continue;
    if (all.size() == 1) {
      nb.kind = Neighborhood::Kind::endpoint;
      if (!outgoing[i].empty())
        nb.next = outgoing[i].front();
      else
        nb.pre = incoming[i].front();
      continue;
    }
    if (all.size() == 2) {
      nb.kind = Neighborhood::Kind::interior;
      if (incoming[i].size() == 1 && outgoing[i].size() == 1 && incoming[i][0] != outgoing[i][0]) {
        nb.pre = incoming[i][0];
        nb.next = outgoing[i][0];
      } else {
        nb.pre = *all.begin();
        nb.next = *std::next(all.begin());
      }
      continue;
    }
    // Branch point: fall back to the first edge that lists it.
    for (const auto &e : edges_) {
      auto it = std::find(e.vertices.begin(), e.vertices.end(), static_cast<int>(i));
      if (it == e.vertices.end()) continue;
      const auto k = static_cast<std::size_t>(it - e.vertices.begin());
      const auto m = e.vertices.size();
      if (k > 0) nb.pre = e.vertices[k - 1];
      else if (e.closed) nb.pre = e.vertices[m - 1];
      if (k + 1 < m) nb.next = e.vertices[k + 1];
      else if (e.closed) nb.next = e.vertices[0];
      nb.kind = (nb.pre >= 0 && nb.next >= 0) ? Neighborhood::Kind::interior : Neighborhood::Kind::endpoint;
      break;
    }
  }
}

double LandmarkScheme::normalization_distance(const PointSet &truth, NormKind kind) const {
  if (truth.size() != static_cast<std::size_t>(n_points_))
    throw DimensionError("normalization_distance: expected " + std::to_string(n_points_) + " points");
  if (kind == NormKind::inter_ocular) {
    return adl::norm(truth[static_cast<std::size_t>(norm_.inter_ocular[1])] -
                truth[static_cast<std::size_t>(norm_.inter_ocular[0])]);
  }
  auto centroid = [&](const std::vector<int> &group) {
    Vec2 c;
    for (int i : group) c += truth[static_cast<std::size_t>(i)];
    return c / static_cast<double>(group.size());
  };
  return adl::norm(centroid(norm_.inter_pupil[1]) - centroid(norm_.inter_pupil[0]));
}

E2PMatrix::E2PMatrix(int n_points, int n_edges)
    : n_points_(n_points), n_edges_(n_edges),
      entries_(static_cast<std::size_t>(n_points) * static_cast<std::size_t>(n_edges), 0) {}

int E2PMatrix::row_sum(int point) const {
  int s = 0;
  for (int j = 0; j < n_edges_; ++j) s += at(point, j);
  return s;
}

E2PMatrix e2p_matrix(const LandmarkScheme &scheme) {
  E2PMatrix m(scheme.n_points(), scheme.n_edges());
  for (int j = 0; j < scheme.n_edges(); ++j) {
    for (int v : scheme.edge_points(j)) m.set(v, j, 1);
  }
  return m;
}

LandmarkScheme builtin_300w() {
  auto range = [](int first, int last) {
    std::vector<int> v;
    for (int i = first; i <= last; ++i) v.push_back(i);
    return v;
  };
  auto wrap = [&](int first, int last, int back_to) {
    auto v = range(first, last);
    v.push_back(back_to);
    return v;
  };
  std::vector<EdgeDef> edges = {
      {"Face Contour", range(0, 16), false},
      {"Right Eyebrow", range(17, 21), false},
      {"Left Eyebrow", range(22, 26), false},
      {"Nose Middle Line", range(27, 30), false},
      {"Nose Bottom Line", range(31, 35), false},
      {"Right Eye Superior Margin", range(36, 39), false},
      {"Right Eye Inferior Margin", wrap(39, 41, 36), false},
      {"Left Eye Superior Margin", range(42, 45), false},
      {"Left Eye Inferior Margin", wrap(45, 47, 42), false},
      {"Outer Lip Superior Margin", range(48, 54), false},
      {"Outer Lip Inferior Margin", wrap(54, 59, 48), false},
      {"Inner Lip Superior Margin", range(60, 64), false},
      {"Inner Lip Inferior Margin", wrap(64, 67, 60), false},
  };
  NormalizationSpec norm;
  norm.inter_ocular = {36, 45};
  norm.inter_pupil = {range(36, 41), range(42, 47)};
  return LandmarkScheme("300w", 68, std::move(edges), std::move(norm));
}

namespace {

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

void require_keys(const json &obj, const std::string &where, std::initializer_list<const char *> keys) {
  if (!obj.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto &[k, _] : obj.items()) {
    bool known = false;
    for (const char *key : keys) known = known || k == key;
    if (!known) throw ValidationError(where + ": unknown field '" + k + "'");
  }
  for (const char *key : keys) {
    if (!obj.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
  }
}

int as_index(const json &v, const std::string &where) {
  if (!v.is_number_integer()) throw ValidationError(where + ": expected an integer");
  return v.get<int>();
}

std::vector<int> as_index_list(const json &v, const std::string &where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array of integers");
  std::vector<int> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(as_index(v[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

}  // namespace

LandmarkScheme load_scheme(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("malformed scheme document: ") + e.what(), line_of_offset(document, e.byte));
  }
  require_keys(doc, "scheme", {"name", "n_points", "edges", "norm"});
  if (!doc["name"].is_string()) throw ValidationError("scheme.name: expected a string");
  const int n_points = as_index(doc["n_points"], "scheme.n_points");

  const auto &jedges = doc["edges"];
  if (!jedges.is_array()) throw ValidationError("scheme.edges: expected an array");
  std::vector<EdgeDef> edges;
  for (std::size_t j = 0; j < jedges.size(); ++j) {
    const std::string where = "scheme.edges[" + std::to_string(j) + "]";
    require_keys(jedges[j], where, {"name", "vertices", "closed"});
    if (!jedges[j]["name"].is_string()) throw ValidationError(where + ".name: expected a string");
    if (!jedges[j]["closed"].is_boolean()) throw ValidationError(where + ".closed: expected a boolean");
    edges.push_back({jedges[j]["name"].get<std::string>(), as_index_list(jedges[j]["vertices"], where + ".vertices"),
                     jedges[j]["closed"].get<bool>()});
  }

  const auto &jnorm = doc["norm"];
  require_keys(jnorm, "scheme.norm", {"inter_ocular", "inter_pupil"});
  NormalizationSpec norm;
  auto io = as_index_list(jnorm["inter_ocular"], "scheme.norm.inter_ocular");
  if (io.size() != 2) throw ValidationError("scheme.norm.inter_ocular: expected exactly 2 indices");
  norm.inter_ocular = {io[0], io[1]};
  const auto &jip = jnorm["inter_pupil"];
  if (!jip.is_array() || jip.size() != 2) throw ValidationError("scheme.norm.inter_pupil: expected 2 index groups");
  norm.inter_pupil = {as_index_list(jip[0], "scheme.norm.inter_pupil[0]"),
                      as_index_list(jip[1], "scheme.norm.inter_pupil[1]")};

  return LandmarkScheme(doc["name"].get<std::string>(), n_points, std::move(edges), std::move(norm));
}

std::string serialize_scheme(const LandmarkScheme &scheme) {
  json doc;
  doc["name"] = scheme.name();
  doc["n_points"] = scheme.n_points();
  doc["edges"] = json::array();
  for (const auto &e : scheme.edges()) {
    doc["edges"].push_back({{"name", e.name}, {"vertices", e.vertices}, {"closed", e.closed}});
  }
  doc["norm"] = {{"inter_ocular", {scheme.norm().inter_ocular[0], scheme.norm().inter_ocular[1]}},
                 {"inter_pupil", {scheme.norm().inter_pupil[0], scheme.norm().inter_pupil[1]}}};
  return doc.dump(2) + "\n";
}

}  // namespace adl
