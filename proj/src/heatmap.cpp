#include "adl/heatmap.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace adl {

using nlohmann::json;

void HeatmapGeometry::validate() const {
  if (width < 1 || height < 1) throw ConfigError("heatmap width and height must be >= 1");
  if (!(stride >= 1.0)) throw ConfigError("heatmap stride must be >= 1");
  if (!(sigma_point > 0.0)) throw ConfigError("point sigma must be positive");
  if (!(edge_width > 0.0)) throw ConfigError("edge width must be positive");
}

const char *to_string(HeatmapKind kind) {
  switch (kind) {
    case HeatmapKind::point: return "point";
    case HeatmapKind::edge: return "edge";
    case HeatmapKind::point_edge: return "point_edge";
    case HeatmapKind::landmarks: return "landmarks";
  }
  return "unknown";
}

HeatmapKind heatmap_kind_from_string(const std::string &name) {
  for (auto k : {HeatmapKind::point, HeatmapKind::edge, HeatmapKind::point_edge, HeatmapKind::landmarks}) {
    if (name == to_string(k)) return k;
  }
  throw InputError("unknown heatmap kind '" + name + "'");
}

Heatmap::Heatmap(HeatmapGeometry geom, HeatmapKind kind, int channels)
    : geom_(geom), kind_(kind), channels_(channels) {
  geom_.validate();
  if (channels < 0) throw ConfigError("negative channel count");
  data_.assign(static_cast<std::size_t>(channels) * geom_.pixels(), 0.0);
}

namespace {

PointSet heatmap_units(const PointSet &truth, const HeatmapGeometry &geom) {
  truth.require_finite("heatmap generation");
  return truth.to_heatmap(geom.stride);
}

// Grid extent covered by pixel cells.
struct GridRect {
  double x0, y0, x1, y1;
  explicit GridRect(const HeatmapGeometry &g) : x0(-0.5), y0(-0.5), x1(g.width - 0.5), y1(g.height - 0.5) {}
  bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

// Liang-Barsky test: does segment a-b touch the rectangle?
bool segment_hits_rect(Vec2 a, Vec2 b, const GridRect &r) {
  const Vec2 d = b - a;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-d.x, d.x, -d.y, d.y};
  const double q[4] = {a.x - r.x0, r.x1 - a.x, a.y - r.y0, r.y1 - a.y};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return false;
      continue;
    }
    const double t = q[k] / p[k];
    if (p[k] < 0.0) t0 = std::max(t0, t);
    else t1 = std::min(t1, t);
    if (t0 > t1) return false;
  }
  return true;
}

double segment_distance_sq(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len_sq = dot(ab, ab);
  double t = len_sq > 0.0 ? dot(p - a, ab) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 diff = p - (a + t * ab);
  return dot(diff, diff);
}

void normalize_peak(std::span<double> channel) {
  const double peak = *std::max_element(channel.begin(), channel.end());
  if (peak <= 0.0 || peak == 1.0) return;
  for (double &v : channel) v /= peak;
}

}  // namespace

Heatmap gen_point_heatmap(const LandmarkScheme &scheme, const PointSet &truth, const HeatmapGeometry &geom) {
  geom.validate();
  if (truth.size() != static_cast<std::size_t>(scheme.n_points()))
    throw DimensionError("gen_point_heatmap: point count does not match scheme");
  const PointSet pts = heatmap_units(truth, geom);
  Heatmap hm(geom, HeatmapKind::point, scheme.n_points());
  const double inv_two_sigma_sq = 1.0 / (2.0 * geom.sigma_point * geom.sigma_point);
  const GridRect rect(geom);
  for (int c = 0; c < hm.channels(); ++c) {
    const Vec2 p = pts[static_cast<std::size_t>(c)];
    for (int y = 0; y < geom.height; ++y) {
      const double dy = y - p.y;
      for (int x = 0; x < geom.width; ++x) {
        const double dx = x - p.x;
        hm.at(c, y, x) = std::exp(-(dx * dx + dy * dy) * inv_two_sigma_sq);
      }
    }
    if (rect.contains(p)) normalize_peak(hm.channel(c));
  }
  return hm;
}

Heatmap gen_edge_heatmap(const LandmarkScheme &scheme, const PointSet &truth, const HeatmapGeometry &geom) {
  geom.validate();
  if (truth.size() != static_cast<std::size_t>(scheme.n_points()))
    throw DimensionError("gen_edge_heatmap: point count does not match scheme");
  const PointSet pts = heatmap_units(truth, geom);
  Heatmap hm(geom, HeatmapKind::edge, scheme.n_edges());
  const double inv_two_w_sq = 1.0 / (2.0 * geom.edge_width * geom.edge_width);
  const GridRect rect(geom);

  for (int j = 0; j < scheme.n_edges(); ++j) {
    const auto &e = scheme.edges()[static_cast<std::size_t>(j)];
    std::vector<std::pair<Vec2, Vec2>> segments;
    for (std::size_t k = 1; k < e.vertices.size(); ++k)
      segments.emplace_back(pts[static_cast<std::size_t>(e.vertices[k - 1])], pts[static_cast<std::size_t>(e.vertices[k])]);
    if (e.closed)
      segments.emplace_back(pts[static_cast<std::size_t>(e.vertices.back())], pts[static_cast<std::size_t>(e.vertices.front())]);

    bool inside = false;
    for (const auto &[a, b] : segments) inside = inside || segment_hits_rect(a, b, rect);

    for (int y = 0; y < geom.height; ++y) {
      for (int x = 0; x < geom.width; ++x) {
        const Vec2 px{static_cast<double>(x), static_cast<double>(y)};
        double best = std::numeric_limits<double>::infinity();
        for (const auto &[a, b] : segments) best = std::min(best, segment_distance_sq(px, a, b));
        hm.at(j, y, x) = std::exp(-best * inv_two_w_sq);
      }
    }
    if (inside) normalize_peak(hm.channel(j));
  }
  return hm;
}

Heatmap apply_e2p(const Heatmap &edge_hm, const E2PMatrix &mat) {
  if (edge_hm.channels() != mat.n_edges())
    throw DimensionError("apply_e2p: heatmap has " + std::to_string(edge_hm.channels()) + " channels, matrix expects " +
                         std::to_string(mat.n_edges()));
  Heatmap out(edge_hm.geometry(), HeatmapKind::edge, mat.n_points());
  for (int i = 0; i < mat.n_points(); ++i) {
    auto dst = out.channel(i);
    for (int j = 0; j < mat.n_edges(); ++j) {
      if (!mat.at(i, j)) continue;
      auto src = edge_hm.channel(j);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  return out;
}

Heatmap fuse_point_edge(const Heatmap &point_hm, const Heatmap &edge_hm) {
  if (!point_hm.same_shape(edge_hm)) throw DimensionError("fuse_point_edge: heatmap shapes differ");
  Heatmap out(point_hm.geometry(), HeatmapKind::point_edge, point_hm.channels());
  auto a = point_hm.data();
  auto b = edge_hm.data();
  auto dst = out.data();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = a[k] * b[k];
  return out;
}

namespace {

void require_soft_argmax_inputs(const Heatmap &landmarks, const Heatmap &mask) {
  if (!landmarks.same_shape(mask)) throw DimensionError("soft_argmax: landmark and mask shapes differ");
  for (const Heatmap *h : {&landmarks, &mask}) {
    for (double v : h->data()) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("soft_argmax: heatmap values must be finite and >= 0");
    }
  }
}

struct ChannelMoments {
  double mass = 0.0;
  double sx = 0.0;
  double sy = 0.0;
};

ChannelMoments moments(const Heatmap &landmarks, const Heatmap &mask, int c) {
  ChannelMoments m;
  auto h = landmarks.channel(c);
  auto w = mask.channel(c);
  const int width = landmarks.width();
  for (int y = 0; y < landmarks.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      const auto k = static_cast<std::size_t>(y * width + x);
      const double v = h[k] * w[k];
      m.mass += v;
      m.sx += v * x;
      m.sy += v * y;
    }
  }
  return m;
}

}  // namespace

SoftArgmaxResult soft_argmax(const Heatmap &landmarks, const Heatmap &mask) {
  require_soft_argmax_inputs(landmarks, mask);
  SoftArgmaxResult out{PointSet(static_cast<std::size_t>(landmarks.channels()), CoordUnit::heatmap_px),
                       std::vector<bool>(static_cast<std::size_t>(landmarks.channels()), false)};
  for (int c = 0; c < landmarks.channels(); ++c) {
    const auto m = moments(landmarks, mask, c);
    const auto i = static_cast<std::size_t>(c);
    if (m.mass == 0.0) {
      out.points[i] = landmarks.geometry().center();
      out.degenerate[i] = true;
      continue;
    }
    const double denom = m.mass + kSoftArgmaxEpsilon;
    out.points[i] = {m.sx / denom, m.sy / denom};
  }
  return out;
}

SoftArgmaxGrads soft_argmax_backward(const Heatmap &landmarks, const Heatmap &mask, const SoftArgmaxResult &decoded,
                                     std::span<const double> upstream) {
  if (upstream.size() != 2 * static_cast<std::size_t>(landmarks.channels()))
    throw DimensionError("soft_argmax_backward: upstream gradient size mismatch");
  SoftArgmaxGrads g{std::vector<double>(landmarks.data().size(), 0.0), std::vector<double>(mask.data().size(), 0.0)};
  const int width = landmarks.width();
  const std::size_t pixels = landmarks.geometry().pixels();
  for (int c = 0; c < landmarks.channels(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (decoded.degenerate[i]) continue;
    const auto m = moments(landmarks, mask, c);
    const double denom = m.mass + kSoftArgmaxEpsilon;
    const Vec2 p = decoded.points[i];
    const double gx = upstream[2 * i];
    const double gy = upstream[2 * i + 1];
    auto h = landmarks.channel(c);
    auto w = mask.channel(c);
    const std::size_t base = i * pixels;
    for (int y = 0; y < landmarks.height(); ++y) {
      for (int x = 0; x < width; ++x) {
        const auto k = static_cast<std::size_t>(y * width + x);
        const double d_masked = (gx * (x - p.x) + gy * (y - p.y)) / denom;
        g.d_landmarks[base + k] = d_masked * w[k];
        g.d_mask[base + k] = d_masked * h[k];
      }
    }
  }
  return g;
}

ChannelJacobian soft_argmax_jacobian(const Heatmap &landmarks, const Heatmap &mask, int channel) {
  require_soft_argmax_inputs(landmarks, mask);
  if (channel < 0 || channel >= landmarks.channels()) throw DimensionError("soft_argmax_jacobian: bad channel");
  const auto m = moments(landmarks, mask, channel);
  ChannelJacobian j{std::vector<double>(landmarks.geometry().pixels(), 0.0),
                    std::vector<double>(landmarks.geometry().pixels(), 0.0)};
  if (m.mass == 0.0) return j;
  const double denom = m.mass + kSoftArgmaxEpsilon;
  const Vec2 p{m.sx / denom, m.sy / denom};
  auto w = mask.channel(channel);
  const int width = landmarks.width();
  for (int y = 0; y < landmarks.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      const auto k = static_cast<std::size_t>(y * width + x);
      j.dx[k] = w[k] * (x - p.x) / denom;
      j.dy[k] = w[k] * (y - p.y) / denom;
    }
  }
  return j;
}

namespace {

std::filesystem::path with_suffix(const std::filesystem::path &stem, const char *suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

}  // namespace

void write_heatmap_dump(const Heatmap &hm, const std::filesystem::path &stem) {
  std::ofstream bin(with_suffix(stem, ".f32"), std::ios::binary);
  if (!bin) throw InputError("cannot write " + with_suffix(stem, ".f32").string());
  for (double v : hm.data()) {
    const auto f = static_cast<float>(v);
    const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(f));
    bin.write(reinterpret_cast<const char *>(&bits), sizeof bits);
  }
  json side = {{"width", hm.width()},
               {"height", hm.height()},
               {"channels", hm.channels()},
               {"stride", hm.geometry().stride},
               {"kind", to_string(hm.kind())}};
  std::ofstream meta(with_suffix(stem, ".json"));
  if (!meta) throw InputError("cannot write " + with_suffix(stem, ".json").string());
  meta << side.dump(2) << "\n";
}

Heatmap read_heatmap_dump(const std::filesystem::path &stem) {
  std::ifstream meta(with_suffix(stem, ".json"));
  if (!meta) throw InputError("cannot read " + with_suffix(stem, ".json").string());
  json side;
  try {
    side = json::parse(meta);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("heatmap sidecar: ") + e.what(), 1);
  }
  HeatmapGeometry geom;
  int channels = 0;
  std::string kind;
  try {
    geom.width = side.at("width").get<int>();
    geom.height = side.at("height").get<int>();
    geom.stride = side.at("stride").get<double>();
    channels = side.at("channels").get<int>();
    kind = side.at("kind").get<std::string>();
  } catch (const json::exception &e) {
    throw ValidationError(std::string("heatmap sidecar: ") + e.what());
  }
  Heatmap hm(geom, heatmap_kind_from_string(kind), channels);
  std::ifstream bin(with_suffix(stem, ".f32"), std::ios::binary);
  if (!bin) throw InputError("cannot read " + with_suffix(stem, ".f32").string());
  for (double &v : hm.data()) {
    std::uint32_t bits = 0;
    if (!bin.read(reinterpret_cast<char *>(&bits), sizeof bits)) throw InputError("heatmap dump is truncated");
    v = static_cast<double>(std::bit_cast<float>(to_little_endian(bits)));
  }
  return hm;
}

void write_pgm(const Heatmap &hm, int channel, const std::filesystem::path &path) {
  if (channel < 0 || channel >= hm.channels()) throw DimensionError("write_pgm: bad channel");
  auto values = hm.channel(channel);
  const double peak = *std::max_element(values.begin(), values.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "P5\n" << hm.width() << " " << hm.height() << "\n255\n";
  for (double v : values) {
    const double scaled = peak > 0.0 ? std::round(255.0 * v / peak) : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0))));
  }
}

}  // namespace adl
