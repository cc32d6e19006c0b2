#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adl/core.hpp"
#include "adl/scheme.hpp"

namespace adl {

struct HeatmapGeometry {
  int width = 64;
  int height = 64;
  double stride = 4.0;       // image px per heatmap px (256 -> 64)
  double sigma_point = 1.5;  // point Gaussian sigma, heatmap px
  double edge_width = 1.0;   // falloff width around edge polylines, heatmap px

  void validate() const;
  std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  Vec2 center() const { return {(width - 1) / 2.0, (height - 1) / 2.0}; }
};

enum class HeatmapKind { point, edge, point_edge, landmarks };

const char *to_string(HeatmapKind kind);
HeatmapKind heatmap_kind_from_string(const std::string &name);

// C channels of height x width non-negative values, channel-major then
// row-major. Pixel (ix, iy) sits at continuous coordinate (ix, iy).
class Heatmap {
 public:
  Heatmap(HeatmapGeometry geom, HeatmapKind kind, int channels);

  const HeatmapGeometry &geometry() const { return geom_; }
  HeatmapKind kind() const { return kind_; }
  int channels() const { return channels_; }
  int width() const { return geom_.width; }
  int height() const { return geom_.height; }

  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }
  double &at(int c, int y, int x) { return data_[index(c, y, x)]; }

  std::span<const double> channel(int c) const { return {data_.data() + offset(c), geom_.pixels()}; }
  std::span<double> channel(int c) { return {data_.data() + offset(c), geom_.pixels()}; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool same_shape(const Heatmap &o) const {
    return channels_ == o.channels_ && geom_.width == o.geom_.width && geom_.height == o.geom_.height;
  }

 private:
  std::size_t offset(int c) const { return static_cast<std::size_t>(c) * geom_.pixels(); }
  std::size_t index(int c, int y, int x) const {
    return offset(c) + static_cast<std::size_t>(y) * static_cast<std::size_t>(geom_.width) + static_cast<std::size_t>(x);
  }

  HeatmapGeometry geom_;
  HeatmapKind kind_;
  int channels_;
  std::vector<double> data_;
};

// One Gaussian per landmark. Channels whose landmark lies inside the grid are
// scaled so their maximum pixel is exactly 1. Image-pixel input is divided by
// the stride first.
Heatmap gen_point_heatmap(const LandmarkScheme &scheme, const PointSet &truth, const HeatmapGeometry &geom);

// One channel per edge: exp(-d^2 / (2 w^2)) with d the Euclidean distance to
// the edge polyline (closed edges include the wrap segment).
Heatmap gen_edge_heatmap(const LandmarkScheme &scheme, const PointSet &truth, const HeatmapGeometry &geom);

// Per pixel: H_edge = Mat_E2P * H_edge_hat. No clamping.
Heatmap apply_e2p(const Heatmap &edge_hm, const E2PMatrix &mat);

// Elementwise product of two n_point-channel maps.
Heatmap fuse_point_edge(const Heatmap &point_hm, const Heatmap &edge_hm);

inline constexpr double kSoftArgmaxEpsilon = 1e-8;

struct SoftArgmaxResult {
  PointSet points;               // heatmap px
  std::vector<bool> degenerate;  // channel had no mass; decoded to the grid center
};

// Per channel: masked map M = H * mask, P = sum(pos * M) / (sum(M) + eps).
SoftArgmaxResult soft_argmax(const Heatmap &landmarks, const Heatmap &mask);

struct SoftArgmaxGrads {
  std::vector<double> d_landmarks;
  std::vector<double> d_mask;
};

// Chain rule through soft_argmax. `upstream` holds dL/dP as [x0, y0, x1, ...].
// Degenerate channels have zero gradient.
SoftArgmaxGrads soft_argmax_backward(const Heatmap &landmarks, const Heatmap &mask, const SoftArgmaxResult &decoded,
                                     std::span<const double> upstream);

struct ChannelJacobian {
  std::vector<double> dx;  // dPx / dH(pixel)
  std::vector<double> dy;  // dPy / dH(pixel)
};

ChannelJacobian soft_argmax_jacobian(const Heatmap &landmarks, const Heatmap &mask, int channel);

// Binary dump: `<stem>.f32` holds little-endian float32 values in the
// in-memory order; `<stem>.json` is {"channels","height","kind","stride","width"}.
void write_heatmap_dump(const Heatmap &hm, const std::filesystem::path &stem);
Heatmap read_heatmap_dump(const std::filesystem::path &stem);

// 8-bit binary PGM of one channel, scaled so the channel maximum maps to 255.
void write_pgm(const Heatmap &hm, int channel, const std::filesystem::path &path);

}  // namespace adl
