#pragma once

#include <vector>

#include "adl/core.hpp"
#include "adl/scheme.hpp"

namespace adl {

// Vectors shorter than this (in the points' declared unit) are treated as
// zero when building a frame.
inline constexpr double kFrameDegeneracyThreshold = 1e-9;

enum class FrameKind {
  curve_interior,  // normalized second difference of the two template neighbors
  curve_endpoint,  // perpendicular of the single adjacent segment
  chord_fallback,  // second difference vanished; perpendicular of the neighbor chord
  error_vector,    // landmark off every edge: N = T = unit error
  undefined,       // nothing to normalize; N = T = 0
};

// Per-landmark projection basis.
//
// For on-edge landmarks T = S * N with S = [[0, 1], [-1, 0]], so det([N T]) = -1.
// Off-edge landmarks use the unit error vector for both directions. Degenerate
// frames keep whatever fallback basis applies and are flagged, never hidden.
struct LandmarkFrame {
  Vec2 normal;
  Vec2 tangent;
  bool on_edge = false;
  bool degenerate = false;
  FrameKind kind = FrameKind::undefined;

  // True when normal/tangent form an orthonormal pair.
  bool orthonormal() const {
    return kind == FrameKind::curve_interior || kind == FrameKind::curve_endpoint || kind == FrameKind::chord_fallback;
  }
};

class DirectionFrame {
 public:
  DirectionFrame() = default;
  explicit DirectionFrame(std::vector<LandmarkFrame> frames) : frames_(std::move(frames)) {}

  std::size_t size() const { return frames_.size(); }
  const LandmarkFrame &operator[](std::size_t i) const { return frames_[i]; }
  auto begin() const { return frames_.begin(); }
  auto end() const { return frames_.end(); }

 private:
  std::vector<LandmarkFrame> frames_;
};

// On-edge frames depend only on `truth` (template neighbors); off-edge frames
// also use `pred`.
DirectionFrame direction_frame(const LandmarkScheme &scheme, const PointSet &truth, const PointSet &pred);

struct ErrorComponents {
  double normal = 0.0;   // N . (p - p_hat)
  double tangent = 0.0;  // T . (p - p_hat)
  double norm = 0.0;     // |p - p_hat|
};

// Undefined frames split the error evenly: normal = tangent = |e| / sqrt(2),
// both non-negative.
ErrorComponents decompose_error(const LandmarkFrame &frame, Vec2 error);

// Per-landmark projections of pred - truth.
std::vector<ErrorComponents> decompose_errors(const DirectionFrame &frame, const PointSet &truth, const PointSet &pred);

}  // namespace adl
