#include "adl/direction.hpp"

#include <numbers>

namespace adl {

namespace {

// Frame whose tangent runs along `along`; N is its counter-clockwise
// perpendicular so that T = S * N still holds.
bool frame_from_tangent(Vec2 along, LandmarkFrame &f) {
  const double len = norm(along);
  if (len < kFrameDegeneracyThreshold) return false;
  f.tangent = along / len;
  f.normal = skew_inverse(f.tangent);
  return true;
}

LandmarkFrame off_edge_frame(Vec2 error) {
  LandmarkFrame f;
  const double len = norm(error);
  if (len < kFrameDegeneracyThreshold) {
    f.kind = FrameKind::undefined;
    f.degenerate = true;
    return f;
  }
  f.kind = FrameKind::error_vector;
  f.normal = f.tangent = error / len;
  return f;
}

LandmarkFrame on_edge_frame(const Neighborhood &nb, const PointSet &truth, std::size_t i) {
  LandmarkFrame f;
  f.on_edge = true;
  const Vec2 self = truth[i];

  if (nb.kind == Neighborhood::Kind::endpoint) {
    const Vec2 along = nb.next >= 0 ? truth[static_cast<std::size_t>(nb.next)] - self
                                    : self - truth[static_cast<std::size_t>(nb.pre)];
    if (frame_from_tangent(along, f)) {
      f.kind = FrameKind::curve_endpoint;
    } else {
      f.kind = FrameKind::undefined;
      f.degenerate = true;
    }
    return f;
  }

  const Vec2 pre = truth[static_cast<std::size_t>(nb.pre)];
  const Vec2 next = truth[static_cast<std::size_t>(nb.next)];
  const Vec2 second_diff = pre + next - 2.0 * self;
  const double len = norm(second_diff);
  if (len >= kFrameDegeneracyThreshold) {
    f.kind = FrameKind::curve_interior;
    f.normal = second_diff / len;
    f.tangent = skew(f.normal);
    return f;
  }
  f.degenerate = true;
  f.kind = frame_from_tangent(next - pre, f) ? FrameKind::chord_fallback : FrameKind::undefined;
  return f;
}

}  // namespace

DirectionFrame direction_frame(const LandmarkScheme &scheme, const PointSet &truth, const PointSet &pred) {
  const auto n = static_cast<std::size_t>(scheme.n_points());
  require_sizes(truth, pred, n, "direction_frame");
  std::vector<LandmarkFrame> frames;
  frames.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto &nb = scheme.neighbors(static_cast<int>(i));
    frames.push_back(nb.kind == Neighborhood::Kind::none ? off_edge_frame(pred[i] - truth[i])
                                                          : on_edge_frame(nb, truth, i));
  }
  return DirectionFrame(std::move(frames));
}

ErrorComponents decompose_error(const LandmarkFrame &frame, Vec2 error) {
  ErrorComponents c;
  c.norm = norm(error);
  if (frame.kind == FrameKind::undefined) {
    c.normal = c.tangent = c.norm / std::numbers::sqrt2;
    return c;
  }
  c.normal = dot(frame.normal, error);
  c.tangent = dot(frame.tangent, error);
  return c;
}

std::vector<ErrorComponents> decompose_errors(const DirectionFrame &frame, const PointSet &truth, const PointSet &pred) {
  require_sizes(truth, pred, frame.size(), "decompose_errors");
  std::vector<ErrorComponents> out;
  out.reserve(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) out.push_back(decompose_error(frame[i], pred[i] - truth[i]));
  return out;
}

}  // namespace adl
