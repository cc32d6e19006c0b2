#include "adl/core.hpp"

#include <cstdio>
#include <cstdlib>

namespace adl {

ParseError::ParseError(const std::string &what, std::size_t line)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

DivergenceError::DivergenceError(const std::string &what, int iteration)
    : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}

const char *to_string(CoordUnit unit) {
  return unit == CoordUnit::image_px ? "image_px" : "heatmap_px";
}

PointSet::PointSet(std::vector<Vec2> coords, CoordUnit unit) : coords_(std::move(coords)), unit_(unit) {
  require_finite("PointSet");
}

PointSet::PointSet(std::size_t n, CoordUnit unit) : coords_(n), unit_(unit) {}

PointSet PointSet::to_heatmap(double stride) const {
  if (unit_ == CoordUnit::heatmap_px) return *this;
  PointSet out(size(), CoordUnit::heatmap_px);
  for (std::size_t i = 0; i < size(); ++i) out.coords_[i] = coords_[i] / stride;
  return out;
}

PointSet PointSet::to_image(double stride) const {
  if (unit_ == CoordUnit::image_px) return *this;
  PointSet out(size(), CoordUnit::image_px);
  for (std::size_t i = 0; i < size(); ++i) out.coords_[i] = coords_[i] * stride;
  return out;
}

bool PointSet::all_finite() const {
  for (const auto &p : coords_)
    if (!is_finite(p)) return false;
  return true;
}

void PointSet::require_finite(const char *what) const {
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (!is_finite(coords_[i]))
      throw InputError(std::string(what) + ": landmark " + std::to_string(i) + " has a non-finite coordinate");
  }
}

void require_sizes(const PointSet &a, const PointSet &b, std::size_t expected, const char *op) {
  if (a.size() != expected || b.size() != expected) {
    throw DimensionError(std::string(op) + ": expected " + std::to_string(expected) + " points, got " +
                         std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
}

double round_sig6(double v) {
  if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

std::string format_sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v == 0.0 ? 0.0 : v);
  return buf;
}

}  // namespace adl
