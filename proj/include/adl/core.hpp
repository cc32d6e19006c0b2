#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adl {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 &operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2 &operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2 &operator*=(double s) { x *= s; y *= s; return *this; }
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend constexpr Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
  friend constexpr Vec2 operator/(Vec2 v, double s) { return {v.x / s, v.y / s}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline bool is_finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

// Rotation by the skew-symmetric matrix [[0, 1], [-1, 0]]; maps a normal to its tangent.
constexpr Vec2 skew(Vec2 v) { return {v.y, -v.x}; }
// Inverse of skew(): maps a tangent back to its normal.
constexpr Vec2 skew_inverse(Vec2 v) { return {-v.y, v.x}; }

// Error hierarchy. Everything thrown by the library derives from adl::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string &what, std::size_t line);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string &what, int iteration);
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

enum class CoordUnit { image_px, heatmap_px };

const char *to_string(CoordUnit unit);

// One face's 2D landmark coordinates in a declared unit.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::vector<Vec2> coords, CoordUnit unit = CoordUnit::image_px);
  PointSet(std::size_t n, CoordUnit unit);

  std::size_t size() const { return coords_.size(); }
  bool empty() const { return coords_.empty(); }
  CoordUnit unit() const { return unit_; }

  const Vec2 &operator[](std::size_t i) const { return coords_[i]; }
  Vec2 &operator[](std::size_t i) { return coords_[i]; }

  std::span<const Vec2> coords() const { return coords_; }
  std::span<Vec2> coords() { return coords_; }
  auto begin() const { return coords_.begin(); }
  auto end() const { return coords_.end(); }

  // Image pixels divided by stride; pixel (ix, iy) sits at continuous (ix, iy).
  PointSet to_heatmap(double stride) const;
  PointSet to_image(double stride) const;

  bool all_finite() const;
  // Throws InputError naming the first non-finite landmark.
  void require_finite(const char *what) const;

  friend bool operator==(const PointSet &, const PointSet &) = default;

 private:
  std::vector<Vec2> coords_;
  CoordUnit unit_ = CoordUnit::image_px;
};

// Throws DimensionError unless both sets have `expected` points.
void require_sizes(const PointSet &a, const PointSet &b, std::size_t expected, const char *op);

// Round to at most 6 significant digits; used for every number written to reports.
double round_sig6(double v);
// Shortest text for round_sig6(v).
std::string format_sig6(double v);

}  // namespace adl
