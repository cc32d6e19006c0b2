#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "adl/core.hpp"
#include "adl/fitlab.hpp"
#include "adl/scheme.hpp"

namespace adl::test {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double gauss(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  Vec2 vec(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi)}; }
  Vec2 unit() {
    const double a = uniform(0.0, 2.0 * M_PI);
    return {std::cos(a), std::sin(a)};
  }
  std::mt19937_64 &engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Template face with per-landmark jitter; keeps curve neighbors well separated.
inline PointSet jittered_face(Rng &rng, double jitter = 0.8, double scale = 1.0) {
  PointSet p = face_template_68();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = scale * p[i] + Vec2{rng.gauss(jitter), rng.gauss(jitter)};
  return p;
}

inline PointSet perturbed(const PointSet &base, Rng &rng, double sd) {
  PointSet p = base;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += Vec2{rng.gauss(sd), rng.gauss(sd)};
  return p;
}

inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Three points on two edges sharing point 1: E2P rows [1,0], [1,1], [0,1].
inline LandmarkScheme three_point_scheme() {
  return LandmarkScheme("three", 3, {{"a", {0, 1}, false}, {"b", {1, 2}, false}},
                        NormalizationSpec{{0, 2}, {std::vector<int>{0}, std::vector<int>{2}}});
}

// Two landmarks on one segment.
inline LandmarkScheme two_point_scheme() {
  return LandmarkScheme("two", 2, {{"segment", {0, 1}, false}},
                        NormalizationSpec{{0, 1}, {std::vector<int>{0}, std::vector<int>{1}}});
}

}  // namespace adl::test
