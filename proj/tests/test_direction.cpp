#include <doctest.h>

#include "adl/direction.hpp"
#include "support.hpp"

using namespace adl;

namespace {

// Three points on one open curve; the middle one is the landmark under test.
LandmarkScheme curve3() {
  return LandmarkScheme("curve", 3, {{"c", {0, 1, 2}, false}},
                        NormalizationSpec{{0, 2}, {std::vector<int>{0}, std::vector<int>{2}}});
}

// Point 2 lies on no edge.
LandmarkScheme with_free_point() {
  return LandmarkScheme("free", 3, {{"c", {0, 1}, false}},
                        NormalizationSpec{{0, 1}, {std::vector<int>{0}, std::vector<int>{1}}});
}

}  // namespace

TEST_CASE("interior frame from the second difference") {
  const PointSet truth({{0, 0}, {1, 1}, {2, 0}});
  const auto f = direction_frame(curve3(), truth, truth);
  CHECK(f[1].kind == FrameKind::curve_interior);
  CHECK(f[1].normal.x == doctest::Approx(0.0));
  CHECK(f[1].normal.y == doctest::Approx(-1.0));
  CHECK(f[1].tangent.x == doctest::Approx(-1.0));
  CHECK(f[1].tangent.y == doctest::Approx(0.0));
  CHECK(f[1].on_edge);
  CHECK_FALSE(f[1].degenerate);
}

TEST_CASE("endpoint frame uses the adjacent segment") {
  const PointSet truth({{0, 0}, {1, 1}, {2, 0}});
  const auto f = direction_frame(curve3(), truth, truth);
  CHECK(f[0].kind == FrameKind::curve_endpoint);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(f[0].tangent.x == doctest::Approx(r));
  CHECK(f[0].tangent.y == doctest::Approx(r));
  // Normal is the counter-clockwise perpendicular; T = S N still holds.
  CHECK(f[0].normal.x == doctest::Approx(-r));
  CHECK(f[0].normal.y == doctest::Approx(r));
  CHECK(skew(f[0].normal).x == doctest::Approx(f[0].tangent.x));
  CHECK(skew(f[0].normal).y == doctest::Approx(f[0].tangent.y));
  // Last point: segment runs from 1 to 2.
  CHECK(f[2].tangent.x == doctest::Approx(r));
  CHECK(f[2].tangent.y == doctest::Approx(-r));
}

TEST_CASE("collinear neighbors fall back to the chord perpendicular") {
  const PointSet truth({{0, 0}, {1, 0}, {2, 0}});
  const auto f = direction_frame(curve3(), truth, truth);
  CHECK(f[1].kind == FrameKind::chord_fallback);
  CHECK(f[1].degenerate);
  CHECK(std::abs(f[1].normal.y) == doctest::Approx(1.0));
  CHECK(std::abs(f[1].tangent.x) == doctest::Approx(1.0));
  CHECK(f[1].orthonormal());
}

TEST_CASE("uneven collinear neighbors follow the second difference") {
  // Second difference (1, 0) lies along the chord; kept as-is, not reinterpreted.
  const PointSet truth({{0, 0}, {0.5, 0}, {2, 0}});
  const auto f = direction_frame(curve3(), truth, truth);
  CHECK(f[1].kind == FrameKind::curve_interior);
  CHECK(f[1].normal.x == doctest::Approx(1.0));
}

TEST_CASE("coincident endpoint neighbors are undefined") {
  const PointSet truth({{1, 1}, {1, 1}, {2, 0}});
  const auto f = direction_frame(curve3(), truth, truth);
  CHECK(f[0].kind == FrameKind::undefined);
  CHECK(f[0].degenerate);
  CHECK_FALSE(f[0].orthonormal());
}

TEST_CASE("off-edge landmarks use the unit error") {
  const auto s = with_free_point();
  const PointSet truth({{0, 0}, {5, 0}, {0, 0}});
  PointSet pred = truth;
  pred[2] = {3, 4};
  const auto f = direction_frame(s, truth, pred);
  CHECK_FALSE(f[2].on_edge);
  CHECK(f[2].kind == FrameKind::error_vector);
  CHECK(f[2].normal.x == doctest::Approx(0.6));
  CHECK(f[2].normal.y == doctest::Approx(0.8));
  CHECK(f[2].tangent == f[2].normal);

  const auto same = direction_frame(s, truth, truth);
  CHECK(same[2].kind == FrameKind::undefined);
  CHECK(same[2].degenerate);
}

TEST_CASE("error decomposition") {
  LandmarkFrame axis;
  axis.normal = {0, 1};
  axis.tangent = {1, 0};
  axis.kind = FrameKind::curve_interior;
  axis.on_edge = true;
  auto c = decompose_error(axis, {1, 1});
  CHECK(c.normal == doctest::Approx(1.0));
  CHECK(c.tangent == doctest::Approx(1.0));
  c = decompose_error(axis, {0, 0});
  CHECK(c.normal == 0.0);
  CHECK(c.tangent == 0.0);
  CHECK(c.norm == 0.0);

  LandmarkFrame undefined;
  c = decompose_error(undefined, {3, 4});
  CHECK(c.normal == doctest::Approx(5.0 / std::sqrt(2.0)));
  CHECK(c.tangent == doctest::Approx(5.0 / std::sqrt(2.0)));
  CHECK(c.norm == doctest::Approx(5.0));

  test::Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const Vec2 n = rng.unit();
    LandmarkFrame f;
    f.normal = n;
    f.tangent = skew(n);
    f.kind = FrameKind::curve_interior;
    const auto e = decompose_error(f, {3, 4});
    CHECK(e.normal * e.normal + e.tangent * e.tangent == doctest::Approx(25.0).epsilon(1e-12));
  }
}

TEST_CASE("size mismatches") {
  const auto s = builtin_300w();
  const PointSet a(68, CoordUnit::image_px), b(67, CoordUnit::image_px);
  CHECK_THROWS_AS(direction_frame(s, a, b), DimensionError);
  CHECK_THROWS_AS(direction_frame(s, b, b), DimensionError);
  const auto f = direction_frame(s, a, a);
  CHECK_THROWS_AS(decompose_errors(f, b, b), DimensionError);
}

TEST_CASE("300W frames on random faces") {
  const auto s = builtin_300w();
  test::Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto truth = test::jittered_face(rng);
    const auto pred = test::perturbed(truth, rng, 2.0);
    const auto f = direction_frame(s, truth, pred);
    const auto comps = decompose_errors(f, truth, pred);
    for (std::size_t i = 0; i < f.size(); ++i) {
      REQUIRE(f[i].orthonormal());
      CHECK(std::abs(norm(f[i].normal) - 1.0) <= 1e-12);
      CHECK(std::abs(norm(f[i].tangent) - 1.0) <= 1e-12);
      CHECK(std::abs(dot(f[i].normal, f[i].tangent)) <= 1e-12);
      CHECK(std::abs(cross(f[i].normal, f[i].tangent) + 1.0) <= 1e-10);
      const double e2 = comps[i].norm * comps[i].norm;
      CHECK(std::abs(comps[i].normal * comps[i].normal + comps[i].tangent * comps[i].tangent - e2) <= 1e-10);
    }

    const double angle = rng.uniform(-M_PI, M_PI);
    const Vec2 shift = rng.vec(-50.0, 50.0);
    PointSet rt = truth, rp = pred, tt = truth, tp = pred;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      rt[i] = test::rotate(truth[i], angle);
      rp[i] = test::rotate(pred[i], angle);
      tt[i] = truth[i] + shift;
      tp[i] = pred[i] + shift;
    }
    const auto fr = direction_frame(s, rt, rp);
    const auto ft = direction_frame(s, tt, tp);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Vec2 rn = test::rotate(f[i].normal, angle), rtan = test::rotate(f[i].tangent, angle);
      CHECK(norm(fr[i].normal - rn) <= 1e-10);
      CHECK(norm(fr[i].tangent - rtan) <= 1e-10);
      CHECK(norm(ft[i].normal - f[i].normal) <= 1e-12);
      CHECK(norm(ft[i].tangent - f[i].tangent) <= 1e-12);
    }
  }
}
