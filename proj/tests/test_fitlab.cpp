#include <doctest.h>

#include "adl/direction.hpp"
#include "adl/fitlab.hpp"
#include "adl/heatmap_chain.hpp"
#include "support.hpp"

using namespace adl;

namespace {

HeatmapGeometry grid(int w, int h) {
  HeatmapGeometry g;
  g.width = w;
  g.height = h;
  return g;
}

double smooth_l1_point(Vec2 e) {
  const double r = norm(e);
  return r < 1.0 ? 0.5 * r * r : r - 0.5;
}

}  // namespace

TEST_CASE("face template") {
  const auto t = face_template_68();
  CHECK(t.size() == 68);
  CHECK(t.unit() == CoordUnit::heatmap_px);
  for (Vec2 p : t) {
    CHECK(p.x > 0.0);
    CHECK(p.x < 63.0);
    CHECK(p.y > 0.0);
    CHECK(p.y < 63.0);
  }
  // Every curve frame on the template is a regular (non-fallback) frame.
  const auto f = direction_frame(builtin_300w(), t, t);
  for (const auto &lf : f) CHECK_FALSE(lf.degenerate);
  CHECK(builtin_300w().normalization_distance(t, NormKind::inter_ocular) > 20.0);
}

TEST_CASE("synthetic annotations") {
  SynthConfig cfg;
  cfg.n_faces = 3;
  cfg.seed = 5;

  SUBCASE("zero noise reproduces the truth") {
    cfg.sigma_normal = 0.0;
    cfg.sigma_tangent = 0.0;
    const auto data = gen_synthetic(cfg);
    REQUIRE(data.truth.size() == 3);
    for (std::size_t f = 0; f < 3; ++f) {
      REQUIRE(data.annotations[f].size() == 8);
      for (const auto &a : data.annotations[f]) CHECK(a == data.truth[f]);
    }
  }

  SUBCASE("deterministic per seed") {
    const auto a = gen_synthetic(cfg);
    const auto b = gen_synthetic(cfg);
    CHECK(a.truth == b.truth);
    CHECK(a.annotations == b.annotations);
    cfg.seed = 6;
    CHECK_FALSE(gen_synthetic(cfg).truth == a.truth);
  }

  SUBCASE("noise is elongated along the tangent") {
    cfg.n_faces = 1;
    cfg.k_annotations = 10000;
    cfg.sigma_normal = 0.5;
    cfg.sigma_tangent = 1.0;
    const auto data = gen_synthetic(cfg);
    const auto frame = direction_frame(cfg.scheme, data.truth[0], data.truth[0]);
    for (std::size_t i : {0u, 8u, 20u, 30u, 36u, 45u, 51u, 62u}) {
      std::vector<Vec2> offsets, projected;
      for (const auto &a : data.annotations[0]) {
        const Vec2 e = a[i] - data.truth[0][i];
        offsets.push_back(e);
        projected.push_back({dot(frame[i].normal, e), dot(frame[i].tangent, e)});
      }
      const auto ellipse = fit_ellipse(offsets);
      CHECK(ellipse.major / ellipse.minor == doctest::Approx(2.0).epsilon(0.05));
      // Major axis along the tangent.
      const Vec2 axis{std::cos(ellipse.angle), std::sin(ellipse.angle)};
      CHECK(std::abs(dot(axis, frame[i].tangent)) > 0.99);
      CHECK(fit_ellipse(projected).major == doctest::Approx(1.0).epsilon(0.05));
    }
  }

  SUBCASE("validation") {
    SynthConfig bad = cfg;
    bad.sigma_tangent = 0.2;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
    bad = cfg;
    bad.k_annotations = 0;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
    bad = cfg;
    bad.base_shape = PointSet(10, CoordUnit::heatmap_px);
    CHECK_THROWS_AS(gen_synthetic(bad), DimensionError);
    bad = cfg;
    bad.sigma_normal = -0.1;
    CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
  }
}

TEST_CASE("coordinate fit") {
  SUBCASE("single annotation is reached") {
    test::Rng rng(1);
    const auto target = test::jittered_face(rng);
    FitConfig fit;
    fit.lambda = {1.0};
    const auto r = fit_coordinates(std::vector<PointSet>{target}, face_template_68(), builtin_300w(), fit);
    for (std::size_t i = 0; i < 68; ++i) CHECK(norm(r.fitted[i] - target[i]) <= 1e-3);
    CHECK(r.trace.loss.size() == static_cast<std::size_t>(r.trace.iterations) + 1);
  }

  SUBCASE("matches a grid search of the objective") {
    const auto s = test::two_point_scheme();
    test::Rng rng(2);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<PointSet> ann;
      const Vec2 centre = rng.vec(-2, 2);
      for (int k = 0; k < 5; ++k) ann.push_back(PointSet({centre + 0.35 * rng.unit() * rng.uniform(0, 1), {10, 0}}));
      FitConfig fit;
      fit.lambda = {1.0};
      fit.learning_rate = 0.5;
      fit.max_iters = 5000;
      const auto r = fit_coordinates(ann, PointSet({centre + Vec2{1.5, -1.0}, {10, 0}}), s, fit);

      Vec2 best;
      double best_value = 1e300;
      for (double x = centre.x - 1.0; x <= centre.x + 1.0; x += 0.01) {
        for (double y = centre.y - 1.0; y <= centre.y + 1.0; y += 0.01) {
          double v = 0.0;
          for (const auto &a : ann) v += smooth_l1_point(Vec2{x, y} - a[0]);
          if (v < best_value) {
            best_value = v;
            best = {x, y};
          }
        }
      }
      CHECK(norm(r.fitted[0] - best) <= 0.015);
    }
  }

  SUBCASE("loss traces under a small step") {
    auto cfg = standard_bias_config();
    cfg.synth.seed = 3;
    cfg.synth.n_faces = 2;
    const auto data = gen_synthetic(cfg.synth);
    FitConfig fit;
    fit.learning_rate = 1e-3;
    fit.max_iters = 400;
    fit.tolerance = 0.0;
    for (std::size_t f = 0; f < 2; ++f) {
      fit.lambda = {1.0};
      const auto iso = fit_coordinates(data.annotations[f], cfg.synth.base_shape, cfg.synth.scheme, fit);
      for (std::size_t k = 1; k < iso.trace.loss.size(); ++k) CHECK(iso.trace.loss[k] <= iso.trace.loss[k - 1]);

      // With lambda != 1 the objective jumps up where a residual enters the
      // unit disc; every other step must still descend.
      fit.lambda = {2.0};
      const auto aniso = fit_coordinates(data.annotations[f], cfg.synth.base_shape, cfg.synth.scheme, fit);
      REQUIRE(aniso.trace.boundary_crossings.size() + 1 == aniso.trace.loss.size());
      int crossing_steps = 0;
      for (std::size_t k = 1; k < aniso.trace.loss.size(); ++k) {
        if (aniso.trace.boundary_crossings[k - 1] > 0) {
          ++crossing_steps;
          continue;
        }
        CHECK(aniso.trace.loss[k] <= aniso.trace.loss[k - 1]);
      }
      CHECK(crossing_steps < 20);
    }
  }

  SUBCASE("deterministic traces") {
    auto cfg = standard_bias_config();
    cfg.synth.n_faces = 1;
    const auto data = gen_synthetic(cfg.synth);
    const auto a = fit_coordinates(data.annotations[0], cfg.synth.base_shape, cfg.synth.scheme, cfg.fit);
    const auto b = fit_coordinates(data.annotations[0], cfg.synth.base_shape, cfg.synth.scheme, cfg.fit);
    CHECK(a.trace.loss == b.trace.loss);
    CHECK(a.fitted == b.fitted);
  }

  SUBCASE("divergence names the step") {
    FitConfig fit;
    fit.learning_rate = 1e12;
    const auto t = face_template_68();
    PointSet ann = t;
    ann[0] += Vec2{3, 0};
    try {
      fit_coordinates(std::vector<PointSet>{ann}, t, builtin_300w(), fit);
      FAIL("expected divergence");
    } catch (const DivergenceError &e) {
      CHECK(e.iteration() == 1);
      CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
  }

  SUBCASE("input validation") {
    FitConfig fit;
    const auto t = face_template_68();
    CHECK_THROWS_AS(fit_coordinates(std::vector<PointSet>{}, t, builtin_300w(), fit), InputError);
    CHECK_THROWS_AS(fit_coordinates(std::vector<PointSet>{PointSet(3, CoordUnit::heatmap_px)}, t, builtin_300w(), fit),
                    DimensionError);
    fit.learning_rate = 0.0;
    CHECK_THROWS_AS(fit_coordinates(std::vector<PointSet>{t}, t, builtin_300w(), fit), ConfigError);
    fit = {};
    fit.max_iters = 0;
    CHECK_THROWS_AS(fit_coordinates(std::vector<PointSet>{t}, t, builtin_300w(), fit), ConfigError);
  }
}

TEST_CASE("heatmap fit") {
  const auto s = test::two_point_scheme();
  const auto g = grid(32, 32);
  const PointSet targets({{7, 20}, {25, 11}}, CoordUnit::heatmap_px);
  FitConfig fit;
  fit.learning_rate = 100.0;

  SUBCASE("uniform mask") {
    HeatmapFitOptions opt;
    opt.mask = Heatmap(g, HeatmapKind::point_edge, 2);
    for (double &v : opt.mask->data()) v = 1.0;
    const auto r = fit_heatmap_logits(targets, s, g, fit, opt);
    CHECK(r.trace.iterations <= 2000);
    for (std::size_t i = 0; i < 2; ++i) CHECK(norm(r.decoded[i] - targets[i]) <= 0.25);
  }

  SUBCASE("mask with a single open pixel decodes exactly") {
    HeatmapFitOptions opt;
    opt.mask = Heatmap(g, HeatmapKind::point_edge, 2);
    opt.mask->at(0, 20, 7) = 1.0;
    opt.mask->at(1, 11, 25) = 1.0;
    fit.max_iters = 1;
    const auto r = fit_heatmap_logits(targets, s, g, fit, opt);
    for (std::size_t i = 0; i < 2; ++i) CHECK(norm(r.decoded[i] - targets[i]) <= 1e-6);
  }

  SUBCASE("empty mask is degenerate") {
    HeatmapFitOptions opt;
    opt.mask = Heatmap(g, HeatmapKind::point_edge, 2);
    CHECK_THROWS_AS(fit_heatmap_logits(targets, s, g, fit, opt), DegeneracyError);
  }

  SUBCASE("targets must lie on the grid") {
    CHECK_THROWS_AS(fit_heatmap_logits(PointSet({{7, 20}, {40, 11}}, CoordUnit::heatmap_px), s, g, fit), InputError);
  }

  SUBCASE("image-pixel targets are scaled by the stride") {
    fit.max_iters = 3000;
    const auto r = fit_heatmap_logits(PointSet({{28, 80}, {100, 44}}, CoordUnit::image_px), s, g, fit);
    CHECK(r.decoded.unit() == CoordUnit::heatmap_px);
    for (std::size_t i = 0; i < 2; ++i) CHECK(norm(r.decoded[i] - targets[i]) <= 0.25);
  }

  SUBCASE("learned mask lowers the composite loss") {
    HeatmapFitOptions opt;
    opt.learn_mask = true;
    fit.max_iters = 200;
    const auto r = fit_heatmap_logits(targets, s, g, fit, opt);
    CHECK(r.trace.loss.back() < r.trace.loss.front());
  }
}

TEST_CASE("lambda estimation") {
  test::Rng rng(77);
  std::vector<std::vector<Vec2>> iso(3), aniso(3);
  for (int k = 0; k < 10000; ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      iso[i].push_back({rng.gauss(0.7), rng.gauss(0.7)});
      aniso[i].push_back({rng.gauss(0.5), rng.gauss(1.0)});
    }
  }
  const auto a = estimate_lambda(iso);
  for (double l : a.lambda) CHECK(l == doctest::Approx(1.0).epsilon(0.1));
  const auto b = estimate_lambda(aniso);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(b.lambda[i] == doctest::Approx(2.0).epsilon(0.1));
    CHECK_FALSE(b.degenerate[i]);
    CHECK(b.ellipses[i].major >= b.ellipses[i].minor);
  }

  const std::vector<std::vector<Vec2>> same{{{0.1, 0.2}, {0.1, 0.2}, {0.1, 0.2}}};
  const auto c = estimate_lambda(same);
  CHECK(c.degenerate[0]);
  CHECK(c.lambda[0] == kLambdaMin);

  const std::vector<std::vector<Vec2>> line{{{0, 0}, {0, 1}, {0, 2}, {0, 3}}};
  const auto d = estimate_lambda(line);
  CHECK(d.degenerate[0]);
  CHECK(d.lambda[0] == kLambdaMax);

  std::vector<std::vector<Vec2>> thin(1);
  for (int k = 0; k < 1000; ++k) thin[0].push_back({rng.gauss(0.01), rng.gauss(1.0)});
  CHECK(estimate_lambda(thin).lambda[0] == kLambdaMax);

  const std::vector<std::vector<Vec2>> few{{{0, 0}, {1, 1}}};
  CHECK_THROWS_AS(estimate_lambda(few), InputError);
}

TEST_CASE("bias experiment") {
  auto cfg = standard_bias_config();
  cfg.n_seeds = 4;
  cfg.keep_traces = true;
  const auto serial = run_bias_experiment(cfg);
  cfg.threads = 3;
  const auto parallel = run_bias_experiment(cfg);
  REQUIRE(serial.outcomes.size() == 2);
  for (std::size_t l = 0; l < 2; ++l) {
    REQUIRE(serial.outcomes[l].size() == 4);
    for (std::size_t s = 0; s < 4; ++s) {
      CHECK(serial.outcomes[l][s].seed == cfg.base_seed + s);
      CHECK(serial.outcomes[l][s].median_normal == parallel.outcomes[l][s].median_normal);
      CHECK(serial.outcomes[l][s].bias_rate == parallel.outcomes[l][s].bias_rate);
      CHECK(serial.outcomes[l][s].traces.size() == static_cast<std::size_t>(cfg.synth.n_faces));
    }
  }
  CHECK(serial.normal_wins(1, 0) + serial.normal_wins(0, 1) <= 4);
  CHECK(serial.median_bias_rate(1) > serial.median_bias_rate(0));

  cfg.n_seeds = 0;
  CHECK_THROWS_AS(run_bias_experiment(cfg), ConfigError);
}
