#include "adl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "adl/direction.hpp"
#include "adl/heatmap.hpp"
#include "adl/heatmap_chain.hpp"
#include "adl/loss.hpp"
#include "adl/scheme.hpp"

namespace adl {

std::vector<double> central_difference(const std::function<double(std::span<const double>)> &f,
                                       std::span<const double> x, std::span<const std::size_t> coords, double step) {
  std::vector<double> work(x.begin(), x.end());
  std::vector<double> out;
  out.reserve(coords.size());
  for (std::size_t k : coords) {
    const double x0 = work[k];
    work[k] = x0 + step;
    const double up = f(work);
    work[k] = x0 - step;
    const double down = f(work);
    work[k] = x0;
    out.push_back((up - down) / (2.0 * step));
  }
  return out;
}

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    diff = std::max(diff, std::abs(analytic[k] - numeric[k]));
    scale = std::max({scale, std::abs(analytic[k]), std::abs(numeric[k])});
  }
  return scale == 0.0 ? diff : diff / scale;
}

namespace {

GradCheckResult compare(std::string name, std::span<const double> analytic_full,
                        const std::function<double(std::span<const double>)> &f, std::span<const double> x,
                        std::span<const std::size_t> coords, const GradCheckOptions &opt) {
  std::vector<double> analytic;
  for (std::size_t k : coords) analytic.push_back(analytic_full[k]);
  const auto numeric = central_difference(f, x, coords, opt.step);
  GradCheckResult r;
  r.name = std::move(name);
  r.max_rel_error = relative_error(analytic, numeric);
  r.coordinates = coords.size();
  r.passed = r.max_rel_error <= opt.tolerance;
  return r;
}

std::vector<std::size_t> all_coords(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::vector<double> flatten(const PointSet &p) {
  std::vector<double> v;
  for (Vec2 q : p) {
    v.push_back(q.x);
    v.push_back(q.y);
  }
  return v;
}

PointSet unflatten(std::span<const double> v, CoordUnit unit) {
  PointSet p(v.size() / 2, unit);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = {v[2 * i], v[2 * i + 1]};
  return p;
}

// Truth = jittered template; residual lengths drawn from [lo, hi] and kept
// at least `margin` away from 1.
struct CoordCase {
  PointSet truth;
  PointSet pred;
  DirectionFrame frame;
  ADLConfig cfg;
};

CoordCase coord_case(std::mt19937_64 &rng, double margin) {
  const auto scheme = builtin_300w();
  std::uniform_real_distribution<double> jitter(-0.5, 0.5), angle(0.0, 6.283185307179586), len(0.05, 3.0),
      lam(1.0, 4.0);
  CoordCase c;
  c.truth = face_template_68();
  for (std::size_t i = 0; i < c.truth.size(); ++i) c.truth[i] += Vec2{jitter(rng), jitter(rng)};
  c.pred = c.truth;
  for (std::size_t i = 0; i < c.pred.size(); ++i) {
    double r = len(rng);
    while (std::abs(r - 1.0) < margin) r = len(rng);
    const double a = angle(rng);
    c.pred[i] += Vec2{r * std::cos(a), r * std::sin(a)};
  }
  c.frame = direction_frame(scheme, c.truth, c.pred);
  c.cfg.lambda.clear();
  for (std::size_t i = 0; i < c.truth.size(); ++i) c.cfg.lambda.push_back(lam(rng));
  return c;
}

// Six landmarks on two curves sharing a corner, small enough for a full check.
LandmarkScheme toy_scheme() {
  std::vector<EdgeDef> edges{{"upper", {0, 1, 2, 3}, false}, {"lower", {3, 4, 5}, false}};
  NormalizationSpec norm{{0, 3}, {std::vector<int>{0, 1}, std::vector<int>{2, 3}}};
  return LandmarkScheme("toy", 6, std::move(edges), norm);
}

}  // namespace

GradCheckResult check_smooth_adl1(const GradCheckOptions &opt) {
  std::mt19937_64 rng(opt.seed);
  const auto c = coord_case(rng, opt.boundary_margin);
  const auto x = flatten(c.pred);
  const auto f = [&](std::span<const double> v) {
    return smooth_adl1(unflatten(v, c.pred.unit()), c.truth, c.frame, c.cfg).value;
  };
  const auto g = smooth_adl1(c.pred, c.truth, c.frame, c.cfg).grad;
  const auto coords = all_coords(x.size());
  return compare("smooth_adl1", g, f, x, coords, opt);
}

GradCheckResult check_adl2(const GradCheckOptions &opt) {
  std::mt19937_64 rng(opt.seed + 1);
  auto c = coord_case(rng, 0.0);
  c.cfg.n = 2;
  const auto x = flatten(c.pred);
  const auto f = [&](std::span<const double> v) {
    return adl_n(unflatten(v, c.pred.unit()), c.truth, c.frame, c.cfg).value;
  };
  const auto g = adl_n(c.pred, c.truth, c.frame, c.cfg).grad;
  const auto coords = all_coords(x.size());
  return compare("adl2", g, f, x, coords, opt);
}

GradCheckResult check_awing(const GradCheckOptions &opt) {
  std::mt19937_64 rng(opt.seed + 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const AWingConfig cfg;
  std::vector<double> pred, truth;
  while (pred.size() < 400) {
    const double t = unit(rng) < 0.3 ? 0.0 : unit(rng);
    const double p = unit(rng);
    const double d = std::abs(p - t);
    if (d < opt.boundary_margin || std::abs(d - cfg.theta) < opt.boundary_margin) continue;
    pred.push_back(p);
    truth.push_back(t);
  }
  const auto f = [&](std::span<const double> v) { return awing(v, truth, cfg).value; };
  const auto g = awing(pred, truth, cfg).grad;
  const auto coords = all_coords(pred.size());
  return compare("awing", g, f, pred, coords, opt);
}

GradCheckResult check_soft_argmax(const GradCheckOptions &opt) {
  std::mt19937_64 rng(opt.seed + 3);
  std::uniform_real_distribution<double> unit(0.05, 1.0), up(-1.0, 1.0);
  HeatmapGeometry geom;
  geom.width = 9;
  geom.height = 7;
  const int channels = 3;
  Heatmap h(geom, HeatmapKind::landmarks, channels), mask(geom, HeatmapKind::point_edge, channels);
  for (double &v : h.data()) v = unit(rng);
  for (double &v : mask.data()) v = unit(rng);
  std::vector<double> upstream(2 * channels);
  for (double &v : upstream) v = up(rng);

  // Variables: [landmarks | mask].
  std::vector<double> x(h.data().begin(), h.data().end());
  x.insert(x.end(), mask.data().begin(), mask.data().end());
  const std::size_t half = h.data().size();
  const auto f = [&](std::span<const double> v) {
    Heatmap hh(geom, HeatmapKind::landmarks, channels), mm(geom, HeatmapKind::point_edge, channels);
    std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(half), hh.data().begin());
    std::copy(v.begin() + static_cast<std::ptrdiff_t>(half), v.end(), mm.data().begin());
    const auto p = soft_argmax(hh, mm).points;
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += upstream[2 * i] * p[i].x + upstream[2 * i + 1] * p[i].y;
    return s;
  };
  const auto decoded = soft_argmax(h, mask);
  const auto grads = soft_argmax_backward(h, mask, decoded, upstream);
  std::vector<double> g = grads.d_landmarks;
  g.insert(g.end(), grads.d_mask.begin(), grads.d_mask.end());
  const auto coords = all_coords(x.size());
  return compare("soft_argmax", g, f, x, coords, opt);
}

GradCheckResult check_heatmap_chain(bool learn_mask, const GradCheckOptions &opt) {
  const auto scheme = toy_scheme();
  HeatmapGeometry geom;
  geom.width = 10;
  geom.height = 10;
  geom.sigma_point = 1.2;
  PointSet targets({{2.0, 3.0}, {3.6, 2.2}, {5.5, 2.4}, {7.3, 3.4}, {5.2, 6.1}, {3.1, 6.8}}, CoordUnit::heatmap_px);
  HeatmapFitOptions options;
  options.learn_mask = learn_mask;
  options.init_noise = 1.0;
  const HeatmapChain chain(scheme, targets, geom, ADLConfig{1, {1.0, 1.5, 2.0, 2.5, 3.0, 3.5}}, options);

  // Reseed until every decoded residual is clear of the |e| = 1 kink.
  std::vector<double> x;
  for (std::uint64_t s = opt.seed;; ++s) {
    x = chain.initial_variables(s);
    const auto p = chain.evaluate(x, false).decoded.points;
    bool clear = true;
    for (std::size_t i = 0; i < p.size(); ++i) clear = clear && std::abs(norm(p[i] - targets[i]) - 1.0) >= opt.boundary_margin;
    if (clear) break;
  }

  // Skip mask variables whose AWing residual sits near |d| = theta.
  const std::size_t n_z = scheme.n_points() * geom.pixels();
  const auto sigmoid = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
  std::vector<std::size_t> coords;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (k >= n_z) {
      const std::size_t j = k - n_z;
      const bool point = j < n_z;
      const double target = point ? chain.point_target().data()[j] : chain.edge_target().data()[j - n_z];
      const double d = std::abs(sigmoid(x[k]) - target);
      if (std::abs(d - options.awing.theta) < opt.boundary_margin || d < opt.boundary_margin) continue;
    }
    coords.push_back(k);
  }
  const auto f = [&](std::span<const double> v) { return chain.evaluate(v, false).value; };
  const auto g = chain.evaluate(x).grad;
  return compare(learn_mask ? "heatmap_chain_learned_mask" : "heatmap_chain_fixed_mask", g, f, x, coords, opt);
}

std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckOptions &opt) {
  return {check_smooth_adl1(opt), check_adl2(opt),
          check_awing(opt),       check_soft_argmax(opt),
          check_heatmap_chain(false, opt), check_heatmap_chain(true, opt)};
}

}  // namespace adl
