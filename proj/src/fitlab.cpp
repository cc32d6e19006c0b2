#include "adl/fitlab.hpp"

#include <algorithm>
#include <numbers>
#include <random>
#include <thread>

#include "adl/heatmap_chain.hpp"

namespace adl {

void SynthConfig::validate() const {
  if (base_shape.size() != static_cast<std::size_t>(scheme.n_points()))
    throw DimensionError("SynthConfig: base shape has " + std::to_string(base_shape.size()) + " points, scheme has " +
                         std::to_string(scheme.n_points()));
  if (!(sigma_normal >= 0.0) || !(sigma_tangent >= sigma_normal))
    throw ConfigError("SynthConfig: need 0 <= sigma_normal <= sigma_tangent");
  if (k_annotations < 1) throw ConfigError("SynthConfig: k_annotations must be >= 1");
  if (n_faces < 1) throw ConfigError("SynthConfig: n_faces must be >= 1");
  if (variation.rotation_deg < 0.0 || variation.scale < 0.0 || variation.translation < 0.0 || variation.jitter < 0.0)
    throw ConfigError("SynthConfig: variation std-devs must be non-negative");
}

SyntheticSet gen_synthetic(const SynthConfig &cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = cfg.base_shape.size();

  Vec2 centroid;
  for (Vec2 p : cfg.base_shape) centroid += p;
  centroid = centroid / static_cast<double>(n);

  SyntheticSet out;
  for (int f = 0; f < cfg.n_faces; ++f) {
    const double angle = cfg.variation.rotation_deg * gauss(rng) * std::numbers::pi / 180.0;
    const double scale = 1.0 + cfg.variation.scale * gauss(rng);
    const Vec2 shift{cfg.variation.translation * gauss(rng), cfg.variation.translation * gauss(rng)};
    const double c = std::cos(angle), s = std::sin(angle);
    PointSet truth(n, cfg.base_shape.unit());
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 r = cfg.base_shape[i] - centroid;
      const Vec2 jitter{cfg.variation.jitter * gauss(rng), cfg.variation.jitter * gauss(rng)};
      truth[i] = centroid + scale * Vec2{c * r.x - s * r.y, s * r.x + c * r.y} + shift + jitter;
    }

    const auto frame = direction_frame(cfg.scheme, truth, truth);
    std::vector<PointSet> annotations;
    for (int k = 0; k < cfg.k_annotations; ++k) {
      PointSet a(n, truth.unit());
      for (std::size_t i = 0; i < n; ++i) {
        // Off-edge landmarks have no curve frame; use image axes.
        const bool ok = frame[i].orthonormal();
        const Vec2 nrm = ok ? frame[i].normal : Vec2{0.0, 1.0};
        const Vec2 tan = ok ? frame[i].tangent : Vec2{1.0, 0.0};
        const double xi_n = gauss(rng);
        const double xi_t = gauss(rng);
        a[i] = truth[i] + cfg.sigma_normal * xi_n * nrm + cfg.sigma_tangent * xi_t * tan;
      }
      annotations.push_back(std::move(a));
    }
    out.truth.push_back(std::move(truth));
    out.annotations.push_back(std::move(annotations));
  }
  return out;
}

void FitConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("FitConfig: learning_rate must be positive");
  if (max_iters < 1) throw ConfigError("FitConfig: max_iters must be >= 1");
  if (!(tolerance >= 0.0)) throw ConfigError("FitConfig: tolerance must be >= 0");
  if (lambda.empty()) throw ConfigError("FitConfig: lambda is empty");
}

namespace {

constexpr double kDivergenceLimit = 1e6;

void check_divergence(double loss, int step) {
  if (!std::isfinite(loss) || loss > kDivergenceLimit)
    throw DivergenceError("fit diverged: loss " + std::to_string(loss) + " exceeds 1e6", step);
}

PointSet mean_shape(std::span<const PointSet> sets) {
  PointSet mean(sets.front().size(), sets.front().unit());
  for (const auto &s : sets) {
    for (std::size_t i = 0; i < s.size(); ++i) mean[i] += s[i];
  }
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = mean[i] / static_cast<double>(sets.size());
  return mean;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

CoordinateFit fit_coordinates(std::span<const PointSet> annotations, const PointSet &init,
                              const LandmarkScheme &scheme, const FitConfig &fit) {
  fit.validate();
  if (annotations.empty()) throw InputError("fit_coordinates: no annotations");
  const auto n = static_cast<std::size_t>(scheme.n_points());
  for (const auto &a : annotations) require_sizes(a, init, n, "fit_coordinates");
  const ADLConfig cfg{1, fit.lambda};
  cfg.validate(n);

  const PointSet consensus = mean_shape(annotations);
  const double inv_k = 1.0 / static_cast<double>(annotations.size());
  CoordinateFit out{init, {}};
  PointSet &p = out.fitted;
  std::vector<char> inside(annotations.size() * n, 0);

  for (int step = 0;; ++step) {
    const auto frame = direction_frame(scheme, consensus, p);
    double loss = 0.0;
    std::vector<double> grad(2 * n, 0.0);
    int crossings = 0;
    for (std::size_t j = 0; j < annotations.size(); ++j) {
      const auto term = smooth_adl1(p, annotations[j], frame, cfg);
      loss += term.value;
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += term.grad[k];
      for (std::size_t i = 0; i < n; ++i) {
        const char now = norm(p[i] - annotations[j][i]) < 1.0;
        if (step > 0 && now != inside[j * n + i]) ++crossings;
        inside[j * n + i] = now;
      }
    }
    loss *= inv_k;
    check_divergence(loss, step);
    out.trace.loss.push_back(loss);
    if (step > 0) {
      out.trace.boundary_crossings.push_back(crossings);
      const double prev = out.trace.loss[out.trace.loss.size() - 2];
      if (std::abs(prev - loss) < fit.tolerance) {
        out.trace.converged = true;
        break;
      }
    }
    if (step == fit.max_iters) break;
    for (std::size_t i = 0; i < n; ++i) {
      p[i].x -= fit.learning_rate * grad[2 * i] * inv_k;
      p[i].y -= fit.learning_rate * grad[2 * i + 1] * inv_k;
    }
    out.trace.iterations = step + 1;
  }
  return out;
}

HeatmapFit fit_heatmap_logits(const PointSet &targets, const LandmarkScheme &scheme, const HeatmapGeometry &geom,
                              const FitConfig &fit, const HeatmapFitOptions &options) {
  fit.validate();
  geom.validate();
  if (targets.size() != static_cast<std::size_t>(scheme.n_points()))
    throw DimensionError("fit_heatmap_logits: target count does not match scheme");
  const PointSet hm_targets = targets.to_heatmap(geom.stride);
  for (std::size_t i = 0; i < hm_targets.size(); ++i) {
    const Vec2 t = hm_targets[i];
    if (!(t.x >= 0.0 && t.y >= 0.0 && t.x <= geom.width - 1.0 && t.y <= geom.height - 1.0))
      throw InputError("fit_heatmap_logits: target " + std::to_string(i) + " lies outside the grid");
  }

  const HeatmapChain chain(scheme, hm_targets, geom, ADLConfig{1, fit.lambda}, options);
  std::vector<double> vars = chain.initial_variables(fit.seed);
  HeatmapFit out;
  for (int step = 0;; ++step) {
    const auto ev = chain.evaluate(vars);
    check_divergence(ev.value, step);
    out.trace.loss.push_back(ev.value);
    out.decoded = ev.decoded.points;
    if (step > 0 && std::abs(out.trace.loss[out.trace.loss.size() - 2] - ev.value) < fit.tolerance) {
      out.trace.converged = true;
      break;
    }
    if (step == fit.max_iters) break;
    for (std::size_t k = 0; k < vars.size(); ++k) vars[k] -= fit.learning_rate * ev.grad[k];
    out.trace.iterations = step + 1;
  }
  return out;
}

LambdaEstimate estimate_lambda(std::span<const std::vector<Vec2>> scatter) {
  LambdaEstimate out;
  for (std::size_t i = 0; i < scatter.size(); ++i) {
    if (scatter[i].size() < 3)
      throw InputError("estimate_lambda: landmark " + std::to_string(i) + " has fewer than 3 error pairs");
    const auto e = fit_ellipse(scatter[i]);
    bool degenerate = e.minor < 1e-12;
    double lambda = kLambdaMin;
    if (!degenerate) lambda = e.major / e.minor;
    else if (e.major >= 1e-12) lambda = kLambdaMax;
    out.lambda.push_back(std::clamp(lambda, kLambdaMin, kLambdaMax));
    out.ellipses.push_back(e);
    out.degenerate.push_back(degenerate);
  }
  return out;
}

double BiasExperimentResult::median_bias_rate(std::size_t lambda_index) const {
  std::vector<double> rates;
  for (const auto &o : outcomes.at(lambda_index)) {
    if (o.bias_rate) rates.push_back(*o.bias_rate);
  }
  return median(rates);
}

int BiasExperimentResult::normal_wins(std::size_t a, std::size_t b) const {
  int wins = 0;
  for (std::size_t s = 0; s < outcomes.at(a).size(); ++s) {
    if (outcomes[a][s].median_normal < outcomes.at(b)[s].median_normal) ++wins;
  }
  return wins;
}

BiasExperimentConfig standard_bias_config() {
  BiasExperimentConfig cfg;
  cfg.fit.learning_rate = 2.0;
  cfg.fit.max_iters = 60;
  cfg.fit.tolerance = 0.0;
  return cfg;
}

namespace {

std::vector<SeedOutcome> run_seed(const BiasExperimentConfig &cfg, std::uint64_t seed) {
  SynthConfig synth = cfg.synth;
  synth.seed = seed;
  const auto data = gen_synthetic(synth);
  std::vector<SeedOutcome> per_lambda;
  for (double lambda : cfg.lambdas) {
    FitConfig fit = cfg.fit;
    fit.lambda = {lambda};
    SeedOutcome o;
    o.seed = seed;
    std::vector<double> normals, tangents, overalls;
    for (std::size_t f = 0; f < data.truth.size(); ++f) {
      const auto &ann = data.annotations[f];
      const PointSet init = cfg.init_from_template ? synth.base_shape : mean_shape(ann);
      auto result = fit_coordinates(ann, init, synth.scheme, fit);
      const auto sample = make_sample(std::to_string(f), result.fitted, data.truth[f], synth.scheme, NormKind::inter_ocular);
      const auto dir = directional_nme(sample, direction_frame(synth.scheme, sample.truth, sample.pred));
      normals.push_back(dir.normal);
      tangents.push_back(dir.tangent);
      overalls.push_back(nme(sample));
      if (cfg.keep_traces) o.traces.push_back(std::move(result.trace));
    }
    const double nf = static_cast<double>(normals.size());
    for (std::size_t f = 0; f < normals.size(); ++f) {
      o.mean_normal += normals[f] / nf;
      o.mean_tangent += tangents[f] / nf;
      o.mean_overall += overalls[f] / nf;
    }
    o.median_normal = median(normals);
    o.median_tangent = median(tangents);
    o.median_overall = median(overalls);
    if (o.mean_normal > 0.0) o.bias_rate = bias_rate(o.mean_normal, o.mean_tangent);
    per_lambda.push_back(std::move(o));
  }
  return per_lambda;
}

}  // namespace

BiasExperimentResult run_bias_experiment(const BiasExperimentConfig &cfg) {
  if (cfg.n_seeds < 1) throw ConfigError("bias experiment: n_seeds must be >= 1");
  if (cfg.lambdas.empty()) throw ConfigError("bias experiment: no lambdas");
  const auto seeds = static_cast<std::size_t>(cfg.n_seeds);
  std::vector<std::vector<SeedOutcome>> by_seed(seeds);

  const auto workers = static_cast<std::size_t>(std::clamp(cfg.threads, 1, cfg.n_seeds));
  if (workers == 1) {
    for (std::size_t s = 0; s < seeds; ++s) by_seed[s] = run_seed(cfg, cfg.base_seed + s);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t s = w; s < seeds; s += workers) by_seed[s] = run_seed(cfg, cfg.base_seed + s);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto &e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  BiasExperimentResult result;
  result.lambdas = cfg.lambdas;
  result.outcomes.resize(cfg.lambdas.size());
  for (std::size_t l = 0; l < cfg.lambdas.size(); ++l) {
    for (std::size_t s = 0; s < seeds; ++s) result.outcomes[l].push_back(std::move(by_seed[s][l]));
  }
  return result;
}

}  // namespace adl
