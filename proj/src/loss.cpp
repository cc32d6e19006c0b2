#include "adl/loss.hpp"

#include <algorithm>
#include <string>

namespace adl {

namespace {

// q = w_n (N.e)^2 + w_t (T.e)^2 together with dq/de.
struct Quadratic {
  double q;
  Vec2 dq;
};

Quadratic quadratic_form(const LandmarkFrame &f, Vec2 e, double lambda) {
  if (!f.orthonormal()) {
    // error_vector: N = T = e/|e| gives the isotropic |e|^2 once the weights
    // are normalized; undefined frames split e evenly, which is the same form.
    return {dot(e, e), 2.0 * e};
  }
  const auto w = direction_weights(lambda);
  const double en = dot(f.normal, e);
  const double et = dot(f.tangent, e);
  return {w.normal * en * en + w.tangent * et * et, 2.0 * w.normal * en * f.normal + 2.0 * w.tangent * et * f.tangent};
}

// value and d/de of q^(n/2)
std::pair<double, Vec2> power_term(const Quadratic &qf, int n) {
  if (n == 2) return {qf.q, qf.dq};
  const double r = std::sqrt(qf.q);
  if (r == 0.0) return {0.0, Vec2{}};
  return {r, qf.dq / (2.0 * r)};
}

std::pair<double, Vec2> smooth_term(const Quadratic &qf, double raw_norm) {
  if (raw_norm < 1.0) return {0.5 * qf.q, 0.5 * qf.dq};
  auto [r, g] = power_term(qf, 1);
  return {r - 0.5, g};
}

template <typename Term>
LossValueGrad mean_over_landmarks(const PointSet &pred, const PointSet &truth, Term term) {
  const std::size_t n = pred.size();
  LossValueGrad out;
  out.grad.assign(2 * n, 0.0);
  if (n == 0) return out;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [v, g] = term(i, pred[i] - truth[i]);
    out.value += v;
    out.grad[2 * i] = g.x * inv;
    out.grad[2 * i + 1] = g.y * inv;
  }
  out.value *= inv;
  return out;
}

void require_exponent(int n) {
  if (n != 1 && n != 2) throw ConfigError("loss exponent must be 1 or 2, got " + std::to_string(n));
}

}  // namespace

void ADLConfig::validate(std::size_t n_points) const {
  require_exponent(n);
  if (lambda.size() != 1 && lambda.size() != n_points)
    throw ConfigError("lambda must be a scalar or have one entry per landmark (" + std::to_string(n_points) + ")");
  for (double l : lambda) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("lambda must be positive and finite");
  }
}

DirectionWeights direction_weights(double lambda) {
  return {2.0 * lambda / (1.0 + lambda), 2.0 / (1.0 + lambda)};
}

LossValueGrad l_n(const PointSet &pred, const PointSet &truth, int n) {
  require_exponent(n);
  require_sizes(pred, truth, pred.size(), "l_n");
  return mean_over_landmarks(pred, truth, [n](std::size_t, Vec2 e) { return power_term({dot(e, e), 2.0 * e}, n); });
}

LossValueGrad smooth_l1(const PointSet &pred, const PointSet &truth) {
  require_sizes(pred, truth, pred.size(), "smooth_l1");
  return mean_over_landmarks(pred, truth, [](std::size_t, Vec2 e) { return smooth_term({dot(e, e), 2.0 * e}, norm(e)); });
}

LossValueGrad adl_n(const PointSet &pred, const PointSet &truth, const DirectionFrame &frame, const ADLConfig &cfg) {
  require_sizes(pred, truth, frame.size(), "adl_n");
  cfg.validate(frame.size());
  return mean_over_landmarks(pred, truth, [&](std::size_t i, Vec2 e) {
    return power_term(quadratic_form(frame[i], e, cfg.lambda_at(i)), cfg.n);
  });
}

LossValueGrad smooth_adl1(const PointSet &pred, const PointSet &truth, const DirectionFrame &frame,
                          const ADLConfig &cfg) {
  require_sizes(pred, truth, frame.size(), "smooth_adl1");
  ADLConfig checked = cfg;
  checked.n = 1;
  checked.validate(frame.size());
  return mean_over_landmarks(pred, truth, [&](std::size_t i, Vec2 e) {
    return smooth_term(quadratic_form(frame[i], e, cfg.lambda_at(i)), norm(e));
  });
}

double smooth_adl1_boundary_gap(double lambda, double normal_component) {
  const auto w = direction_weights(lambda);
  const double nc = std::clamp(normal_component, -1.0, 1.0);
  const double q = w.normal * nc * nc + w.tangent * (1.0 - nc * nc);
  const double r = std::sqrt(q);
  return 0.5 * q - (r - 0.5);
}

void AWingConfig::validate() const {
  if (!(theta > 0.0)) throw ConfigError("AWing theta must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("AWing epsilon must be positive");
  if (!(omega > 0.0)) throw ConfigError("AWing omega must be positive");
  if (!(alpha > 1.0)) throw ConfigError("AWing alpha must exceed 1");
}

double AWingConfig::A(double truth_pixel) const {
  const double g = alpha - truth_pixel;
  const double r = theta / epsilon;
  return omega * (1.0 / (1.0 + std::pow(r, g))) * g * std::pow(r, g - 1.0) / epsilon;
}

double AWingConfig::C(double truth_pixel) const {
  const double g = alpha - truth_pixel;
  return theta * A(truth_pixel) - omega * std::log1p(std::pow(theta / epsilon, g));
}

PixelLoss awing_pixel(double pred_pixel, double truth_pixel, const AWingConfig &cfg) {
  const double diff = pred_pixel - truth_pixel;
  const double d = std::abs(diff);
  const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  if (d < cfg.theta) {
    const double g = cfg.alpha - truth_pixel;
    const double u = d / cfg.epsilon;
    const double ug = std::pow(u, g);
    const double dv = d == 0.0 ? 0.0 : cfg.omega * g * std::pow(u, g - 1.0) / (cfg.epsilon * (1.0 + ug));
    return {cfg.omega * std::log1p(ug), dv * sign};
  }
  const double a = cfg.A(truth_pixel);
  return {a * d - cfg.C(truth_pixel), a * sign};
}

LossValueGrad awing(std::span<const double> pred, std::span<const double> truth, const AWingConfig &cfg) {
  cfg.validate();
  if (pred.size() != truth.size())
    throw DimensionError("awing: " + std::to_string(pred.size()) + " predicted vs " + std::to_string(truth.size()) +
                         " target pixels");
  LossValueGrad out;
  out.grad.assign(pred.size(), 0.0);
  if (pred.empty()) return out;
  const double inv = 1.0 / static_cast<double>(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!(truth[k] >= 0.0 && truth[k] <= 1.0))
      throw InputError("awing: target pixel " + std::to_string(k) + " outside [0, 1]");
    const auto px = awing_pixel(pred[k], truth[k], cfg);
    out.value += px.value;
    out.grad[k] = px.grad * inv;
  }
  out.value *= inv;
  return out;
}

void CompositeWeights::validate() const {
  if (!(alpha_edge >= 0.0) || !(beta_point >= 0.0)) throw ConfigError("composite weights must be non-negative");
}

LossValueGrad composite_loss(const LossValueGrad &coord_term, const LossValueGrad &awing_edge,
                             const LossValueGrad &awing_point, const CompositeWeights &w) {
  w.validate();
  LossValueGrad out;
  out.value = coord_term.value + w.alpha_edge * awing_edge.value + w.beta_point * awing_point.value;
  out.grad.reserve(coord_term.grad.size() + awing_edge.grad.size() + awing_point.grad.size());
  out.grad.insert(out.grad.end(), coord_term.grad.begin(), coord_term.grad.end());
  for (double g : awing_edge.grad) out.grad.push_back(w.alpha_edge * g);
  for (double g : awing_point.grad) out.grad.push_back(w.beta_point * g);
  return out;
}

}  // namespace adl
