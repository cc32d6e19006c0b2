#include "adl/heatmap_chain.hpp"

#include <random>

namespace adl {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

HeatmapChain::HeatmapChain(const LandmarkScheme &scheme, PointSet targets, const HeatmapGeometry &geom, ADLConfig adl,
                           HeatmapFitOptions options)
    : scheme_(scheme),
      targets_(targets.to_heatmap(geom.stride)),
      geom_(geom),
      adl_(std::move(adl)),
      options_(std::move(options)),
      e2p_(e2p_matrix(scheme)),
      point_target_(gen_point_heatmap(scheme, targets_, geom)),
      edge_target_(gen_edge_heatmap(scheme, targets_, geom)),
      fixed_mask_(fuse_point_edge(point_target_, apply_e2p(edge_target_, e2p_))) {
  adl_.validate(targets_.size());
  options_.weights.validate();
  options_.awing.validate();
  if (options_.mask) {
    if (!options_.mask->same_shape(fixed_mask_)) throw DimensionError("HeatmapChain: mask shape mismatch");
    fixed_mask_ = *options_.mask;
  }
}

std::size_t HeatmapChain::n_variables() const {
  const std::size_t z = static_cast<std::size_t>(scheme_.n_points()) * geom_.pixels();
  if (!options_.learn_mask) return z;
  return 2 * z + static_cast<std::size_t>(scheme_.n_edges()) * geom_.pixels();
}

std::vector<double> HeatmapChain::initial_variables(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-options_.init_noise, options_.init_noise);
  std::vector<double> vars(n_variables(), 0.0);
  const std::size_t nz = static_cast<std::size_t>(scheme_.n_points()) * geom_.pixels();
  for (std::size_t k = 0; k < nz; ++k) vars[k] = 1.0 + noise(rng);
  for (std::size_t k = nz; k < vars.size(); ++k) vars[k] = noise(rng);
  return vars;
}

HeatmapChain::Evaluation HeatmapChain::evaluate(std::span<const double> vars, bool with_grad) const {
  if (vars.size() != n_variables()) throw DimensionError("HeatmapChain: variable count mismatch");
  const std::size_t pix = geom_.pixels();
  const int n_points = scheme_.n_points();
  const std::size_t nz = static_cast<std::size_t>(n_points) * pix;

  Heatmap landmarks(geom_, HeatmapKind::landmarks, n_points);
  for (std::size_t k = 0; k < nz; ++k) landmarks.data()[k] = vars[k] * vars[k];

  Evaluation ev;
  std::optional<Heatmap> point_hm, edge_hat, edge_hm;
  const Heatmap *mask = &fixed_mask_;
  Heatmap learned_mask(geom_, HeatmapKind::point_edge, 0);
  if (options_.learn_mask) {
    point_hm.emplace(geom_, HeatmapKind::point, n_points);
    edge_hat.emplace(geom_, HeatmapKind::edge, scheme_.n_edges());
    for (std::size_t k = 0; k < nz; ++k) point_hm->data()[k] = sigmoid(vars[nz + k]);
    for (std::size_t k = 0; k < edge_hat->data().size(); ++k) edge_hat->data()[k] = sigmoid(vars[2 * nz + k]);
    edge_hm.emplace(apply_e2p(*edge_hat, e2p_));
    learned_mask = fuse_point_edge(*point_hm, *edge_hm);
    mask = &learned_mask;
  }

  ev.decoded = soft_argmax(landmarks, *mask);
  for (std::size_t c = 0; c < ev.decoded.degenerate.size(); ++c) {
    if (ev.decoded.degenerate[c])
      throw DegeneracyError("heatmap chain: channel " + std::to_string(c) + " has no mass inside the mask");
  }
  const auto frame = direction_frame(scheme_, targets_, ev.decoded.points);
  const auto coord = smooth_adl1(ev.decoded.points, targets_, frame, adl_);
  ev.coord_term = coord.value;

  LossValueGrad edge_loss, point_loss;
  if (options_.learn_mask) {
    edge_loss = awing(edge_hat->data(), edge_target_.data(), options_.awing);
    point_loss = awing(point_hm->data(), point_target_.data(), options_.awing);
  }
  ev.edge_term = edge_loss.value;
  ev.point_term = point_loss.value;
  ev.value = ev.coord_term + options_.weights.alpha_edge * ev.edge_term + options_.weights.beta_point * ev.point_term;
  if (!with_grad) return ev;

  const auto back = soft_argmax_backward(landmarks, *mask, ev.decoded, coord.grad);
  ev.grad.assign(vars.size(), 0.0);
  for (std::size_t k = 0; k < nz; ++k) ev.grad[k] = back.d_landmarks[k] * 2.0 * vars[k];
  if (!options_.learn_mask) return ev;

  // mask = H_point * H_edge, H_edge = E2P * H_edge_hat
  const double alpha = options_.weights.alpha_edge;
  const double beta = options_.weights.beta_point;
  Heatmap d_edge(geom_, HeatmapKind::edge, n_points);
  for (std::size_t k = 0; k < nz; ++k) {
    const double d_point = back.d_mask[k] * edge_hm->data()[k] + beta * point_loss.grad[k];
    const double s = point_hm->data()[k];
    ev.grad[nz + k] = d_point * s * (1.0 - s);
    d_edge.data()[k] = back.d_mask[k] * s;
  }
  for (int j = 0; j < scheme_.n_edges(); ++j) {
    const std::size_t base = static_cast<std::size_t>(j) * pix;
    for (std::size_t k = 0; k < pix; ++k) {
      double d_hat = alpha * edge_loss.grad[base + k];
      for (int i = 0; i < n_points; ++i) {
        if (e2p_.at(i, j)) d_hat += d_edge.data()[static_cast<std::size_t>(i) * pix + k];
      }
      const double s = edge_hat->data()[base + k];
      ev.grad[2 * nz + base + k] = d_hat * s * (1.0 - s);
    }
  }
  return ev;
}

}  // namespace adl
