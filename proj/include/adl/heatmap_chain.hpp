#pragma once

#include <span>
#include <vector>

#include "adl/fitlab.hpp"
#include "adl/heatmap.hpp"
#include "adl/loss.hpp"
#include "adl/scheme.hpp"

namespace adl {

// Differentiable heatmap path from free variables to the composite loss:
//
//   H_landmarks = z^2
//   H_point = sigmoid(u), H_edge_hat = sigmoid(v)      (learn_mask only)
//   mask = H_point * E2P(H_edge_hat)                   (or a fixed mask)
//   P = soft_argmax(H_landmarks * mask)
//   loss = SmoothADL1(P, targets) + alpha * AWing(H_edge_hat) + beta * AWing(H_point)
//
// Variables are laid out [z | u | v]; u and v exist only with learn_mask.
class HeatmapChain {
 public:
  HeatmapChain(const LandmarkScheme &scheme, PointSet targets, const HeatmapGeometry &geom, ADLConfig adl,
               HeatmapFitOptions options);

  struct Evaluation {
    double value = 0.0;
    double coord_term = 0.0;
    double edge_term = 0.0;
    double point_term = 0.0;
    std::vector<double> grad;
    SoftArgmaxResult decoded;
  };

  std::size_t n_variables() const;
  std::vector<double> initial_variables(std::uint64_t seed) const;
  Evaluation evaluate(std::span<const double> vars, bool with_grad = true) const;

  const Heatmap &point_target() const { return point_target_; }
  const Heatmap &edge_target() const { return edge_target_; }
  const Heatmap &fixed_mask() const { return fixed_mask_; }
  const PointSet &targets() const { return targets_; }

 private:
  LandmarkScheme scheme_;
  PointSet targets_;
  HeatmapGeometry geom_;
  ADLConfig adl_;
  HeatmapFitOptions options_;
  E2PMatrix e2p_;
  Heatmap point_target_;
  Heatmap edge_target_;  // one channel per edge, before E2P
  Heatmap fixed_mask_;
};

}  // namespace adl
