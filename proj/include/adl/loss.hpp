#pragma once

#include <span>
#include <vector>

#include "adl/core.hpp"
#include "adl/direction.hpp"

namespace adl {

// Loss value and gradient with respect to the prediction. Point losses lay the
// gradient out as [x0, y0, x1, y1, ...]; pixel losses use the heatmap layout.
struct LossValueGrad {
  double value = 0.0;
  std::vector<double> grad;
};

// Anisotropic direction loss settings. `lambda` holds either one value shared
// by every landmark or one value per landmark.
struct ADLConfig {
  int n = 2;
  std::vector<double> lambda{2.0};

  double lambda_at(std::size_t landmark) const { return lambda.size() == 1 ? lambda[0] : lambda[landmark]; }
  // Throws ConfigError on n outside {1, 2} or a non-positive lambda.
  void validate(std::size_t n_points) const;
};

// Normal / tangent weights: 2*lambda/(1+lambda) and 2/(1+lambda). They sum to 2.
struct DirectionWeights {
  double normal;
  double tangent;
};
DirectionWeights direction_weights(double lambda);

// Mean over landmarks of |p - p_hat|^n, n in {1, 2}.
LossValueGrad l_n(const PointSet &pred, const PointSet &truth, int n);
// Mean over landmarks of 0.5*|e|^2 when |e| < 1, else |e| - 0.5.
LossValueGrad smooth_l1(const PointSet &pred, const PointSet &truth);

// Mean over landmarks of (w_n (N.e)^2 + w_t (T.e)^2)^(n/2). The frame is a
// constant basis for differentiation. Off-edge and undefined frames reduce to
// |e|^n exactly.
LossValueGrad adl_n(const PointSet &pred, const PointSet &truth, const DirectionFrame &frame, const ADLConfig &cfg);

// Piecewise: 0.5 * ADL_2 when the raw |p - p_hat| < 1, otherwise ADL_1 - 0.5.
// For lambda != 1 the two branches do not meet at |e| = 1 (see
// smooth_adl1_boundary_gap); cfg.n is ignored.
LossValueGrad smooth_adl1(const PointSet &pred, const PointSet &truth, const DirectionFrame &frame,
                          const ADLConfig &cfg);

// Inner-branch value minus outer-branch value of Smooth ADL1 at |e| = 1 for a
// unit error whose normal component is `normal_component`. Always >= 0.
double smooth_adl1_boundary_gap(double lambda, double normal_component);

struct AWingConfig {
  double omega = 14.0;
  double epsilon = 1.0;
  double alpha = 2.1;
  double theta = 0.5;

  void validate() const;
  // Continuity constants for a ground-truth pixel value.
  double A(double truth_pixel) const;
  double C(double truth_pixel) const;
};

struct PixelLoss {
  double value = 0.0;
  double grad = 0.0;  // d value / d pred
};

// Adaptive wing loss for one pixel; the exponent is alpha - truth_pixel.
PixelLoss awing_pixel(double pred_pixel, double truth_pixel, const AWingConfig &cfg);

// Mean AWing over equally sized pixel arrays. Truth values must lie in [0, 1].
LossValueGrad awing(std::span<const double> pred, std::span<const double> truth, const AWingConfig &cfg);

struct CompositeWeights {
  double alpha_edge = 10.0;
  double beta_point = 10.0;

  void validate() const;
};

// coord + alpha * edge + beta * point. The three terms act on disjoint
// variables, so the returned gradient is their weighted concatenation
// [coord.grad, alpha * edge.grad, beta * point.grad].
LossValueGrad composite_loss(const LossValueGrad &coord_term, const LossValueGrad &awing_edge,
                             const LossValueGrad &awing_point, const CompositeWeights &w);

}  // namespace adl
