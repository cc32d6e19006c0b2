#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "adl/core.hpp"
#include "adl/heatmap.hpp"
#include "adl/loss.hpp"
#include "adl/metrics.hpp"
#include "adl/scheme.hpp"

namespace adl {

// Canonical 68-point face in heatmap px on a 64 x 64 grid.
PointSet face_template_68();

// Per-face random similarity transform (about the template centroid) plus
// isotropic per-landmark jitter; turns the template into distinct faces.
struct FaceVariation {
  double rotation_deg = 4.0;  // std-dev
  double scale = 0.04;        // std-dev of relative scale
  double translation = 1.5;   // std-dev per axis, px
  double jitter = 0.6;        // std-dev per coordinate, px
};

// Labeling noise model: every annotation is truth + sn * xi_n * N + st * xi_t * T
// in the truth frame, xi ~ N(0, 1).
struct SynthConfig {
  LandmarkScheme scheme = builtin_300w();
  PointSet base_shape = face_template_68();
  double sigma_normal = 0.5;
  double sigma_tangent = 1.0;
  int k_annotations = 8;
  int n_faces = 10;
  std::uint64_t seed = 0;
  FaceVariation variation;

  void validate() const;
};

struct SyntheticSet {
  std::vector<PointSet> truth;                     // [face]
  std::vector<std::vector<PointSet>> annotations;  // [face][annotation]
};

// Deterministic for a given config (single mt19937_64 stream).
SyntheticSet gen_synthetic(const SynthConfig &cfg);

enum class FitPath { coordinate, heatmap };

struct FitConfig {
  std::vector<double> lambda{2.0};
  FitPath path = FitPath::coordinate;
  double learning_rate = 2.0;
  int max_iters = 2000;
  double tolerance = 1e-12;  // stop when |loss change| falls below this
  std::uint64_t seed = 0;

  void validate() const;
};

struct FitTrace {
  std::vector<double> loss;            // one entry per visited iterate
  std::vector<int> boundary_crossings; // residuals that crossed |e| = 1 on each step
  int iterations = 0;
  bool converged = false;
};

struct CoordinateFit {
  PointSet fitted;
  FitTrace trace;
};

// Plain gradient descent from `init` on the mean Smooth ADL1 against every
// annotation. Frames come from the annotation mean, recomputed every step.
// Throws DivergenceError when the loss exceeds 1e6 or stops being finite.
CoordinateFit fit_coordinates(std::span<const PointSet> annotations, const PointSet &init,
                              const LandmarkScheme &scheme, const FitConfig &fit);

struct HeatmapFitOptions {
  CompositeWeights weights;
  AWingConfig awing;
  // When true the point and edge maps are free variables (sigmoid logits)
  // supervised by AWing; otherwise the mask is the fused generated targets.
  bool learn_mask = false;
  std::optional<Heatmap> mask;  // replaces the generated mask when set
  double init_noise = 0.05;
};

struct HeatmapFit {
  PointSet decoded;  // heatmap px
  FitTrace trace;
};

// Optimizes a free landmark map H = z^2 through mask -> soft-argmax ->
// Smooth ADL1 (+ alpha * AWing_edge + beta * AWing_point when learn_mask).
// Throws DegeneracyError when a channel has no mass inside the mask at init.
HeatmapFit fit_heatmap_logits(const PointSet &targets, const LandmarkScheme &scheme, const HeatmapGeometry &geom,
                              const FitConfig &fit, const HeatmapFitOptions &options = {});

struct LambdaEstimate {
  std::vector<double> lambda;
  std::vector<EllipseFit> ellipses;
  std::vector<bool> degenerate;
};

inline constexpr double kLambdaMin = 1.0;
inline constexpr double kLambdaMax = 16.0;

// lambda_i = a_i / b_i from the covariance ellipse of landmark i's
// (e_normal, e_tangent) scatter, clamped to [1, 16]. Needs >= 3 pairs each.
LambdaEstimate estimate_lambda(std::span<const std::vector<Vec2>> scatter);

// Paired-seed experiment: the same synthetic data fitted once per lambda.
struct BiasExperimentConfig {
  SynthConfig synth;
  FitConfig fit;
  std::vector<double> lambdas{1.0, 2.0};
  int n_seeds = 20;
  std::uint64_t base_seed = 1;
  bool init_from_template = true;  // otherwise start at the annotation mean
  bool keep_traces = false;
  int threads = 1;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  double median_normal = 0.0;   // median over faces, percent of inter-ocular
  double median_tangent = 0.0;
  double median_overall = 0.0;
  double mean_normal = 0.0;
  double mean_tangent = 0.0;
  double mean_overall = 0.0;
  std::optional<double> bias_rate;  // from the face means
  std::vector<FitTrace> traces;     // [face], only with keep_traces
};

struct BiasExperimentResult {
  std::vector<double> lambdas;
  std::vector<std::vector<SeedOutcome>> outcomes;  // [lambda][seed]

  double median_bias_rate(std::size_t lambda_index) const;
  // Seeds where lambda `a` has a strictly lower median normal NME than `b`.
  int normal_wins(std::size_t a, std::size_t b) const;
};

// Desk-scale default: sn = 0.5 px, st = 1.0 px, k = 8, 10 faces, 20 seeds;
// 60 steps of lr 2.0 from the template, i.e. a learner with a fixed budget.
BiasExperimentConfig standard_bias_config();

BiasExperimentResult run_bias_experiment(const BiasExperimentConfig &cfg);

}  // namespace adl
