#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adl/core.hpp"
#include "adl/direction.hpp"
#include "adl/scheme.hpp"

namespace adl {

// One evaluated face. `d` is the normalization distance in the points' unit.
struct EvalSample {
  std::string id;
  PointSet pred;
  PointSet truth;
  double d = 0.0;

  void validate() const;
};

EvalSample make_sample(std::string id, PointSet pred, PointSet truth, const LandmarkScheme &scheme, NormKind norm);

// Mean of |p_i - p_hat_i| / d, in percent.
double nme(const EvalSample &sample);

struct DirectionalNme {
  double normal = 0.0;   // percent
  double tangent = 0.0;  // percent
};

// Mean absolute projections |N.e| / d and |T.e| / d, in percent.
DirectionalNme directional_nme(const EvalSample &sample, const DirectionFrame &frame);

// Fraction of samples whose NME is strictly above `threshold` (both in percent).
double failure_rate(std::span<const double> nmes, double threshold);

// Area under the cumulative error distribution on [0, threshold], divided by
// the threshold. Integrated exactly from the sorted NMEs.
double auc_ced(std::span<const double> nmes, double threshold);

// (tangent - normal) / normal, in percent. Throws InputError when normal == 0.
double bias_rate(double nme_normal, double nme_tangent);

struct EdgeRow {
  std::string name;
  double overall = 0.0;
  double normal = 0.0;
  double tangent = 0.0;
  std::optional<double> bias_rate;  // empty when the normal NME is zero
};

struct EdgeTable {
  std::vector<EdgeRow> edges;  // scheme edge order
  EdgeRow whole_face;
};

// Per-edge NMEs over every (sample, edge landmark) pair, plus the whole face.
// Frames come from each sample's truth and prediction.
EdgeTable per_edge_report(std::span<const EvalSample> samples, const LandmarkScheme &scheme);

struct EvalReport {
  std::size_t n_samples = 0;
  double nme = 0.0;
  double nme_normal = 0.0;
  double nme_tangent = 0.0;
  std::map<double, double> fr;   // threshold -> rate
  std::map<double, double> auc;  // threshold -> value
  std::optional<double> bias_rate;
  EdgeTable per_edge;
  std::vector<std::pair<std::string, double>> per_sample_nme;  // sorted by id
};

// Full report. Samples are sorted by id before any reduction, so results do not
// depend on input order.
EvalReport evaluate(std::span<const EvalSample> samples, const LandmarkScheme &scheme,
                    std::span<const double> thresholds);

// Covariance ellipse of a 2D point cloud: radii are square roots of the
// covariance eigenvalues, `angle` is the major-axis direction in radians.
struct EllipseFit {
  double major = 0.0;
  double minor = 0.0;
  double angle = 0.0;
  std::size_t count = 0;
};

EllipseFit fit_ellipse(std::span<const Vec2> points);

struct ScatterPoint {
  std::string sample_id;
  double e_normal = 0.0;   // (N.e) / d
  double e_tangent = 0.0;  // (T.e) / d
};

struct ErrorScatter {
  std::vector<std::vector<ScatterPoint>> per_landmark;
  std::vector<EllipseFit> ellipses;  // fitted on (e_normal, e_tangent)
};

ErrorScatter error_scatter(std::span<const EvalSample> samples, const LandmarkScheme &scheme);

}  // namespace adl
