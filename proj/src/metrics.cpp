#include "adl/metrics.hpp"

#include <algorithm>

namespace adl {

void EvalSample::validate() const {
  if (!(d > 0.0) || !std::isfinite(d))
    throw InputError("sample '" + id + "': normalization distance must be positive");
  require_sizes(pred, truth, truth.size(), "EvalSample");
}

EvalSample make_sample(std::string id, PointSet pred, PointSet truth, const LandmarkScheme &scheme, NormKind norm) {
  require_sizes(pred, truth, static_cast<std::size_t>(scheme.n_points()), "make_sample");
  const double d = scheme.normalization_distance(truth, norm);
  EvalSample s{std::move(id), std::move(pred), std::move(truth), d};
  s.validate();
  return s;
}

double nme(const EvalSample &sample) {
  sample.validate();
  if (sample.truth.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < sample.truth.size(); ++i) sum += norm(sample.pred[i] - sample.truth[i]);
  return 100.0 * sum / (static_cast<double>(sample.truth.size()) * sample.d);
}

DirectionalNme directional_nme(const EvalSample &sample, const DirectionFrame &frame) {
  sample.validate();
  const auto comps = decompose_errors(frame, sample.truth, sample.pred);
  DirectionalNme out;
  if (comps.empty()) return out;
  for (const auto &c : comps) {
    out.normal += std::abs(c.normal);
    out.tangent += std::abs(c.tangent);
  }
  const double scale = 100.0 / (static_cast<double>(comps.size()) * sample.d);
  out.normal *= scale;
  out.tangent *= scale;
  return out;
}

double failure_rate(std::span<const double> nmes, double threshold) {
  if (nmes.empty()) throw InputError("failure_rate: no samples");
  if (!(threshold > 0.0)) throw InputError("failure_rate: threshold must be positive");
  const auto failed = std::count_if(nmes.begin(), nmes.end(), [&](double v) { return v > threshold; });
  return static_cast<double>(failed) / static_cast<double>(nmes.size());
}

double auc_ced(std::span<const double> nmes, double threshold) {
  if (nmes.empty()) throw InputError("auc_ced: no samples");
  if (!(threshold > 0.0)) throw InputError("auc_ced: threshold must be positive");
  std::vector<double> sorted(nmes.begin(), nmes.end());
  std::sort(sorted.begin(), sorted.end());
  // CED steps up by 1/n at each NME; below the threshold each sample covers
  // the rectangle [nme, threshold].
  double area = 0.0;
  for (double v : sorted) {
    if (v >= threshold) break;
    area += threshold - std::max(v, 0.0);
  }
  return area / (threshold * static_cast<double>(sorted.size()));
}

double bias_rate(double nme_normal, double nme_tangent) {
  if (nme_normal == 0.0) throw InputError("bias_rate: normal NME is zero, rate undefined");
  return 100.0 * (nme_tangent - nme_normal) / nme_normal;
}

namespace {

std::vector<const EvalSample *> sorted_by_id(std::span<const EvalSample> samples) {
  std::vector<const EvalSample *> out;
  out.reserve(samples.size());
  for (const auto &s : samples) out.push_back(&s);
  std::stable_sort(out.begin(), out.end(), [](const EvalSample *a, const EvalSample *b) { return a->id < b->id; });
  return out;
}

struct Accumulator {
  double overall = 0.0, normal = 0.0, tangent = 0.0;
  std::size_t count = 0;

  void add(const ErrorComponents &c, double d) {
    overall += c.norm / d;
    normal += std::abs(c.normal) / d;
    tangent += std::abs(c.tangent) / d;
    ++count;
  }

  EdgeRow row(std::string name) const {
    EdgeRow r;
    r.name = std::move(name);
    if (count == 0) return r;
    const double scale = 100.0 / static_cast<double>(count);
    r.overall = overall * scale;
    r.normal = normal * scale;
    r.tangent = tangent * scale;
    if (r.normal > 0.0) r.bias_rate = bias_rate(r.normal, r.tangent);
    return r;
  }
};

}  // namespace

EdgeTable per_edge_report(std::span<const EvalSample> samples, const LandmarkScheme &scheme) {
  if (samples.empty()) throw InputError("per_edge_report: no samples");
  std::vector<Accumulator> per_edge(static_cast<std::size_t>(scheme.n_edges()));
  Accumulator whole;
  for (const EvalSample *s : sorted_by_id(samples)) {
    s->validate();
    const auto frame = direction_frame(scheme, s->truth, s->pred);
    const auto comps = decompose_errors(frame, s->truth, s->pred);
    for (const auto &c : comps) whole.add(c, s->d);
    for (int j = 0; j < scheme.n_edges(); ++j) {
      for (int v : scheme.edge_points(j)) per_edge[static_cast<std::size_t>(j)].add(comps[static_cast<std::size_t>(v)], s->d);
    }
  }
  EdgeTable table;
  for (int j = 0; j < scheme.n_edges(); ++j)
    table.edges.push_back(per_edge[static_cast<std::size_t>(j)].row(scheme.edges()[static_cast<std::size_t>(j)].name));
  table.whole_face = whole.row("Whole Face");
  return table;
}

EvalReport evaluate(std::span<const EvalSample> samples, const LandmarkScheme &scheme,
                    std::span<const double> thresholds) {
  if (samples.empty()) throw InputError("evaluate: no samples");
  EvalReport report;
  report.n_samples = samples.size();
  std::vector<double> nmes;
  double normal = 0.0, tangent = 0.0;
  for (const EvalSample *s : sorted_by_id(samples)) {
    const double v = nme(*s);
    nmes.push_back(v);
    report.per_sample_nme.emplace_back(s->id, v);
    const auto dir = directional_nme(*s, direction_frame(scheme, s->truth, s->pred));
    normal += dir.normal;
    tangent += dir.tangent;
  }
  const double n = static_cast<double>(nmes.size());
  for (double v : nmes) report.nme += v;
  report.nme /= n;
  report.nme_normal = normal / n;
  report.nme_tangent = tangent / n;
  if (report.nme_normal > 0.0) report.bias_rate = bias_rate(report.nme_normal, report.nme_tangent);
  for (double t : thresholds) {
    report.fr[t] = failure_rate(nmes, t);
    report.auc[t] = auc_ced(nmes, t);
  }
  report.per_edge = per_edge_report(samples, scheme);
  return report;
}

EllipseFit fit_ellipse(std::span<const Vec2> points) {
  EllipseFit fit;
  fit.count = points.size();
  if (points.size() < 2) return fit;
  Vec2 mean;
  for (Vec2 p : points) mean += p;
  mean = mean / static_cast<double>(points.size());
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (Vec2 p : points) {
    const Vec2 d = p - mean;
    sxx += d.x * d.x;
    syy += d.y * d.y;
    sxy += d.x * d.y;
  }
  const double inv = 1.0 / static_cast<double>(points.size() - 1);
  sxx *= inv;
  syy *= inv;
  sxy *= inv;
  // Closed-form eigen-decomposition of the symmetric 2x2 covariance.
  const double half_trace = 0.5 * (sxx + syy);
  const double disc = std::hypot(0.5 * (sxx - syy), sxy);
  const double l1 = half_trace + disc;
  const double l2 = std::max(half_trace - disc, 0.0);
  fit.major = std::sqrt(std::max(l1, 0.0));
  fit.minor = std::sqrt(l2);
  fit.angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  return fit;
}

ErrorScatter error_scatter(std::span<const EvalSample> samples, const LandmarkScheme &scheme) {
  const auto n = static_cast<std::size_t>(scheme.n_points());
  ErrorScatter out;
  out.per_landmark.resize(n);
  for (const EvalSample *s : sorted_by_id(samples)) {
    s->validate();
    const auto frame = direction_frame(scheme, s->truth, s->pred);
    const auto comps = decompose_errors(frame, s->truth, s->pred);
    for (std::size_t i = 0; i < n; ++i)
      out.per_landmark[i].push_back({s->id, comps[i].normal / s->d, comps[i].tangent / s->d});
  }
  out.ellipses.reserve(n);
  for (const auto &pts : out.per_landmark) {
    std::vector<Vec2> xy;
    xy.reserve(pts.size());
    for (const auto &p : pts) xy.push_back({p.e_normal, p.e_tangent});
    out.ellipses.push_back(fit_ellipse(xy));
  }
  return out;
}

}  // namespace adl
