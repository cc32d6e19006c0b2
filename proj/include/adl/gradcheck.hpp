#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace adl {

struct GradCheckOptions {
  double step = 1e-6;
  double tolerance = 1e-5;
  double boundary_margin = 1e-3;  // minimum distance of a sample from any kink
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
};

// Central differences of f at x along the listed coordinates.
std::vector<double> central_difference(const std::function<double(std::span<const double>)> &f,
                                       std::span<const double> x, std::span<const std::size_t> coords, double step);

// max |a - n| / max(max |a|, max |n|); 0 when both vectors vanish.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

GradCheckResult check_smooth_adl1(const GradCheckOptions &opt = {});
GradCheckResult check_adl2(const GradCheckOptions &opt = {});
GradCheckResult check_awing(const GradCheckOptions &opt = {});
GradCheckResult check_soft_argmax(const GradCheckOptions &opt = {});
GradCheckResult check_heatmap_chain(bool learn_mask, const GradCheckOptions &opt = {});

std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckOptions &opt = {});

}  // namespace adl
