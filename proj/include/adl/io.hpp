#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "adl/core.hpp"
#include "adl/fitlab.hpp"
#include "adl/metrics.hpp"

namespace adl {

// One face's landmarks in image pixels, keyed by sample id.
struct LandmarkRecord {
  std::string id;
  PointSet points;
};
using AnnotationRecord = LandmarkRecord;
using PredictionRecord = LandmarkRecord;

// The 300W text format:
//   version: 1
//   n_points: N
//   {
//   x y
//   ...
//   }
// CRLF and blank lines are tolerated. Errors carry the offending line number.
PointSet read_pts(std::string_view text);
std::string write_pts(const PointSet &points);

// One JSON object per line: {"id": ..., "points": [[x, y], ...]}. Blank lines
// are skipped; malformed lines and duplicate ids raise ParseError.
std::vector<LandmarkRecord> read_predictions(std::istream &in);
std::string write_predictions(const std::vector<LandmarkRecord> &records);

// Either a .jsonl file or a directory of .pts files (id = file stem).
std::vector<LandmarkRecord> load_records(const std::filesystem::path &path);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, std::string_view text);

// Reports: sorted keys, every number rounded to 6 significant digits.
std::string report_json(const EvalReport &report);
std::string report_csv(const EvalReport &report);  // per-edge table
std::string scatter_csv(const ErrorScatter &scatter);
std::string ellipses_json(const ErrorScatter &scatter);
std::string lambda_json(const LambdaEstimate &estimate);
std::string bias_experiment_json(const BiasExperimentResult &result);
// One row per (lambda, seed, face, iteration); needs keep_traces.
std::string traces_csv(const BiasExperimentResult &result);

}  // namespace adl
