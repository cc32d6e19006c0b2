#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "adl/direction.hpp"
#include "adl/fitlab.hpp"
#include "adl/gradcheck.hpp"
#include "adl/heatmap.hpp"
#include "adl/io.hpp"
#include "adl/metrics.hpp"
#include "adl/scheme.hpp"

namespace adl::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

LandmarkScheme resolve_scheme(const std::string &name) {
  if (name == "300w") return builtin_300w();
  return load_scheme(read_text_file(name));
}

NormKind resolve_norm(const std::string &name) { return name == "interpupil" ? NormKind::inter_pupil : NormKind::inter_ocular; }

void emit(const std::string &path, const std::string &text, std::ostream &out) {
  if (path.empty() || path == "-") out << text;
  else write_text_file(path, text);
}

// Joins predictions to annotations by id; refuses on any mismatch.
std::vector<EvalSample> join(const std::vector<LandmarkRecord> &gt, const std::vector<LandmarkRecord> &pred,
                             const LandmarkScheme &scheme, NormKind norm) {
  std::map<std::string, const PointSet *> truth;
  for (const auto &r : gt) {
    if (!truth.emplace(r.id, &r.points).second) throw ValidationError("duplicate annotation id '" + r.id + "'");
  }
  std::set<std::string> pred_ids;
  for (const auto &r : pred) pred_ids.insert(r.id);
  std::vector<std::string> only_gt, only_pred;
  for (const auto &[id, p] : truth) {
    if (!pred_ids.count(id)) only_gt.push_back(id);
  }
  for (const auto &id : pred_ids) {
    if (!truth.count(id)) only_pred.push_back(id);
  }
  if (!only_gt.empty() || !only_pred.empty()) {
    std::string msg = "prediction and annotation ids differ;";
    if (!only_gt.empty()) {
      msg += " missing predictions:";
      for (const auto &id : only_gt) msg += " " + id;
      msg += ";";
    }
    if (!only_pred.empty()) {
      msg += " unknown predictions:";
      for (const auto &id : only_pred) msg += " " + id;
    }
    throw ValidationError(msg);
  }
  std::vector<EvalSample> samples;
  for (const auto &r : pred) {
    const PointSet &t = *truth.at(r.id);
    if (r.points.size() != static_cast<std::size_t>(scheme.n_points()) ||
        t.size() != static_cast<std::size_t>(scheme.n_points()))
      throw ValidationError("sample '" + r.id + "': expected " + std::to_string(scheme.n_points()) + " points");
    samples.push_back(make_sample(r.id, r.points, t, scheme, norm));
  }
  return samples;
}

// Appends `--key value` for every config entry whose flag is not on the command line.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  const auto it = std::find(args.begin(), args.end(), "--config");
  if (it == args.end()) return args;
  if (it + 1 == args.end()) throw CLI::ArgumentMismatch("--config needs a file");
  const std::string path = *(it + 1);
  args.erase(it, it + 2);
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error &e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
  if (!doc.is_object()) throw ValidationError(path + ": config must be a JSON object");
  const auto scalar = [](const json &v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return v.dump();
    throw ValidationError("config values must be strings, numbers, booleans or arrays of those");
  };
  for (const auto &[key, value] : doc.items()) {
    const std::string flag = "--" + key;
    if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      for (const auto &v : value) {
        args.push_back(flag);
        args.push_back(scalar(v));
      }
    } else {
      args.push_back(flag);
      args.push_back(scalar(value));
    }
  }
  return args;
}

struct Common {
  std::string scheme = "300w";
  std::string norm = "interocular";
  std::string gt;
  std::string pred;
};

void add_scheme(CLI::App *app, Common &c) {
  app->add_option("--scheme", c.scheme, "Built-in name (300w) or scheme JSON file")->capture_default_str();
}

void add_eval_inputs(CLI::App *app, Common &c) {
  add_scheme(app, c);
  app->add_option("--gt", c.gt, "Annotations: JSON-lines file or directory of .pts")->required();
  app->add_option("--pred", c.pred, "Predictions: JSON-lines file or directory of .pts")->required();
  app->add_option("--norm", c.norm, "Normalization distance")
      ->check(CLI::IsMember({"interocular", "interpupil"}))
      ->capture_default_str();
}

std::vector<EvalSample> load_samples(const Common &c, LandmarkScheme &scheme) {
  scheme = resolve_scheme(c.scheme);
  return join(load_records(c.gt), load_records(c.pred), scheme, resolve_norm(c.norm));
}

json points_json(const PointSet &p) {
  json arr = json::array();
  for (Vec2 q : p) arr.push_back({round_sig6(q.x), round_sig6(q.y)});
  return arr;
}

}  // namespace

int run(const std::vector<std::string> &raw_args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Anisotropic direction loss toolkit", "adl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  Common c;

  // scheme show
  auto *scheme_cmd = app.add_subcommand("scheme", "Landmark scheme utilities")->require_subcommand(1);
  auto *show = scheme_cmd->add_subcommand("show", "Print a scheme in canonical JSON");
  bool show_e2p = false;
  std::string show_out;
  add_scheme(show, c);
  show->add_flag("--e2p", show_e2p, "Print the edge-to-point matrix instead");
  show->add_option("--out", show_out, "Output file (default stdout)");

  // heatmap gen
  auto *heatmap_cmd = app.add_subcommand("heatmap", "Heatmap utilities")->require_subcommand(1);
  auto *gen = heatmap_cmd->add_subcommand("gen", "Generate target heatmaps for annotations");
  HeatmapGeometry geom;
  std::string kind = "point_edge", out_dir;
  bool pgm = false;
  add_scheme(gen, c);
  gen->add_option("--gt", c.gt, "Annotations: JSON-lines file or directory of .pts")->required();
  gen->add_option("--kind", kind)->check(CLI::IsMember({"point", "edge", "point_edge"}))->capture_default_str();
  gen->add_option("--out-dir", out_dir)->required();
  gen->add_option("--width", geom.width)->capture_default_str();
  gen->add_option("--height", geom.height)->capture_default_str();
  gen->add_option("--stride", geom.stride)->capture_default_str();
  gen->add_option("--sigma", geom.sigma_point, "Point Gaussian sigma, heatmap px")->capture_default_str();
  gen->add_option("--edge-width", geom.edge_width, "Edge falloff width, heatmap px")->capture_default_str();
  gen->add_flag("--pgm", pgm, "Also write one PGM per channel");

  // eval
  auto *eval = app.add_subcommand("eval", "NME / FR / AUC report");
  std::vector<double> thresholds{5.0, 10.0};
  std::string report_path, csv_path;
  add_eval_inputs(eval, c);
  eval->add_option("--fr-threshold", thresholds, "FR / AUC thresholds, percent")->capture_default_str();
  eval->add_option("--report", report_path, "JSON report (default stdout)");
  eval->add_option("--csv", csv_path, "Per-edge CSV table");

  // bias-report
  auto *bias = app.add_subcommand("bias-report", "Normal/tangent error scatter per landmark");
  std::string scatter_path, ellipse_path;
  add_eval_inputs(bias, c);
  bias->add_option("--out", scatter_path, "Scatter CSV (default stdout)");
  bias->add_option("--ellipses", ellipse_path, "Per-landmark covariance ellipses JSON");

  // estimate-lambda
  auto *est = app.add_subcommand("estimate-lambda", "Per-landmark lambda from error scatter");
  std::string lambda_path;
  add_eval_inputs(est, c);
  est->add_option("--out", lambda_path, "JSON output (default stdout)");

  // fit
  auto *fit_cmd = app.add_subcommand("fit", "Synthetic fitting experiments");
  std::string mode = "experiment", fit_out, traces_out;
  BiasExperimentConfig exp = standard_bias_config();
  std::vector<double> lambdas = exp.lambdas;
  std::vector<double> fit_lambda{2.0};
  std::uint64_t seed = exp.base_seed;
  HeatmapGeometry fit_geom;
  HeatmapFitOptions hm_opts;
  FitConfig hm_fit;
  hm_fit.learning_rate = 100.0;
  hm_fit.max_iters = 2000;
  fit_cmd->add_option("--mode", mode)->check(CLI::IsMember({"coordinate", "heatmap", "experiment"}))->capture_default_str();
  fit_cmd->add_option("--lambda", fit_lambda, "Lambda (one value or one per landmark)")->capture_default_str();
  fit_cmd->add_option("--lambdas", lambdas, "Lambdas compared in experiment mode")->capture_default_str();
  fit_cmd->add_option("--sigma-normal", exp.synth.sigma_normal)->capture_default_str();
  fit_cmd->add_option("--sigma-tangent", exp.synth.sigma_tangent)->capture_default_str();
  fit_cmd->add_option("--annotations", exp.synth.k_annotations, "Annotations per face")->capture_default_str();
  fit_cmd->add_option("--faces", exp.synth.n_faces)->capture_default_str();
  fit_cmd->add_option("--seeds", exp.n_seeds, "Paired seeds in experiment mode")->capture_default_str();
  fit_cmd->add_option("--seed", seed)->capture_default_str();
  fit_cmd->add_option("--lr", exp.fit.learning_rate, "Coordinate learning rate")->capture_default_str();
  fit_cmd->add_option("--iters", exp.fit.max_iters, "Coordinate iteration budget")->capture_default_str();
  fit_cmd->add_option("--threads", exp.threads)->capture_default_str();
  fit_cmd->add_option("--heatmap-lr", hm_fit.learning_rate)->capture_default_str();
  fit_cmd->add_option("--heatmap-iters", hm_fit.max_iters)->capture_default_str();
  fit_cmd->add_option("--alpha", hm_opts.weights.alpha_edge, "AWing edge weight")->capture_default_str();
  fit_cmd->add_option("--beta", hm_opts.weights.beta_point, "AWing point weight")->capture_default_str();
  fit_cmd->add_option("--sigma", fit_geom.sigma_point, "Point Gaussian sigma, heatmap px")->capture_default_str();
  fit_cmd->add_option("--edge-width", fit_geom.edge_width)->capture_default_str();
  fit_cmd->add_flag("--learn-mask", hm_opts.learn_mask, "Optimize the point and edge maps too");
  fit_cmd->add_option("--out", fit_out, "JSON output (default stdout)");
  fit_cmd->add_option("--traces", traces_out, "Per-iteration loss CSV (experiment mode)");

  // gradcheck
  auto *grad = app.add_subcommand("gradcheck", "Finite-difference check of every hand-written gradient");
  GradCheckOptions gopt;
  grad->add_option("--step", gopt.step)->capture_default_str();
  grad->add_option("--tolerance", gopt.tolerance)->capture_default_str();
  grad->add_option("--seed", gopt.seed)->capture_default_str();

  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*show) {
      const auto scheme = resolve_scheme(c.scheme);
      if (!show_e2p) {
        emit(show_out, serialize_scheme(scheme), out);
      } else {
        const auto m = e2p_matrix(scheme);
        std::string text;
        for (int i = 0; i < m.n_points(); ++i) {
          for (int j = 0; j < m.n_edges(); ++j) text += (j ? " " : "") + std::to_string(m.at(i, j));
          text += "\n";
        }
        emit(show_out, text, out);
      }
    } else if (*gen) {
      geom.validate();
      const auto scheme = resolve_scheme(c.scheme);
      const auto e2p = e2p_matrix(scheme);
      fs::create_directories(out_dir);
      for (const auto &r : load_records(c.gt)) {
        const Heatmap hm = kind == "point"  ? gen_point_heatmap(scheme, r.points, geom)
                           : kind == "edge" ? gen_edge_heatmap(scheme, r.points, geom)
                                            : fuse_point_edge(gen_point_heatmap(scheme, r.points, geom),
                                                              apply_e2p(gen_edge_heatmap(scheme, r.points, geom), e2p));
        const fs::path stem = fs::path(out_dir) / (r.id + "_" + kind);
        write_heatmap_dump(hm, stem);
        if (pgm) {
          for (int ch = 0; ch < hm.channels(); ++ch)
            write_pgm(hm, ch, fs::path(out_dir) / (r.id + "_" + kind + "_" + std::to_string(ch) + ".pgm"));
        }
      }
    } else if (*eval) {
      LandmarkScheme scheme = builtin_300w();
      const auto samples = load_samples(c, scheme);
      const auto report = evaluate(samples, scheme, thresholds);
      emit(report_path, report_json(report), out);
      if (!csv_path.empty()) write_text_file(csv_path, report_csv(report));
    } else if (*bias) {
      LandmarkScheme scheme = builtin_300w();
      const auto samples = load_samples(c, scheme);
      const auto scatter = error_scatter(samples, scheme);
      emit(scatter_path, scatter_csv(scatter), out);
      if (!ellipse_path.empty()) write_text_file(ellipse_path, ellipses_json(scatter));
    } else if (*est) {
      LandmarkScheme scheme = builtin_300w();
      const auto samples = load_samples(c, scheme);
      const auto scatter = error_scatter(samples, scheme);
      std::vector<std::vector<Vec2>> pairs;
      for (const auto &col : scatter.per_landmark) {
        std::vector<Vec2> v;
        for (const auto &p : col) v.push_back({p.e_normal, p.e_tangent});
        pairs.push_back(std::move(v));
      }
      emit(lambda_path, lambda_json(estimate_lambda(pairs)), out);
    } else if (*fit_cmd) {
      json doc;
      if (mode == "experiment") {
        exp.lambdas = lambdas;
        exp.base_seed = seed;
        exp.keep_traces = !traces_out.empty();
        const auto result = run_bias_experiment(exp);
        doc = json::parse(bias_experiment_json(result));
        if (!traces_out.empty()) write_text_file(traces_out, traces_csv(result));
      } else if (mode == "coordinate") {
        exp.synth.seed = seed;
        exp.fit.lambda = fit_lambda;
        const auto data = gen_synthetic(exp.synth);
        json faces = json::array();
        for (std::size_t f = 0; f < data.truth.size(); ++f) {
          const auto r = fit_coordinates(data.annotations[f], exp.synth.base_shape, exp.synth.scheme, exp.fit);
          const auto s = make_sample(std::to_string(f), r.fitted, data.truth[f], exp.synth.scheme, NormKind::inter_ocular);
          const auto dir = directional_nme(s, direction_frame(exp.synth.scheme, s.truth, s.pred));
          faces.push_back({{"face", f},
                           {"nme", round_sig6(nme(s))},
                           {"nme_normal", round_sig6(dir.normal)},
                           {"nme_tangent", round_sig6(dir.tangent)},
                           {"iterations", r.trace.iterations},
                           {"final_loss", round_sig6(r.trace.loss.back())}});
        }
        doc = {{"faces", faces}};
      } else {
        hm_fit.lambda = fit_lambda;
        hm_fit.seed = seed;
        const auto targets = face_template_68();
        const auto r = fit_heatmap_logits(targets, builtin_300w(), fit_geom, hm_fit, hm_opts);
        int within = 0;
        for (std::size_t i = 0; i < targets.size(); ++i) within += norm(r.decoded[i] - targets[i]) <= 0.25;
        doc = {{"decoded", points_json(r.decoded)},
               {"within_0.25px", within},
               {"landmarks", targets.size()},
               {"iterations", r.trace.iterations},
               {"final_loss", round_sig6(r.trace.loss.back())}};
      }
      emit(fit_out, doc.dump(2) + "\n", out);
    } else if (*grad) {
      bool ok = true;
      for (const auto &r : run_gradcheck_suite(gopt)) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << " max_rel_error=" << format_sig6(r.max_rel_error)
            << " coordinates=" << r.coordinates << "\n";
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    }
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace adl::cli
