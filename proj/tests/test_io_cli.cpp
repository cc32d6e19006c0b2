#include <doctest.h>

#include <filesystem>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "adl/io.hpp"
#include "cli.hpp"
#include "support.hpp"

using namespace adl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("adl_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string &name) const { return (path / name).string(); }
};

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<LandmarkRecord> synthetic_records(test::Rng &rng, int n, double noise, std::vector<LandmarkRecord> *truth) {
  std::vector<LandmarkRecord> pred;
  for (int k = 0; k < n; ++k) {
    PointSet t = test::jittered_face(rng, 0.8, 4.0).to_image(1.0);
    t = PointSet(std::vector<Vec2>(t.begin(), t.end()), CoordUnit::image_px);
    truth->push_back({"face" + std::to_string(k), t});
    pred.push_back({"face" + std::to_string(k), test::perturbed(t, rng, noise)});
  }
  return pred;
}

}  // namespace

TEST_CASE("pts reader") {
  const auto one = read_pts("version: 1\nn_points: 1\n{\n1.5 2.5\n}\n");
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Vec2{1.5, 2.5});
  CHECK(one.unit() == CoordUnit::image_px);
  CHECK(read_pts("version: 1\r\nn_points: 1\r\n{\r\n1.5 2.5\r\n}\r\n") == one);

  std::string short_file = "version: 1\nn_points: 68\n{\n";
  for (int i = 0; i < 67; ++i) short_file += "1 2\n";
  short_file += "}\n";
  try {
    read_pts(short_file);
    FAIL("expected a count error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 71);
    CHECK(std::string(e.what()).find("68") != std::string::npos);
  }
  try {
    read_pts("version: 1\nn_points: 2\n{\n1 2\nx y\n}\n");
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 5);
  }
  CHECK_THROWS_AS(read_pts("version: 2\nn_points: 1\n{\n1 2\n}\n"), ParseError);
  CHECK_THROWS_AS(read_pts("n_points: 1\n{\n1 2\n}\n"), ParseError);
  CHECK_THROWS_AS(read_pts("version: 1\nn_points: 1\n{\n1 2\n"), ParseError);
  CHECK_THROWS_AS(read_pts("version: 1\nn_points: 1\n{\n1 inf\n}\n"), ParseError);

  test::Rng rng(1);
  const auto face = test::perturbed(PointSet(std::vector<Vec2>(68, Vec2{100, 80})), rng, 20);
  CHECK(read_pts(write_pts(face)) == face);
}

TEST_CASE("prediction reader") {
  std::istringstream two(R"({"id": "a", "points": [[1, 2], [3, 4]]}
{"id": "b", "points": [[5, 6], [7, 8.5]]}
)");
  const auto recs = read_predictions(two);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].id == "a");
  CHECK(recs[1].points[1] == Vec2{7, 8.5});

  std::istringstream dup("{\"id\": \"a\", \"points\": [[1, 2]]}\n{\"id\": \"a\", \"points\": [[1, 2]]}\n");
  try {
    read_predictions(dup);
    FAIL("expected a duplicate-id error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }

  std::istringstream empty("");
  CHECK(read_predictions(empty).empty());

  std::istringstream bad("{\"id\": \"a\", \"points\": [[1, 2]]}\n\n{\"id\": \"b\", \"points\": [[1, 2]]\n");
  try {
    read_predictions(bad);
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
  }
  std::istringstream wrong_shape("{\"id\": \"a\", \"points\": [[1, 2, 3]]}\n");
  CHECK_THROWS_AS(read_predictions(wrong_shape), ParseError);

  std::istringstream round(write_predictions(recs));
  const auto back = read_predictions(round);
  CHECK(back[1].points == recs[1].points);
}

TEST_CASE("eval matches the metrics module") {
  TempDir dir;
  test::Rng rng(3);
  std::vector<LandmarkRecord> gt;
  const auto pred = synthetic_records(rng, 12, 3.0, &gt);
  write_text_file(dir / "gt.jsonl", write_predictions(gt));
  write_text_file(dir / "pred.jsonl", write_predictions(pred));

  const auto r = run_cli({"eval", "--scheme", "300w", "--gt", dir / "gt.jsonl", "--pred", dir / "pred.jsonl", "--norm",
                          "interocular", "--report", dir / "out.json", "--csv", dir / "edges.csv"});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(read_text_file(dir / "out.json"));

  std::vector<EvalSample> samples;
  for (std::size_t k = 0; k < gt.size(); ++k)
    samples.push_back(make_sample(gt[k].id, pred[k].points, gt[k].points, builtin_300w(), NormKind::inter_ocular));
  const auto report = evaluate(samples, builtin_300w(), std::vector<double>{5.0, 10.0});
  CHECK(doc["nme"].get<double>() == round_sig6(report.nme));
  CHECK(doc["nme_normal"].get<double>() == round_sig6(report.nme_normal));
  CHECK(doc["fr"]["10"].get<double>() == round_sig6(report.fr.at(10.0)));
  CHECK(doc["auc"]["5"].get<double>() == round_sig6(report.auc.at(5.0)));
  CHECK(doc["n_samples"] == 12);
  CHECK(doc["per_edge"].size() == 13);

  const auto csv = read_text_file(dir / "edges.csv");
  CHECK(csv.rfind("edge,overall,normal,tangent,bias_rate\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 15);

  // Every number carries at most 6 significant digits.
  const std::regex number(R"((-?\d+\.\d+|-?\d+)(e[-+]?\d+)?)");
  const auto text = read_text_file(dir / "out.json");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), number); it != std::sregex_iterator(); ++it) {
    std::string digits = (*it)[1].str();
    digits.erase(std::remove_if(digits.begin(), digits.end(), [](char c) { return c == '-' || c == '.'; }), digits.end());
    digits.erase(0, digits.find_first_not_of('0'));
    CHECK(digits.size() <= 6);
  }

  SUBCASE("byte-identical reruns and input-order independence") {
    auto shuffled = pred;
    std::reverse(shuffled.begin(), shuffled.end());
    write_text_file(dir / "pred_rev.jsonl", write_predictions(shuffled));
    const auto again = run_cli({"eval", "--gt", dir / "gt.jsonl", "--pred", dir / "pred_rev.jsonl"});
    REQUIRE(again.code == 0);
    CHECK(again.out == text);
  }

  SUBCASE("pts directories are accepted") {
    fs::create_directories(dir / "gt_pts");
    for (const auto &g : gt) write_text_file(dir / ("gt_pts/" + g.id + ".pts"), write_pts(g.points));
    const auto viapts = run_cli({"eval", "--gt", dir / "gt_pts", "--pred", dir / "pred.jsonl"});
    REQUIRE(viapts.code == 0);
    CHECK(viapts.out == text);
  }

  SUBCASE("join integrity") {
    auto partial = pred;
    partial.erase(partial.begin());
    partial.push_back({"stranger", pred[0].points});
    write_text_file(dir / "partial.jsonl", write_predictions(partial));
    const auto bad = run_cli({"eval", "--gt", dir / "gt.jsonl", "--pred", dir / "partial.jsonl"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("face0") != std::string::npos);
    CHECK(bad.err.find("stranger") != std::string::npos);
  }

  SUBCASE("config file with explicit-flag precedence") {
    write_text_file(dir / "cfg.json", R"({"norm": "interpupil", "fr-threshold": [8]})");
    const auto cfg = run_cli({"eval", "--gt", dir / "gt.jsonl", "--pred", dir / "pred.jsonl", "--config", dir / "cfg.json"});
    REQUIRE(cfg.code == 0);
    const auto pupil = json::parse(cfg.out);
    CHECK(pupil["fr"].contains("8"));
    CHECK(pupil["nme"].get<double>() > doc["nme"].get<double>());
    const auto flag = run_cli({"eval", "--gt", dir / "gt.jsonl", "--pred", dir / "pred.jsonl", "--config",
                               dir / "cfg.json", "--norm", "interocular"});
    REQUIRE(flag.code == 0);
    CHECK(json::parse(flag.out)["nme"] == doc["nme"]);
  }
}

TEST_CASE("bias-report and estimate-lambda") {
  TempDir dir;
  test::Rng rng(4);
  std::vector<LandmarkRecord> gt;
  synthetic_records(rng, 5, 1.0, &gt);
  write_text_file(dir / "gt.jsonl", write_predictions(gt));
  const auto r = run_cli({"bias-report", "--gt", dir / "gt.jsonl", "--pred", dir / "gt.jsonl", "--ellipses",
                          dir / "ellipses.json"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "landmark,sample_id,e_normal,e_tangent");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(line.substr(line.size() - 4) == ",0,0");
  }
  CHECK(rows == 68 * 5);
  CHECK(json::parse(read_text_file(dir / "ellipses.json"))["ellipses"].size() == 68);

  const auto lam = run_cli({"estimate-lambda", "--gt", dir / "gt.jsonl", "--pred", dir / "gt.jsonl"});
  REQUIRE(lam.code == 0);
  const auto doc = json::parse(lam.out);
  CHECK(doc["landmarks"].size() == 68);
  CHECK(doc["landmarks"][0]["degenerate"] == true);
}

TEST_CASE("scheme show and heatmap gen") {
  TempDir dir;
  const auto shown = run_cli({"scheme", "show"});
  REQUIRE(shown.code == 0);
  CHECK(shown.out == serialize_scheme(builtin_300w()));
  write_text_file(dir / "scheme.json", shown.out);
  const auto reread = run_cli({"scheme", "show", "--scheme", dir / "scheme.json"});
  CHECK(reread.out == shown.out);
  const auto e2p = run_cli({"scheme", "show", "--e2p"});
  CHECK(std::count(e2p.out.begin(), e2p.out.end(), '\n') == 68);

  test::Rng rng(5);
  std::vector<LandmarkRecord> gt;
  synthetic_records(rng, 2, 1.0, &gt);
  write_text_file(dir / "gt.jsonl", write_predictions(gt));
  const auto gen = run_cli({"heatmap", "gen", "--gt", dir / "gt.jsonl", "--out-dir", dir / "maps", "--kind", "edge",
                            "--pgm"});
  REQUIRE(gen.code == 0);
  const auto hm = read_heatmap_dump(fs::path(dir / "maps") / "face1_edge");
  CHECK(hm.channels() == 13);
  CHECK(hm.kind() == HeatmapKind::edge);
  CHECK(fs::exists(fs::path(dir / "maps") / "face0_edge_12.pgm"));
}

TEST_CASE("fit and gradcheck subcommands") {
  const auto grad = run_cli({"gradcheck"});
  CHECK(grad.code == 0);
  CHECK(grad.out.find("FAIL") == std::string::npos);
  CHECK(std::count(grad.out.begin(), grad.out.end(), '\n') == 6);
  CHECK(run_cli({"gradcheck", "--tolerance", "1e-30"}).code == 1);

  TempDir dir;
  const auto exp = run_cli({"fit", "--mode", "experiment", "--seeds", "2", "--traces", dir / "traces.csv"});
  REQUIRE(exp.code == 0);
  const auto doc = json::parse(exp.out);
  CHECK(doc["runs"].size() == 2);
  CHECK(doc["runs"][0]["seeds"].size() == 2);
  const auto traces = read_text_file(dir / "traces.csv");
  CHECK(std::count(traces.begin(), traces.end(), '\n') == 1 + 2 * 2 * 10 * 61);

  const auto coord = run_cli({"fit", "--mode", "coordinate", "--faces", "2"});
  REQUIRE(coord.code == 0);
  CHECK(json::parse(coord.out)["faces"].size() == 2);

  const auto hm = run_cli({"fit", "--mode", "heatmap"});
  REQUIRE(hm.code == 0);
  CHECK(json::parse(hm.out)["within_0.25px"] == 68);
}

TEST_CASE("usage and validation exit codes") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"eval", "--gt", "a", "--pred", "b", "--bogus"}).code == 2);
  CHECK(run_cli({"eval", "--gt", "a"}).code == 2);
  CHECK(run_cli({"eval", "-g", "a"}).code == 2);
  CHECK(run_cli({"fit", "--mode", "sideways"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
  const auto missing = run_cli({"eval", "--gt", "/nonexistent/gt.jsonl", "--pred", "/nonexistent/p.jsonl"});
  CHECK(missing.code == 1);
  CHECK_FALSE(missing.err.empty());
  CHECK(run_cli({"fit", "--mode", "coordinate", "--sigma-normal", "3"}).code == 1);
}
