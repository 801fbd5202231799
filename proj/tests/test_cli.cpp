#include "lpdm/cli.hpp"
#include "lpdm/config.hpp"
#include "lpdm/density.hpp"
#include "lpdm/errors.hpp"
#include "lpdm/field_io.hpp"
#include "lpdm/report.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace lpdm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("lpdm_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_json(const fs::path& p, const json& doc) { std::ofstream(p) << doc.dump(2); }

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "lpdm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("expression parser") {
  const Eigen::Vector3d x(0.6, 0.0, 0.8);
  CHECK(Expression::parse("1 + 2 * 3")(x) == 7.0);
  CHECK(Expression::parse("-x1^2")(x) == doctest::Approx(-0.36));
  CHECK(Expression::parse("2^3^2")(x) == 512.0);
  CHECK(Expression::parse("x3^2 + x1*x1")(x) == doctest::Approx(1.0));
  CHECK(Expression::parse("sqrt(abs(-4)) + cos(0) + exp(0) + log(1)")(x) == 4.0);
  CHECK(Expression::parse("sin(pi/2)")(x) == doctest::Approx(1.0));
  CHECK(Expression::parse("(1 + x3) / 2")(x) == doctest::Approx(0.9));
  CHECK_THROWS_WITH_AS(Expression::parse("1 + * 2"), doctest::Contains("position"), PreconditionError);
  CHECK_THROWS_AS(Expression::parse("x4"), PreconditionError);
  CHECK_THROWS_AS(Expression::parse("sin(1"), PreconditionError);
  CHECK_THROWS_AS(Expression::parse(""), PreconditionError);
}

TEST_CASE("presets") {
  const Eigen::Vector3d x = Eigen::Vector3d(1.0, 2.0, 2.0) / 3.0;
  CHECK(preset("constant:4")(x) == 4.0);
  CHECK(preset("equator2")(x) == doctest::Approx(4.0 / 9.0));
  CHECK(preset("twocircle")(x) == doctest::Approx(4.0 / 81.0));
  CHECK(preset("bump:0.5")(x) == doctest::Approx(1.0 + 0.5 * 4.0 / 9.0));
  CHECK_THROWS_AS(preset("nonsense"), PreconditionError);
  CHECK_THROWS_AS(preset("constant"), PreconditionError);
  CHECK_THROWS_AS(preset("bump:abc"), PreconditionError);
  CHECK_THROWS_AS(preset("equator2:1"), PreconditionError);
  for (const PresetInfo& info : presets()) CHECK_FALSE(info.description.empty());
}

TEST_CASE("presets are even and nonnegative") {
  const GridPtr g = build_grid(3, 3);
  for (const std::string name : {"constant:2", "equator2", "twocircle", "bump:0.5"}) {
    const DensityFn f = preset(name);
    for (int i = 0; i < g->size(); ++i) {
      REQUIRE(f(g->node(i)) >= 0.0);
      REQUIRE(f(g->node(i)) == f(g->node(g->antipode(i))));
    }
  }
}

TEST_CASE("field files round-trip exactly") {
  const GridPtr g = build_grid(3, 2);
  const auto field = ScalarField::sample(g, [](const Eigen::Vector3d& x) { return std::exp(x[0]) / 3.0; });
  std::stringstream buf;
  write_field(buf, field, {{"eps", "0.001"}});
  const FieldFile file = read_field(buf);
  CHECK(file.grid_spec == "S2:level=2");
  CHECK(file.meta.at("eps") == "0.001");
  const ScalarField back = to_field(file);
  CHECK(back.values() == field.values());

  FieldFile wrong = file;
  wrong.fingerprint ^= 1;
  CHECK_THROWS_WITH_AS(to_field(wrong), doctest::Contains("fingerprint"), PreconditionError);
  CHECK_THROWS_AS(to_field(file, build_grid(3, 3)), PreconditionError);

  std::istringstream bad("# lpdm-field v1\n# grid S2:level=1\n# nodes 42\n# fingerprint 0\n0 1\n2 1\n");
  CHECK_THROWS_AS(read_field(bad), PreconditionError);
  std::istringstream missing("hello\n");
  CHECK_THROWS_AS(read_field(missing), PreconditionError);
  CHECK_THROWS_AS(grid_from_spec("S3:level=1"), PreconditionError);
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("config parsing") {
  const json doc = json::parse(R"({"params": {"n": 3, "p": 3, "q": 1}, "f": {"preset": "equator2"}})");
  const ExperimentConfig c = parse_config(doc, Mode::kLadder);
  CHECK(c.resolution == 4);
  CHECK(c.params.p == 3.0);
  CHECK(c.solver.enforce_even);
  CHECK_FALSE(parse_config(doc, Mode::kSolve).solver.enforce_even);

  // Every default is written back.
  const auto j = to_json(c);
  for (const char* key : {"mode", "params", "grid", "f", "eps", "solver", "ladder", "conditions", "oracle",
                          "experimental", "solution", "output"}) {
    CHECK(j.contains(key));
  }
  const ExperimentConfig again = parse_config(json::parse(j.dump()), Mode::kLadder);
  CHECK(to_json(again) == j);

  CHECK(parse_config(json::parse(R"({"params": {"n": 2}, "f": {"preset": "constant:1"}})"), Mode::kSolve)
            .resolution == 128);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"f": {"preset": "equator2"}, "bogus": 1})"), Mode::kSolve),
                  PreconditionError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"f": {"preset": "equator2"}, "solver": {"tol": 1}})"), Mode::kSolve),
                  PreconditionError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"mode": "ladder", "f": {"preset": "equator2"}})"), Mode::kSolve),
                  PreconditionError);
  CHECK_NOTHROW(parse_config(json::parse(R"({"mode": "ladder", "f": {"preset": "equator2"}})"), Mode::kVerify));
  CHECK_THROWS_AS(parse_config(json::parse(R"({"f": {"preset": "a", "expression": "1"}})"), Mode::kSolve),
                  PreconditionError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"params": {"n": 4}, "f": {"preset": "equator2"}})"), Mode::kSolve),
                  PreconditionError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"f": {"preset": "equator2"}, "eps": -1})"), Mode::kSolve),
                  PreconditionError);

  DensitySpec neg{DensitySpec::Kind::kExpression, "x3 - 0.5"};
  CHECK_THROWS_WITH_AS(sample_density(neg, build_grid(3, 2)), "density must be nonnegative", PreconditionError);
}

TEST_CASE("sample configs parse") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(LPDM_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    const json doc = json::parse(slurp(entry.path()));
    const Mode mode = doc.contains("mode") ? mode_from_name(doc["mode"].get<std::string>()) : Mode::kSolve;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string(), mode));
  }
  CHECK(count >= 4);
}

TEST_CASE("CSV rows round-trip") {
  ReportRow row;
  row.eps = 1e-3;
  row.log_residual_sup = 1.0 / 3.0;
  row.c0_lower_bound = std::pow(2.0, -0.5);
  row.iterations = 5;
  const auto back = parse_csv_line(csv_line(row));
  REQUIRE(back.has_value());
  CHECK(row_deviation(row, *back) == 0.0);
  CHECK(back->iterations == 5);
  CHECK(csv_header().find("wall") == std::string::npos);
  CHECK_FALSE(parse_csv_line("1,2,3").has_value());
}

TEST_CASE("cli: exit codes for preconditions") {
  TempDir dir("pre");
  const fs::path cfg = dir.path / "neg.json";
  write_json(cfg, {{"params", {{"n", 3}, {"p", 2}, {"q", 1}}},
                   {"grid", {{"resolution", 2}}},
                   {"f", {{"expression", "x3 - 0.5"}}}});
  Run r = run({"solve", "--config", cfg.string(), "--out", (dir.path / "o").string()});
  CHECK(r.code == kExitPrecondition);
  CHECK(r.err.find("density must be nonnegative") != std::string::npos);

  const fs::path pq = dir.path / "pq.json";
  write_json(pq, {{"params", {{"n", 3}, {"p", 1}, {"q", 1}}}, {"f", {{"preset", "constant:1"}}}});
  CHECK(run({"solve", "--config", pq.string(), "--out", (dir.path / "o").string()}).code == kExitPrecondition);
  CHECK(run({"solve"}).code == kExitPrecondition);
  CHECK(run({"solve", "--config", (dir.path / "absent.json").string(), "--out", (dir.path / "o").string()}).code ==
        kExitPrecondition);
}

TEST_CASE("cli: solve, verify and export-mesh") {
  TempDir dir("solve");
  const fs::path cfg = dir.path / "solve.json";
  const fs::path out = dir.path / "run";
  write_json(cfg, {{"params", {{"n", 3}, {"p", 2}, {"q", 1}}},
                   {"grid", {{"resolution", 3}}},
                   {"f", {{"preset", "bump:0.5"}}}});
  Run r = run({"solve", "--config", cfg.string(), "--out", out.string()});
  REQUIRE(r.code == kExitOk);
  for (const char* name : {"report.csv", "h.txt", "body.obj", "summary.json", "timings.json"}) {
    CHECK(fs::exists(out / name));
  }
  CHECK(slurp(out / "report.csv").rfind(csv_header(), 0) == 0);

  r = run({"verify", "--config", cfg.string(), "--out", (dir.path / "verify").string(), (out / "h.txt").string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("max deviation") != std::string::npos);

  // A tampered report is detected.
  std::string text = slurp(out / "report.csv");
  const auto pos = text.find('\n', 0);
  const auto comma = text.find(',', pos + 1);
  text.insert(comma + 1, "9");
  std::ofstream(out / "report.csv", std::ios::binary) << text;
  r = run({"verify", "--config", cfg.string(), "--out", (dir.path / "verify").string(), (out / "h.txt").string()});
  CHECK(r.code == kExitFailure);

  const fs::path mesh_cfg = dir.path / "mesh.json";
  write_json(mesh_cfg, {{"solution", (out / "h.txt").string()}});
  r = run({"export-mesh", "--config", mesh_cfg.string(), "--out", (dir.path / "mesh").string()});
  CHECK(r.code == kExitOk);
  CHECK(slurp(dir.path / "mesh" / "body.obj") == slurp(out / "body.obj"));
}

TEST_CASE("cli: check-conditions") {
  TempDir dir("cond");
  const fs::path cfg = dir.path / "c.json";
  write_json(cfg, {{"params", {{"n", 3}, {"p", 2}, {"q", 1}}},
                   {"grid", {{"resolution", 3}}},
                   {"f", {{"preset", "equator2"}}}});
  REQUIRE(run({"check-conditions", "--config", cfg.string(), "--out", dir.path.string()}).code == kExitOk);
  const json j = json::parse(slurp(dir.path / "conditions.json"));
  CHECK(j["condition_I"]["A_grad"].get<double>() == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(j["condition_I"]["refined_A_lap"].get<double>() == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(j["condition_II"]["A_II"].get<double>() == doctest::Approx(6.0).epsilon(1e-2));

  const fs::path q2 = dir.path / "q2.json";
  write_json(q2, {{"params", {{"n", 3}, {"p", 3}, {"q", 2}}}, {"f", {{"preset", "equator2"}}}, {"grid", {{"resolution", 2}}}});
  REQUIRE(run({"check-conditions", "--config", q2.string(), "--out", dir.path.string()}).code == kExitOk);
  CHECK(json::parse(slurp(dir.path / "conditions.json"))["condition_II"].contains("error"));
}

TEST_CASE("cli: ladder failure reports exit 3 and keeps the partial report") {
  TempDir dir("fail");
  const fs::path cfg = dir.path / "l.json";
  write_json(cfg, {{"params", {{"n", 3}, {"p", 2}, {"q", 1}}},
                   {"grid", {{"resolution", 2}}},
                   {"f", {{"preset", "equator2"}}},
                   {"solver", {{"max_iters", 2}}}});
  const Run r = run({"ladder", "--config", cfg.string(), "--out", dir.path.string()});
  CHECK(r.code == kExitNonConvergence);
  const json s = json::parse(slurp(dir.path / "summary.json"));
  CHECK_FALSE(s["completed"].get<bool>());
  CHECK(fs::exists(dir.path / "report.csv"));
}

TEST_CASE("cli: oracle") {
  TempDir dir("oracle");
  const fs::path cfg = dir.path / "o.json";
  write_json(cfg, {{"params", {{"n", 3}, {"p", 2}, {"q", 1}}},
                   {"grid", {{"resolution", 3}}},
                   {"f", {{"preset", "bump:0.5"}}}});
  REQUIRE(run({"oracle", "--config", cfg.string(), "--out", dir.path.string()}).code == kExitOk);
  const json s = json::parse(slurp(dir.path / "summary.json"));
  CHECK(s["compare"]["sup_dh"].get<double>() <= 1e-5);

  write_json(cfg, {{"params", {{"n", 3}, {"p", 2}, {"q", 1}}}, {"f", {{"expression", "1 + x1^2"}}}});
  CHECK(run({"oracle", "--config", cfg.string(), "--out", dir.path.string()}).code == kExitPrecondition);
}
