#include "lpdm/cli.hpp"

#include "lpdm/analysis.hpp"
#include "lpdm/config.hpp"
#include "lpdm/errors.hpp"
#include "lpdm/field_io.hpp"
#include "lpdm/oracle.hpp"
#include "lpdm/report.hpp"
#include "lpdm/solver.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lpdm {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct Context {
  ExperimentConfig config;
  fs::path out_dir;
  std::ostream& out;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw PreconditionError("cannot write " + path.string());
  file << content;
  if (!file) throw PreconditionError("failed writing " + path.string());
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson grid_json(const Grid& grid) {
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(grid.fingerprint()));
  return {{"spec", grid.spec()}, {"nodes", grid.size()}, {"fingerprint", hex}};
}

std::map<std::string, std::string> solution_meta(const ExperimentConfig& c, double eps, int iterations) {
  return {{"density", c.f.describe()},
          {"params", c.params.describe()},
          {"eps", format_double(eps)},
          {"iterations", std::to_string(iterations)}};
}

void write_solution(const fs::path& path, const SupportFn& h, const ExperimentConfig& c, double eps,
                    int iterations) {
  std::ostringstream text;
  write_field(text, h.field(), solution_meta(c, eps, iterations));
  write_file(path, text.str());
}

void write_mesh(const fs::path& path, const SupportFn& h) {
  std::ostringstream text;
  write_obj(text, h);
  write_file(path, text.str());
}

ScalarField shifted(const ScalarField& f, double eps) {
  return ScalarField(f.grid_ptr(), f.values().array() + eps);
}

// Outside p > q > 0 there is no existence theory; such runs need the
// experimental flag.
void require_regime(const ExperimentConfig& c) {
  if (!c.params.guaranteed_regime() && !c.experimental) {
    throw PreconditionError(c.params.describe() +
                            " is outside p > q > 0; pass --experimental to run anyway");
  }
}

int cmd_solve(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const GridPtr grid = experiment_grid(c);
  const ScalarField f = shifted(sample_density(c.f, grid), c.eps);
  require_regime(c);
  const SolveReport r = newton_solve(f, c.params, default_init(f, c.params), c.solver);

  write_file(ctx.out_dir / "report.csv", csv_header() + "\n" + csv_line(make_row(r, c.eps)) + "\n");
  write_solution(ctx.out_dir / "h.txt", r.h, c, c.eps, r.iterations);
  if (grid->dim() == 3) write_mesh(ctx.out_dir / "body.obj", r.h);
  ojson summary;
  summary["config"] = to_json(c);
  summary["grid"] = grid_json(*grid);
  summary["guaranteed_regime"] = c.params.guaranteed_regime();
  summary["result"] = level_json(r, c.eps);
  write_file(ctx.out_dir / "summary.json", dump(summary));
  write_file(ctx.out_dir / "timings.json", dump(ojson{{"wall_time", r.wall_time}}));
  ctx.out << "solved in " << r.iterations << " iterations, sup|G| = " << r.log_sup << "\n";
  return kExitOk;
}

int cmd_ladder(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const GridPtr grid = experiment_grid(c);
  const ScalarField f = sample_density(c.f, grid);
  const LadderReport L = continuation_ladder(f, c.params, c.ladder, c.solver, c.experimental);

  std::string csv = csv_header() + "\n";
  ojson levels = ojson::array();
  ojson timings = ojson::array();
  for (std::size_t k = 0; k < L.levels.size(); ++k) {
    const auto& level = L.levels[k];
    csv += csv_line(make_row(level.report, level.eps)) + "\n";
    levels.push_back(level_json(level.report, level.eps));
    timings.push_back({{"eps", level.eps}, {"wall_time", level.report.wall_time}});
    char name[32];
    std::snprintf(name, sizeof name, "h_level_%02zu.txt", k);
    write_solution(ctx.out_dir / name, level.report.h, c, level.eps, level.report.iterations);
  }
  write_file(ctx.out_dir / "report.csv", csv);
  if (const SupportFn* h = L.limit()) {
    const auto& last = L.levels.back();
    write_solution(ctx.out_dir / "h_final.txt", *h, c, last.eps, last.report.iterations);
    if (grid->dim() == 3) write_mesh(ctx.out_dir / "body.obj", *h);
  }

  ojson cauchy = ojson::array();
  for (const auto& s : L.cauchy) {
    cauchy.push_back({{"eps_from", s.eps_from},
                      {"eps_to", s.eps_to},
                      {"sup_dh", s.sup_dh},
                      {"sup_dgrad", s.sup_dgrad},
                      {"sup_dH", s.sup_dH}});
  }
  ojson summary;
  summary["config"] = to_json(c);
  summary["grid"] = grid_json(*grid);
  summary["guaranteed_regime"] = c.params.guaranteed_regime();
  summary["eps_levels"] = c.ladder.levels();
  summary["completed"] = L.completed;
  summary["failed_eps"] = L.failed_eps ? ojson(*L.failed_eps) : ojson(nullptr);
  summary["failure"] = L.failure;
  summary["levels"] = levels;
  summary["cauchy"] = cauchy;
  write_file(ctx.out_dir / "summary.json", dump(summary));
  write_file(ctx.out_dir / "timings.json", dump(ojson{{"levels", timings}}));

  ctx.out << "ladder: " << L.levels.size() << " of " << c.ladder.levels().size() << " levels solved\n";
  if (!L.completed) {
    throw NonConvergence("ladder stopped at eps = " + format_double(*L.failed_eps) + ": " + L.failure,
                         0, 0.0);
  }
  return kExitOk;
}

ojson condition_json(const ConditionReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? number_or_null(*v) : ojson(nullptr); };
  auto optb = [](const std::optional<bool>& v) { return v ? ojson(*v) : ojson(nullptr); };
  ojson j;
  if (r.A_grad) {
    j["A_grad"] = opt(r.A_grad);
    j["A_lap"] = opt(r.A_lap);
    j["worst_grad_node"] = r.worst_grad_node;
    j["worst_lap_node"] = r.worst_lap_node;
    j["refined_A_grad"] = opt(r.refined_A_grad);
    j["refined_A_lap"] = opt(r.refined_A_lap);
    j["grad_ok"] = optb(r.grad_ok);
    j["lap_ok"] = optb(r.lap_ok);
  }
  if (r.A_II) {
    j["A_II"] = opt(r.A_II);
    j["worst_II_node"] = r.worst_II_node;
    j["refined_A_II"] = opt(r.refined_A_II);
    j["II_ok"] = optb(r.II_ok);
  }
  j["vanishing_nodes"] = r.vanishing_nodes;
  j["vanishing_ok"] = r.vanishing_ok;
  j["A_supplied"] = opt(r.A_supplied);
  j["f_cut"] = r.f_cut;
  return j;
}

int cmd_check_conditions(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const GridPtr grid = experiment_grid(c);
  const ScalarField f = sample_density(c.f, grid);
  ConditionOptions opts;
  opts.f_cut = c.conditions.f_cut;
  opts.vanishing_tol = c.conditions.vanishing_tol;
  opts.A = c.conditions.A;

  std::optional<ScalarField> fine;
  const auto fn = density_function(c.f);
  if (c.conditions.refine && fn && grid->dim() == 3 && c.resolution < Grid::kMaxIcosahedralLevel) {
    fine = sample_density(c.f, build_grid(3, c.resolution + 1));
  }

  ConditionReport one = condition_I(f, c.params.n, opts);
  if (fine) {
    const ConditionReport r = condition_I(*fine, c.params.n, opts);
    one.refined_A_grad = r.A_grad;
    one.refined_A_lap = r.A_lap;
  }
  ojson summary;
  summary["config"] = to_json(c);
  summary["grid"] = grid_json(*grid);
  summary["condition_I"] = condition_json(one);
  try {
    ConditionReport two = condition_II(f, c.params.n, c.params.q, opts);
    if (fine) two.refined_A_II = condition_II(*fine, c.params.n, c.params.q, opts).A_II;
    summary["condition_II"] = condition_json(two);
  } catch (const PreconditionError& e) {
    summary["condition_II"] = {{"error", e.what()}};
  }
  write_file(ctx.out_dir / "conditions.json", dump(summary));
  ctx.out << "A_grad = " << *one.A_grad << ", A_lap = " << *one.A_lap << "\n";
  return kExitOk;
}

int cmd_verify(Context& ctx, const std::string& solution_path) {
  const ExperimentConfig& c = ctx.config;
  const FieldFile file = read_field_file(solution_path);
  if (auto it = file.meta.find("params"); it != file.meta.end() && it->second != c.params.describe()) {
    throw PreconditionError("solution was computed with " + it->second + ", config has " +
                            c.params.describe());
  }
  const double eps = file.meta.count("eps") ? std::stod(file.meta.at("eps")) : 0.0;
  const int iterations = file.meta.count("iterations") ? std::stoi(file.meta.at("iterations")) : 0;
  const SupportFn h(to_field(file));
  const ScalarField f = shifted(sample_density(c.f, h.field().grid_ptr()), eps);
  const ReportRow row = recompute_row(h, f, c.params, eps, iterations);
  const std::string text = csv_header() + "\n" + csv_line(row) + "\n";
  write_file(ctx.out_dir / "verify.csv", text);
  ctx.out << text;

  const fs::path report = fs::path(solution_path).parent_path() / "report.csv";
  std::ifstream in(report);
  if (!in) return kExitOk;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto stored = parse_csv_line(line);
    if (!stored || format_double(stored->eps) != format_double(eps)) continue;
    const double dev = row_deviation(*stored, row);
    ctx.out << "max deviation from " << report.string() << ": " << dev << "\n";
    if (dev > 1e-14) {
      throw Error("recomputed row differs from the stored report by " + format_double(dev));
    }
    return kExitOk;
  }
  ctx.out << "no row with eps = " << format_double(eps) << " in " << report.string() << "\n";
  return kExitOk;
}

int cmd_export_mesh(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  if (!c.solution) throw PreconditionError("export-mesh needs 'solution' (a field file) in the config");
  const SupportFn h(to_field(read_field_file(*c.solution)));
  write_mesh(ctx.out_dir / "body.obj", h);
  ctx.out << "wrote " << (ctx.out_dir / "body.obj").string() << "\n";
  return kExitOk;
}

int cmd_oracle(Context& ctx) {
  const ExperimentConfig& c = ctx.config;
  const auto fn = density_function(c.f);
  if (!fn) throw PreconditionError("the oracle needs a preset or expression density");
  require_regime(c);
  ODEProblem prob;
  prob.p = c.params.p;
  prob.q = c.params.q;
  prob.size = c.oracle.size;
  const double eps = c.eps;
  if (c.params.n == 2) {
    prob.mode = OracleMode::kS1;
    prob.f = [fn, eps](double t) { return (*fn)(Eigen::Vector3d(std::cos(t), std::sin(t), 0.0)) + eps; };
  } else {
    prob.mode = OracleMode::kAxisymS2;
    for (int a = 1; a < 8; ++a) {
      const double t = 0.4 * a;
      const double ref = (*fn)(Eigen::Vector3d(std::sin(t), 0.0, std::cos(t)));
      for (int b = 1; b < 6; ++b) {
        const double phi = 1.1 * b;
        const Eigen::Vector3d x(std::sin(t) * std::cos(phi), std::sin(t) * std::sin(phi), std::cos(t));
        if (std::abs((*fn)(x) - ref) > 1e-12 * (1.0 + std::abs(ref))) {
          throw PreconditionError("the S^2 oracle needs a density symmetric about the x3 axis");
        }
      }
    }
    prob.f = [fn, eps](double t) { return (*fn)(Eigen::Vector3d(std::sin(t), 0.0, std::cos(t))) + eps; };
  }
  const Profile profile = solve_oracle(prob);

  std::string csv = "theta,h,H\n";
  for (Eigen::Index j = 0; j < profile.nodes().size(); ++j) {
    const double t = profile.nodes()[j];
    csv += format_double(t) + "," + format_double(profile.values()[j]) + "," +
           format_double(profile.H(t)) + "\n";
  }
  write_file(ctx.out_dir / "oracle.csv", csv);

  ojson summary;
  summary["config"] = to_json(c);
  summary["oracle"] = {{"mode", prob.mode == OracleMode::kS1 ? "s1" : "axisym_s2"},
                       {"residual", profile.residual},
                       {"iterations", profile.iterations},
                       {"min_b", profile.min_b}};
  if (c.oracle.compare) {
    const GridPtr grid = experiment_grid(c);
    const ScalarField f = shifted(sample_density(c.f, grid), eps);
    const SolveReport r = newton_solve(f, c.params, default_init(f, c.params), c.solver);
    double dh = 0.0;
    double dH = 0.0;
    for (int i = 0; i < grid->size(); ++i) {
      const double t = profile.angle_of(grid->node(i));
      dh = std::max(dh, std::abs(r.h[i] - profile.value(t)));
      dH = std::max(dH, std::abs(r.h.trace_b(i) - profile.H(t)));
    }
    summary["grid"] = grid_json(*grid);
    summary["compare"] = {{"sup_dh", dh}, {"sup_dH", dH}, {"grid_iterations", r.iterations}};
    ctx.out << "oracle vs grid: sup|dh| = " << dh << "\n";
  }
  write_file(ctx.out_dir / "summary.json", dump(summary));
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lp dual Minkowski equation laboratory"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::string out_dir;
    bool experimental = false;
    std::string solution;
  } args;

  const std::pair<Mode, const char*> commands[] = {
      {Mode::kSolve, "Damped Newton solve for f + eps"},
      {Mode::kLadder, "eps-continuation ladder f + eps_k"},
      {Mode::kCheckConditions, "Minimal constants of Conditions I and II"},
      {Mode::kVerify, "Recompute a report row from a stored solution"},
      {Mode::kExportMesh, "OBJ mesh of a stored S^2 solution"},
      {Mode::kOracle, "One-dimensional collocation oracle"},
  };
  std::vector<std::pair<Mode, CLI::App*>> subs;
  for (const auto& [mode, help] : commands) {
    CLI::App* sub = app.add_subcommand(mode_name(mode), help);
    sub->add_option("--config", args.config, "JSON experiment config")->required();
    sub->add_option("--out", args.out_dir, "Output directory (overrides output.dir)");
    sub->add_flag("--experimental", args.experimental, "Allow (p, q) outside p > q > 0");
    if (mode == Mode::kVerify) {
      sub->add_option("solution-file", args.solution, "Field file written by solve or ladder")
          ->required();
    }
    subs.emplace_back(mode, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitPrecondition;
  }

  Mode mode = Mode::kSolve;
  for (const auto& [m, sub] : subs) {
    if (sub->parsed()) mode = m;
  }

  try {
    ExperimentConfig config = load_config(args.config, mode);
    if (args.experimental) config.experimental = true;
    Context ctx{config, args.out_dir.empty() ? fs::path(config.out_dir) : fs::path(args.out_dir), out};
    fs::create_directories(ctx.out_dir);
    switch (mode) {
      case Mode::kSolve: return cmd_solve(ctx);
      case Mode::kLadder: return cmd_ladder(ctx);
      case Mode::kCheckConditions: return cmd_check_conditions(ctx);
      case Mode::kVerify: return cmd_verify(ctx, args.solution);
      case Mode::kExportMesh: return cmd_export_mesh(ctx);
      case Mode::kOracle: return cmd_oracle(ctx);
    }
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace lpdm
