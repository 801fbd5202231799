#include "lpdm/config.hpp"

#include "lpdm/errors.hpp"
#include "lpdm/field_io.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace lpdm {

namespace {

using nlohmann::json;

constexpr int kDefaultCircleNodes = 128;
constexpr int kDefaultLevel = 4;

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw PreconditionError("config: " + where + " must be an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw PreconditionError("config: unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& target, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw PreconditionError("config: " + where + "." + key + " has the wrong type");
  }
}

}  // namespace

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::kSolve: return "solve";
    case Mode::kLadder: return "ladder";
    case Mode::kCheckConditions: return "check-conditions";
    case Mode::kVerify: return "verify";
    case Mode::kExportMesh: return "export-mesh";
    case Mode::kOracle: return "oracle";
  }
  return "solve";
}

Mode mode_from_name(const std::string& name) {
  for (Mode m : {Mode::kSolve, Mode::kLadder, Mode::kCheckConditions, Mode::kVerify,
                 Mode::kExportMesh, Mode::kOracle}) {
    if (mode_name(m) == name) return m;
  }
  throw PreconditionError("unknown mode '" + name + "'");
}

std::string DensitySpec::describe() const {
  switch (kind) {
    case Kind::kPreset: return "preset:" + value;
    case Kind::kExpression: return "expression:" + value;
    case Kind::kFile: return "file:" + value;
  }
  return value;
}

ExperimentConfig parse_config(const json& doc, Mode mode) {
  reject_unknown(doc, "config",
                 {"mode", "params", "grid", "f", "eps", "solver", "ladder", "conditions", "oracle",
                  "experimental", "solution", "output"});
  ExperimentConfig c;
  c.mode = mode;
  // verify, export-mesh and oracle may reuse the config of another run.
  const bool strict_mode = mode == Mode::kSolve || mode == Mode::kLadder ||
                           mode == Mode::kCheckConditions;
  if (strict_mode && doc.contains("mode")) {
    std::string declared;
    read(doc, "mode", declared, "config");
    if (mode_from_name(declared) != mode) {
      throw PreconditionError("config declares mode '" + declared + "' but the subcommand is '" +
                              mode_name(mode) + "'");
    }
  }
  c.solver.enforce_even = mode == Mode::kLadder;

  if (doc.contains("params")) {
    const json& p = doc["params"];
    reject_unknown(p, "params", {"n", "p", "q"});
    read(p, "n", c.params.n, "params");
    read(p, "p", c.params.p, "params");
    read(p, "q", c.params.q, "params");
  }
  c.params.validate();

  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    reject_unknown(g, "grid", {"resolution"});
    read(g, "resolution", c.resolution, "grid");
  }
  if (c.resolution == 0) c.resolution = c.params.n == 2 ? kDefaultCircleNodes : kDefaultLevel;

  if (doc.contains("f")) {
    const json& f = doc["f"];
    reject_unknown(f, "f", {"preset", "expression", "file"});
    if (f.size() != 1) {
      throw PreconditionError("config: f needs exactly one of preset, expression or file");
    }
    if (f.contains("preset")) c.f.kind = DensitySpec::Kind::kPreset;
    if (f.contains("expression")) c.f.kind = DensitySpec::Kind::kExpression;
    if (f.contains("file")) c.f.kind = DensitySpec::Kind::kFile;
    if (!f.begin()->is_string()) throw PreconditionError("config: f value must be a string");
    c.f.value = f.begin()->get<std::string>();
  } else if (mode != Mode::kExportMesh) {
    throw PreconditionError("config: missing density 'f'");
  }
  read(doc, "eps", c.eps, "config");
  if (!(c.eps >= 0.0)) throw PreconditionError("config: eps must be nonnegative");

  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    reject_unknown(s, "solver",
                   {"tol_residual", "max_iters", "backtrack", "min_step", "psd_floor",
                    "enforce_even", "accept_rounding_floor"});
    read(s, "tol_residual", c.solver.tol_residual, "solver");
    read(s, "max_iters", c.solver.max_iters, "solver");
    read(s, "backtrack", c.solver.backtrack, "solver");
    read(s, "min_step", c.solver.min_step, "solver");
    read(s, "psd_floor", c.solver.psd_floor, "solver");
    read(s, "enforce_even", c.solver.enforce_even, "solver");
    read(s, "accept_rounding_floor", c.solver.accept_rounding_floor, "solver");
  }
  c.solver.validate();

  if (doc.contains("ladder")) {
    const json& l = doc["ladder"];
    reject_unknown(l, "ladder", {"eps0", "factor", "eps_min"});
    read(l, "eps0", c.ladder.eps0, "ladder");
    read(l, "factor", c.ladder.factor, "ladder");
    read(l, "eps_min", c.ladder.eps_min, "ladder");
  }
  c.ladder.validate();

  if (doc.contains("conditions")) {
    const json& k = doc["conditions"];
    reject_unknown(k, "conditions", {"A", "f_cut", "vanishing_tol", "refine"});
    if (k.contains("A") && !k["A"].is_null()) {
      double a = 0.0;
      read(k, "A", a, "conditions");
      c.conditions.A = a;
    }
    read(k, "f_cut", c.conditions.f_cut, "conditions");
    read(k, "vanishing_tol", c.conditions.vanishing_tol, "conditions");
    read(k, "refine", c.conditions.refine, "conditions");
  }

  if (doc.contains("oracle")) {
    const json& o = doc["oracle"];
    reject_unknown(o, "oracle", {"size", "compare"});
    read(o, "size", c.oracle.size, "oracle");
    read(o, "compare", c.oracle.compare, "oracle");
  }

  read(doc, "experimental", c.experimental, "config");
  if (doc.contains("solution") && !doc["solution"].is_null()) {
    std::string path;
    read(doc, "solution", path, "config");
    c.solution = path;
  }
  if (doc.contains("output")) {
    const json& o = doc["output"];
    reject_unknown(o, "output", {"dir"});
    read(o, "dir", c.out_dir, "output");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, Mode mode) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot read config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw PreconditionError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, mode);
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["mode"] = mode_name(c.mode);
  j["params"] = {{"n", c.params.n}, {"p", c.params.p}, {"q", c.params.q}};
  j["grid"] = {{"resolution", c.resolution}};
  switch (c.f.kind) {
    case DensitySpec::Kind::kPreset: j["f"] = {{"preset", c.f.value}}; break;
    case DensitySpec::Kind::kExpression: j["f"] = {{"expression", c.f.value}}; break;
    case DensitySpec::Kind::kFile: j["f"] = {{"file", c.f.value}}; break;
  }
  j["eps"] = c.eps;
  j["solver"] = {{"tol_residual", c.solver.tol_residual},
                 {"max_iters", c.solver.max_iters},
                 {"backtrack", c.solver.backtrack},
                 {"min_step", c.solver.min_step},
                 {"psd_floor", c.solver.psd_floor},
                 {"enforce_even", c.solver.enforce_even},
                 {"accept_rounding_floor", c.solver.accept_rounding_floor}};
  j["ladder"] = {{"eps0", c.ladder.eps0}, {"factor", c.ladder.factor}, {"eps_min", c.ladder.eps_min}};
  j["conditions"] = {{"A", c.conditions.A ? nlohmann::ordered_json(*c.conditions.A) : nullptr},
                     {"f_cut", c.conditions.f_cut},
                     {"vanishing_tol", c.conditions.vanishing_tol},
                     {"refine", c.conditions.refine}};
  j["oracle"] = {{"size", c.oracle.size}, {"compare", c.oracle.compare}};
  j["experimental"] = c.experimental;
  j["solution"] = c.solution ? nlohmann::ordered_json(*c.solution) : nullptr;
  j["output"] = {{"dir", c.out_dir}};
  return j;
}

GridPtr experiment_grid(const ExperimentConfig& config) {
  return build_grid(config.params.n, config.resolution);
}

std::optional<DensityFn> density_function(const DensitySpec& spec) {
  switch (spec.kind) {
    case DensitySpec::Kind::kPreset: return preset(spec.value);
    case DensitySpec::Kind::kExpression: {
      const Expression e = Expression::parse(spec.value);
      return DensityFn([e](const Eigen::Vector3d& x) { return e(x); });
    }
    case DensitySpec::Kind::kFile: return std::nullopt;
  }
  return std::nullopt;
}

ScalarField sample_density(const DensitySpec& spec, const GridPtr& grid) {
  Eigen::VectorXd values;
  if (spec.kind == DensitySpec::Kind::kFile) {
    values = to_field(read_field_file(spec.value), grid).values();
  } else {
    const DensityFn fn = *density_function(spec);
    values.resize(grid->size());
    for (int i = 0; i < grid->size(); ++i) values[i] = fn(grid->node(i));
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw PreconditionError("density is not finite at node " + std::to_string(i));
    }
  }
  if (values.size() > 0 && values.minCoeff() < 0.0) {
    throw PreconditionError("density must be nonnegative");
  }
  return ScalarField(grid, std::move(values));
}

}  // namespace lpdm
