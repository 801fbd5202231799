#pragma once

#include "lpdm/density.hpp"
#include "lpdm/params.hpp"
#include "lpdm/solver.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace lpdm {

enum class Mode { kSolve, kLadder, kCheckConditions, kVerify, kExportMesh, kOracle };

std::string mode_name(Mode mode);
/// Throws PreconditionError for unknown names.
Mode mode_from_name(const std::string& name);

/// Exactly one of preset, expression or file.
struct DensitySpec {
  enum class Kind { kPreset, kExpression, kFile };
  Kind kind = Kind::kPreset;
  std::string value = "constant:1";

  std::string describe() const;
};

struct ConditionsConfig {
  std::optional<double> A;
  double f_cut = 1e-12;
  double vanishing_tol = 1e-8;
  /// Also report the constants one grid level up (when f can be resampled).
  bool refine = true;
};

struct OracleConfig {
  /// Cosine collocation size N (axisymmetric) or point count (circle).
  int size = 64;
  /// Also run the grid solver on the same density and report the gap.
  bool compare = true;
};

/// One experiment. Parsed from a single JSON document; to_json writes every
/// field back with its default filled in.
struct ExperimentConfig {
  Mode mode = Mode::kSolve;
  ProblemParams params;
  /// S^1 node count (n = 2) or icosahedral level (n = 3). 0 picks the
  /// default (128 or 4).
  int resolution = 0;
  DensitySpec f;
  /// Solve mode: the density solved for is f + eps.
  double eps = 0.0;
  SolverOptions solver;
  LadderConfig ladder;
  ConditionsConfig conditions;
  OracleConfig oracle;
  bool experimental = false;
  /// Field file with h (export-mesh; verify takes it on the command line).
  std::optional<std::string> solution;
  std::string out_dir = "out";
};

/// `mode` comes from the subcommand. For solve, ladder and check-conditions
/// a "mode" key in the document must agree with it; verify, export-mesh and
/// oracle accept the config of any run. Unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc, Mode mode);
ExperimentConfig load_config(const std::string& path, Mode mode);

nlohmann::ordered_json to_json(const ExperimentConfig& config);

/// Grid of the experiment (resolution defaults resolved).
GridPtr experiment_grid(const ExperimentConfig& config);

/// The density sampled on `grid`. Throws PreconditionError("density must be
/// nonnegative") when any sample is negative.
ScalarField sample_density(const DensitySpec& spec, const GridPtr& grid);

/// Pointwise density (not available for file densities).
std::optional<DensityFn> density_function(const DensitySpec& spec);

}  // namespace lpdm
