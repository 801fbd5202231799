#pragma once

#include "lpdm/analysis.hpp"
#include "lpdm/convex_body.hpp"
#include "lpdm/equation.hpp"
#include "lpdm/errors.hpp"
#include "lpdm/params.hpp"
#include "lpdm/sphere_grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lpdm {

struct SolverOptions {
  /// Stop when sup |G| <= tol_residual.
  double tol_residual = 1e-9;
  int max_iters = 50;
  /// Step multiplier applied on each rejected trial.
  double backtrack = 0.5;
  /// Smallest admissible step; below it the line search has stalled.
  double min_step = 0x1p-30;
  /// Trial iterates need min eig b > psd_floor.
  double psd_floor = 1e-12;
  /// A stalled line search counts as convergence when sup |G| is already
  /// below log_residual_rounding_floor(h) (the report flags it).
  bool accept_rounding_floor = true;
  /// Project every iterate onto even functions.
  bool enforce_even = false;

  void validate() const;
};

/// eps_k = eps0 * factor^k, stopping at eps_min (always the last level).
struct LadderConfig {
  double eps0 = 1e-1;
  double factor = 0.31622776601683794;  // 10^{-1/2}
  double eps_min = 1e-5;

  void validate() const;
  std::vector<double> levels() const;
};

struct IterationRecord {
  double log_sup = 0.0;  // sup |G| before the step
  double step = 0.0;     // accepted step length (0 for the final record)
};

struct SolveReport {
  SolveReport(SupportFn solution, ScalarField density)
      : h(std::move(solution)), f(std::move(density)) {}

  SupportFn h;
  /// The density actually solved for (f + eps inside a ladder).
  ScalarField f;
  ProblemParams params;
  SolverOptions options;
  int iterations = 0;
  std::vector<IterationRecord> history;
  /// Rounding-noise bound of sup |G| at the returned h.
  double rounding_floor = 0.0;
  /// Stopped at the rounding floor with tol_residual < sup |G|.
  bool floor_limited = false;

  double log_sup = 0.0;
  double log_l2 = 0.0;
  double plain_sup = 0.0;
  double plain_l2 = 0.0;

  double min_h = 0.0;
  double max_h = 0.0;
  double max_grad = 0.0;
  double max_H = 0.0;
  double psd_margin = 0.0;

  AprioriReport apriori;
  GeometricIdentityReport geometry;
  DualIntegralIdentity dual;

  /// Seconds; kept out of every file that must be reproducible.
  double wall_time = 0.0;
};

/// Raised when the line search stalls, the iteration budget runs out or the
/// Newton system cannot be solved.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, int iterations, double last_log_sup);
  int iterations() const { return iterations_; }
  double last_log_sup() const { return last_log_sup_; }

 private:
  int iterations_;
  double last_log_sup_;
};

/// Damped Newton on the log form. Requires f > 0 and a convex, positive init.
SolveReport newton_solve(const ScalarField& f, const ProblemParams& params, const SupportFn& init,
                         const SolverOptions& opts = {});

/// h = (max f)^{1/(q-p)}: exact for constant f. Throws when p == q or f is
/// not strictly positive.
SupportFn default_init(const ScalarField& f, const ProblemParams& params);

/// Differences between consecutive ladder levels k and k+1.
struct CauchyStep {
  double eps_from = 0.0;
  double eps_to = 0.0;
  double sup_dh = 0.0;
  double sup_dgrad = 0.0;  // sup |grad h_k - grad h_{k+1}| (ambient vectors)
  double sup_dH = 0.0;
};

struct LadderLevel {
  double eps = 0.0;
  SolveReport report;
};

struct LadderReport {
  ProblemParams params;
  LadderConfig config;
  SolverOptions options;
  std::vector<LadderLevel> levels;
  std::vector<CauchyStep> cauchy;
  /// False when a level failed; levels then holds the solved prefix.
  bool completed = false;
  std::optional<double> failed_eps;
  std::string failure;

  /// Solution at the smallest solved eps.
  const SupportFn* limit() const { return levels.empty() ? nullptr : &levels.back().report.h; }
};

/// Solves with f + eps for every eps of the ladder, warm-starting each level
/// from the previous one. Requires f >= 0, even and nonzero; outside
/// p > q > 0 the call is refused unless `experimental` is set. A level that
/// fails to converge ends the ladder; the partial report is returned.
LadderReport continuation_ladder(const ScalarField& f, const ProblemParams& params,
                                 const LadderConfig& ladder, const SolverOptions& opts = {},
                                 bool experimental = false);

}  // namespace lpdm
