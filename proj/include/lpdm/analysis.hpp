#pragma once

#include "lpdm/convex_body.hpp"
#include "lpdm/params.hpp"
#include "lpdm/sphere_grid.hpp"

#include <optional>
#include <span>

namespace lpdm {

/// Nodes with f < f_cut count as zeros of f; the conditions are checked
/// there in their polynomial (division-free) form.
constexpr double kDefaultFCut = 1e-12;

struct ConditionOptions {
  double f_cut = kDefaultFCut;
  /// Slack for the division-free checks at vanishing nodes.
  double vanishing_tol = 1e-8;
  /// When set, the report states whether this A satisfies each inequality.
  std::optional<double> A;
};

struct ConditionReport {
  /// sup |grad f^{1/(n-2)}|
  std::optional<double> A_grad;
  /// sup max(0, -lap f^{1/(n-2)})
  std::optional<double> A_lap;
  /// sup max(0, -(f lap f - (3-q)/(2-q) |grad f|^2) / f^{2 - 1/(n-2)})
  std::optional<double> A_II;
  int worst_grad_node = -1;
  int worst_lap_node = -1;
  int worst_II_node = -1;
  /// Division-free forms hold at every node with f < f_cut.
  bool vanishing_ok = true;
  int vanishing_nodes = 0;

  std::optional<double> A_supplied;
  std::optional<bool> grad_ok;
  std::optional<bool> lap_ok;
  std::optional<bool> II_ok;

  /// Same constants one refinement level up (filled by the caller when the
  /// density is available as a function).
  std::optional<double> refined_A_grad;
  std::optional<double> refined_A_lap;
  std::optional<double> refined_A_II;

  double f_cut = kDefaultFCut;
};

/// Minimal constants for |grad f^{1/(n-2)}| <= A and lap f^{1/(n-2)} >= -A.
/// n must be 3 (the exponent is undefined for n = 2; no grids for n >= 4).
ConditionReport condition_I(const ScalarField& f, int n, const ConditionOptions& opts = {});

/// Minimal constant for f lap f - (3-q)/(2-q) |grad f|^2 >= -A f^{2-1/(n-2)}.
/// Requires q < 2.
ConditionReport condition_II(const ScalarField& f, int n, double q,
                             const ConditionOptions& opts = {});

/// Minimal A with a f lap f - b |grad f|^2 >= -A f^{2-1/(n-2)} on the grid.
double minimal_pair_constant(const ScalarField& f, double a, double b, int n,
                             const ConditionOptions& opts = {});

struct AdditivityResult {
  bool holds = false;
  /// Both summands satisfy the inequality with constant A.
  bool premise_holds = false;
  int worst_node = -1;
  /// min over nodes of lhs + 2A f^{2-1/(n-2)} for the sum (>= -tol when holds).
  double worst_margin = 0.0;
};

/// Checks that f1 + f2 satisfies a f lap f - b |grad f|^2 >= -2A f^{2-1/(n-2)}
/// given that each summand satisfies it with A.
AdditivityResult additivity_check(const ScalarField& f1, const ScalarField& f2, double a,
                                  double b, double A, int n, double tol = 1e-8);

struct AlgebraicInequality {
  double lhs = 0.0;  // sum a_i^2
  double rhs = 0.0;  // (sum a_i)^2 / (n-2), n - 1 = length
  bool hypothesis = false;  // min <= 0 <= max
  bool holds = false;
};

/// sum a_i^2 >= (sum a_i)^2 / (n-2) for n-1 reals with min <= 0 <= max.
AlgebraicInequality algebraic_inequality(std::span<const double> a);

struct AprioriReport {
  double min_h = 0.0;
  /// (max f)^{1/(q-p)}: what h^{q-p}(x_min) <= max f gives.
  double c0_lower_bound = 0.0;
  /// 1 / (max f)^{p-q}, the commonly quoted form of this bound; kept
  /// for comparison only (it agrees with the bound above only when max f = 1).
  double c0_lower_bound_as_printed = 0.0;
  /// The lower bound only exists for p > q; otherwise the bounds are NaN
  /// and c0_lower_ok is vacuously true.
  bool c0_applicable = false;
  bool c0_lower_ok = false;
  double max_h = 0.0;
  double max_grad = 0.0;
  /// max |grad h| <= max h + tol.
  bool grad_bound_ok = false;
  /// max of H = tr b = (n-1) h + lap h.
  double max_H = 0.0;
  double min_H = 0.0;
  /// min over nodes of the smallest eigenvalue of b.
  double psd_margin = 0.0;
  double tol_c0 = 1e-8;
  double tol_grad = 1e-6;
};

AprioriReport apriori_report(const SupportFn& h, const ScalarField& f, const ProblemParams& params,
                             double tol_c0 = 1e-8, double tol_grad = 1e-6);

}  // namespace lpdm
