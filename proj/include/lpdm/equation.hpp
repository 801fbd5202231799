#pragma once

#include "lpdm/convex_body.hpp"
#include "lpdm/params.hpp"
#include "lpdm/sphere_grid.hpp"

#include <Eigen/SparseCore>

namespace lpdm {

/// A residual field with its norms. l2_norm uses the grid quadrature.
struct ResidualField {
  ScalarField values;
  double sup_norm = 0.0;
  double l2_norm = 0.0;

  explicit ResidualField(ScalarField v);
};

/// h^{1-p} (|grad h|^2 + h^2)^{-(n-q)/2} det b, node-wise.
ScalarField operator_lhs(const SupportFn& h, const ProblemParams& params);

/// R = operator_lhs(h) - f. Requires f >= 0.
ResidualField residual(const SupportFn& h, const ScalarField& f, const ProblemParams& params);

/// G = log det b - (p-1) log h - ((n-q)/2) log(|grad h|^2 + h^2) - log f.
/// Requires f > 0; throws NumericalError where det b <= 0.
ResidualField log_residual(const SupportFn& h, const ScalarField& f, const ProblemParams& params);

/// Rounding-noise bound for the discrete log residual at h:
///   u * max_i (sum_j |w_ij| |h_j|) / lambda_min(b_i),
/// with w the second-derivative stencil weights and u the unit roundoff.
/// The small eigenvalue of b is a cancellation between hess h and h I, so
/// sup |G| cannot be driven below roughly this value in double precision.
double log_residual_rounding_floor(const SupportFn& h);

/// Jacobian of the discrete log residual with respect to the nodal values of h:
///   L[d] = tr(b^{-1}(hess d + d I)) - (p-1) d/h - (n-q)(<grad h, grad d> + h d)/(|grad h|^2 + h^2).
/// Exact for the discrete operator, since the stencils are linear in the values.
class Linearization {
 public:
  Linearization(const SupportFn& h, const ProblemParams& params);

  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  ScalarField apply(const ScalarField& delta) const;

 private:
  GridPtr grid_;
  Eigen::SparseMatrix<double> matrix_;
};

Linearization linearize(const SupportFn& h, const ProblemParams& params);

}  // namespace lpdm
