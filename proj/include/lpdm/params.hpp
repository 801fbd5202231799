#pragma once

#include <string>

namespace lpdm {

/// Dimension and exponents of
///   h^{1-p} (|grad h|^2 + h^2)^{-(n-q)/2} det(hess h + h I) = f  on S^{n-1}.
/// p = q = 0 is the Aleksandrov problem.
struct ProblemParams {
  int n = 3;
  double p = 2.0;
  double q = 1.0;

  /// p > q > 0: the regime with the degenerate existence/regularity theory.
  bool guaranteed_regime() const { return p > q && q > 0.0; }

  /// Throws PreconditionError unless n is 2 or 3 and p, q are finite.
  void validate() const;

  std::string describe() const;
};

}  // namespace lpdm
