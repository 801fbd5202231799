#include "lpdm/params.hpp"

#include "lpdm/errors.hpp"

#include <cmath>
#include <sstream>

namespace lpdm {

void ProblemParams::validate() const {
  if (n != 2 && n != 3) {
    throw PreconditionError("unsupported dimension n=" + std::to_string(n) +
                            " (grids exist for n = 2 and n = 3)");
  }
  if (!std::isfinite(p) || !std::isfinite(q)) {
    throw PreconditionError("exponents p and q must be finite");
  }
}

std::string ProblemParams::describe() const {
  std::ostringstream out;
  out << "n=" << n << " p=" << p << " q=" << q;
  return out.str();
}

}  // namespace lpdm
