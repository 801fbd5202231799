#pragma once

#include "lpdm/sphere_grid.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lpdm {

using DensityFn = std::function<double(const Eigen::Vector3d&)>;

/// Parsed closed-form expression in the coordinates x1, x2, x3 of a point on
/// the sphere (x3 = 0 on the circle). Supports + - * / ^, unary minus,
/// parentheses, the constant pi and sqrt, exp, log, sin, cos, tan, abs.
class Expression {
 public:
  /// Throws PreconditionError with the offending position on syntax errors.
  static Expression parse(const std::string& text);

  double operator()(const Eigen::Vector3d& x) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

struct PresetInfo {
  std::string name;  // as written in configs, e.g. "bump:<a>"
  std::string description;
  /// Known Condition I/II constants (n = 3), empty when not known in closed form.
  std::string constants;
};

/// Named densities. Every preset is even and nonnegative:
///   constant:<c>  f = c
///   equator2      f = x3^2, vanishing on the equator
///   twocircle     f = x1^2 x2^2, vanishing on two great circles
///   bump:<a>      f = 1 + a x3^2
std::vector<PresetInfo> presets();

/// Throws PreconditionError for unknown names or malformed parameters.
DensityFn preset(const std::string& name);

}  // namespace lpdm
