#pragma once

#include "lpdm/sphere_grid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lpdm::test {

inline constexpr double kPi = std::numbers::pi;

// A direction that is not aligned with any grid symmetry axis.
inline Eigen::Vector3d generic_axis() { return Eigen::Vector3d(0.3, -0.5, 0.8).normalized(); }

inline double sup_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline double order(double coarse_error, double fine_error) {
  return std::log2(coarse_error / fine_error);
}

}  // namespace lpdm::test
