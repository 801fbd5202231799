#pragma once

#include "lpdm/convex_body.hpp"
#include "lpdm/params.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace lpdm {

enum class OracleMode { kS1, kAxisymS2 };

/// One-dimensional reduction of the equation.
///  kS1:       f(theta) on the circle, x = (cos theta, sin theta); n = 2.
///  kAxisymS2: f(theta) with theta the polar angle from e3; n = 3.
struct ODEProblem {
  OracleMode mode = OracleMode::kS1;
  std::function<double(double)> f;
  double p = 2.0;
  double q = 1.0;
  /// kS1: number of collocation points (even). kAxisymS2: N, with points
  /// theta_j = pi j / N, j = 0..N.
  int size = 64;
  double tol = 1e-12;
  int max_iters = 60;
};

/// Spectral representation of a solved profile.
///   kS1: h = a_0 + sum_k (a_k cos k theta + b_k sin k theta)
///   kAxisymS2: h = sum_k a_k cos k theta
class Profile {
 public:
  Profile(OracleMode mode, Eigen::VectorXd nodes, Eigen::VectorXd values);

  OracleMode mode() const { return mode_; }
  const Eigen::VectorXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& values() const { return values_; }

  double value(double theta) const;
  double d1(double theta) const;
  double d2(double theta) const;
  /// Trace of b: h'' + h on S^1; (h'' + h) + (cot theta h' + h) on S^2,
  /// with h'/sin theta -> h'' at the poles.
  double H(double theta) const;

  /// Angle of a unit vector in this profile's coordinates.
  double angle_of(const Eigen::Vector3d& x) const;

  /// Sup over collocation points of the log-form residual.
  double residual = 0.0;
  int iterations = 0;
  /// Smallest principal entry of b over the collocation points.
  double min_b = 0.0;

 private:
  // Returns sum_k c_k * basis^{(order)}(k theta).
  double eval(double theta, int order) const;

  OracleMode mode_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd values_;
  Eigen::VectorXd cos_coeffs_;
  Eigen::VectorXd sin_coeffs_;
};

/// Fourier collocation with dense damped Newton on the log form.
Profile solve_s1(const ODEProblem& prob);

/// Cosine-series collocation on [0, pi] with the pole closure.
Profile solve_axisym_s2(const ODEProblem& prob);

/// Dispatches on prob.mode.
Profile solve_oracle(const ODEProblem& prob);

enum class FdScheme { kForward, kCentral };

struct FdCheckResult {
  std::vector<double> steps;
  /// ||FD(s) - L[delta]||_inf / ||L[delta]||_inf per step.
  std::vector<double> errors;
  double min_error = 0.0;
  /// Step at which the smallest error occurred; errors at smaller steps are
  /// dominated by rounding.
  double floor_step = 0.0;
};

/// Compares linearize(h)[delta] with difference quotients of the log
/// residual. The density cancels in the differences, so f = 1 is used.
FdCheckResult fd_check(const SupportFn& h, const ProblemParams& params, const ScalarField& delta,
                       const std::vector<double>& steps, FdScheme scheme = FdScheme::kForward);

}  // namespace lpdm
