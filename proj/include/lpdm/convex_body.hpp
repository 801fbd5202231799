#pragma once

#include "lpdm/params.hpp"
#include "lpdm/sphere_grid.hpp"

#include <Eigen/Dense>

#include <optional>
#include <ostream>
#include <vector>

namespace lpdm {

/// Symmetric m x m block (m = 1 or 2) stored in a 2x2 matrix.
struct SmallSym {
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  int m = 2;

  double det() const;
  double trace() const;
  double min_eigenvalue() const;
  /// Inverse of the active block; throws NumericalError if singular.
  Eigen::Matrix2d inverse() const;
};

/// Support function of an origin-enclosing body, sampled on a grid, with
/// its covariant jet and b = hess h + h I cached per node.
class SupportFn {
 public:
  /// Throws PreconditionError when h <= 0 at any node.
  explicit SupportFn(ScalarField h);

  const ScalarField& field() const { return h_; }
  const Grid& grid() const { return h_.grid(); }
  int size() const { return h_.size(); }
  double operator[](int i) const { return h_[i]; }

  const Jet& jet(int i) const { return jets_[static_cast<std::size_t>(i)]; }
  Eigen::Vector3d gradient(int i) const;
  double grad_norm(int i) const { return jet(i).grad.norm(); }
  const SmallSym& b(int i) const { return b_[static_cast<std::size_t>(i)]; }

  /// Trace of b: (n-1) h + laplacian h.
  double trace_b(int i) const { return b(i).trace(); }
  /// Smallest eigenvalue of b over all nodes.
  double psd_margin() const;
  /// psd_margin() >= -tol.
  bool convex(double tol = 1e-10) const { return psd_margin() >= -tol; }

 private:
  ScalarField h_;
  std::vector<Jet> jets_;
  std::vector<SmallSym> b_;
};

/// Radial function rho(u) = max{ t > 0 : t u in body } sampled on a grid.
class RadialFn {
 public:
  /// Throws PreconditionError when rho <= 0 at any node.
  explicit RadialFn(ScalarField rho);
  const ScalarField& field() const { return rho_; }
  const Grid& grid() const { return rho_.grid(); }
  double operator[](int i) const { return rho_[i]; }

 private:
  ScalarField rho_;
};

/// Boundary points X(x) = grad h(x) + h(x) x (ambient coordinates).
std::vector<Eigen::Vector3d> embed(const SupportFn& h);

/// rho(u) = min over x with <x,u> > 0 of h(x) / <x,u>: grid minimum followed
/// by a Newton polish on the local fit of h(x)/<x,u> around the minimiser.
double radial_from_support(const SupportFn& h, const Eigen::Vector3d& u);

/// radial_from_support evaluated at every grid node.
RadialFn radial_field(const SupportFn& h);

/// h(x) = max over nodes u of rho(u) <u, x>, polished the same way.
double support_from_radial(const RadialFn& rho, const Eigen::Vector3d& x);

/// support_from_radial evaluated at every grid node.
ScalarField support_field(const RadialFn& rho);

struct GeometricTolerances {
  double equal_max = 1e-6;
  double grad_bound = 1e-6;
  double even_cone = 1e-6;
  /// Relative threshold for treating h as even.
  double evenness = 1e-12;
};

struct GeometricIdentityReport {
  double max_h = 0.0;
  /// Largest directly evaluated rho: nodes, the maximiser of the local rho
  /// model and the direction of argmax h.
  double max_rho = 0.0;
  Eigen::Vector3d argmax_h = Eigen::Vector3d::Zero();
  /// |grad h(x)| <= rho(u(x)) + tol at every node, u(x) = X(x)/|X(x)|.
  bool grad_bound_ok = false;
  double grad_bound_worst = 0.0;  // max of |grad h| - rho(u(x))
  /// |max h - max rho| <= tol.
  bool max_equal_ok = false;
  bool even = false;
  /// Only evaluated for even h: h(x) >= max_h |<x, x0>| - tol, x0 = argmax h.
  std::optional<bool> even_cone_ok;
  double even_cone_worst = 0.0;  // min of h(x) - max_h |<x, x0>|
  GeometricTolerances tol;
};

GeometricIdentityReport geometric_identity_report(const SupportFn& h,
                                                  const GeometricTolerances& tol = {});

struct DualIntegralIdentity {
  double lhs = 0.0;  // integral of h^p f dx
  double rhs = 0.0;  // integral of rho^q du
  double rel_gap = 0.0;
};

/// Valid when h solves the equation for f: the change of variables
/// u = X(x)/|X(x)| turns one integral into the other.
DualIntegralIdentity dual_integral_identity(const SupportFn& h, const ScalarField& f,
                                            const ProblemParams& params);

/// Wavefront OBJ of the embedded body on the icosahedral triangulation:
/// "v" lines then "f" lines, 9 significant digits. S^2 grids only.
void write_obj(std::ostream& out, const SupportFn& h);

}  // namespace lpdm
