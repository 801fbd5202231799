#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lpdm {

/// Orthonormal basis of the tangent plane at a node. For S^1 only e1 is used.
struct TangentFrame {
  Eigen::Vector3d e1 = Eigen::Vector3d::Zero();
  Eigen::Vector3d e2 = Eigen::Vector3d::Zero();
};

/// Least-squares Taylor fit around one node.
///
/// Neighbour positions are expressed in Riemannian normal coordinates
/// (exp map at the centre), where the Christoffel symbols vanish at the
/// origin. The fitted coefficients of the scaled monomials
/// u^a v^b / (a! b!) are therefore the covariant derivatives at the node.
struct Stencil {
  std::vector<int> neighbors;
  std::vector<Eigen::Vector2d> coords;
  /// rows: monomial coefficients, cols: neighbours; applied to f_j - f_centre
  Eigen::MatrixXd fit;
  double radius = 0.0;
};

class Grid;
using GridPtr = std::shared_ptr<const Grid>;

/// Discretised S^{n-1} for n = 2 (equispaced circle) or n = 3 (icosahedral
/// geodesic sphere). Immutable after construction.
class Grid {
 public:
  static constexpr int kMinCircleNodes = 16;
  static constexpr int kMaxCircleNodes = 1 << 20;
  static constexpr int kMaxIcosahedralLevel = 6;

  int dim() const { return dim_; }
  int tangent_dim() const { return dim_ - 1; }
  int resolution() const { return resolution_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  const Eigen::Vector3d& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::span<const Eigen::Vector3d> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  double weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }
  int antipode(int i) const { return antipode_[static_cast<std::size_t>(i)]; }
  const TangentFrame& frame(int i) const { return frames_[static_cast<std::size_t>(i)]; }
  const Stencil& stencil(int i) const { return stencils_[static_cast<std::size_t>(i)]; }

  /// Surface triangles (S^2 only; empty for the circle).
  std::span<const std::array<int, 3>> triangles() const { return triangles_; }

  /// Exponents (a, b) of the fitted monomials, in coefficient order.
  /// Index 0.. tangent_dim-1 are first derivatives, followed by the
  /// second-derivative block.
  std::span<const std::array<int, 2>> monomials() const { return monomials_; }

  /// |S^{n-1}|: 2 pi or 4 pi.
  double total_measure() const;

  /// Human-readable grid description, e.g. "S2:level=4".
  std::string spec() const;

  /// FNV-1a over the raw node coordinates; identifies the exact grid.
  std::uint64_t fingerprint() const { return fingerprint_; }

  /// Maps tangent vector v (normal coordinates at node i) onto the sphere.
  Eigen::Vector3d exp_map(int i, const Eigen::Vector2d& v) const;

  /// Normal coordinates of point y as seen from node i.
  Eigen::Vector2d log_map(int i, const Eigen::Vector3d& y) const;

  /// Tangent vector (frame components) as an ambient vector.
  Eigen::Vector3d to_ambient(int i, const Eigen::Vector2d& v) const;

 private:
  friend GridPtr build_grid(int n, int resolution);
  Grid() = default;

  void build_circle(int count);
  void build_icosahedral(int level);
  void build_frames();
  void build_antipodes();
  void build_stencils(const std::vector<std::vector<int>>& candidates, int degree);

  int dim_ = 0;
  int resolution_ = 0;
  std::vector<Eigen::Vector3d> nodes_;
  std::vector<double> weights_;
  std::vector<int> antipode_;
  std::vector<TangentFrame> frames_;
  std::vector<Stencil> stencils_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<std::array<int, 2>> monomials_;
  std::uint64_t fingerprint_ = 0;
};

/// n = 2: resolution is the (even, >= 16) node count.
/// n = 3: resolution is the icosahedral subdivision level 0..6; level 0 has
/// too few nodes for the local fit and raises NumericalError.
GridPtr build_grid(int n, int resolution);

/// Real values on the nodes of one grid. Always finite.
class ScalarField {
 public:
  ScalarField(GridPtr grid, Eigen::VectorXd values);

  static ScalarField constant(GridPtr grid, double value);
  static ScalarField sample(GridPtr grid, const std::function<double(const Eigen::Vector3d&)>& fn);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }
  int size() const { return static_cast<int>(values_.size()); }

  double min() const { return values_.minCoeff(); }
  double max() const { return values_.maxCoeff(); }

 private:
  GridPtr grid_;
  Eigen::VectorXd values_;
};

/// First and second covariant derivatives at a node, in frame components.
/// On S^1 only grad[0] and hess(0, 0) are meaningful; the rest is zero.
struct Jet {
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

std::vector<Jet> jets(const ScalarField& field);
Jet jet_at(const Grid& grid, int i, const Eigen::VectorXd& values);

/// Ambient tangent vectors.
std::vector<Eigen::Vector3d> gradient(const ScalarField& field);
std::vector<Eigen::Matrix2d> hessian(const ScalarField& field);
ScalarField laplacian(const ScalarField& field);

/// Quadrature sum, accumulated in node order.
double integrate(const ScalarField& field);

/// (f(x) + f(-x)) / 2.
ScalarField symmetrize_even(const ScalarField& field);

/// Fitted Taylor polynomial of a grid function around one node.
class LocalModel {
 public:
  LocalModel(const Grid& grid, int centre, const Eigen::VectorXd& values);
  /// Samples value(j) only on the centre and its stencil.
  LocalModel(const Grid& grid, int centre, const std::function<double(int)>& value);

  double value(const Eigen::Vector2d& v) const;
  Eigen::Vector2d gradient(const Eigen::Vector2d& v) const;
  Eigen::Matrix2d hessian(const Eigen::Vector2d& v) const;
  int centre() const { return centre_; }

 private:
  const Grid* grid_;
  int centre_;
  double base_;
  Eigen::VectorXd coeffs_;
};

struct Extremum {
  double value = 0.0;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  int node = -1;
  bool refined = false;
};

enum class ExtremumKind { kMin, kMax };

/// Locates the extremum of `values` over the nodes, then polishes it with
/// monotone Newton iterations on the local Taylor model of the best node,
/// restricted to a disc inside its stencil. The result is never worse than
/// the nodal extremum; `refined` is false when no step improved the model.
Extremum locate_extremum(const Grid& grid, const Eigen::VectorXd& values, ExtremumKind kind);

/// Newton polish around a given node only.
Extremum refine_extremum(const Grid& grid, int node, const Eigen::VectorXd& values,
                         ExtremumKind kind);
Extremum refine_extremum(const Grid& grid, int node, const std::function<double(int)>& value,
                         ExtremumKind kind);

}  // namespace lpdm
