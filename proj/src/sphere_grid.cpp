#include "lpdm/sphere_grid.hpp"

#include "lpdm/errors.hpp"
#include "lpdm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace lpdm {

namespace {

constexpr double kPi = std::numbers::pi;

// Half-width of the circle stencil; a degree-6 interpolant over 7 points
// gives sixth-order central differences.
constexpr int kCircleHalfWidth = 3;
constexpr int kCircleDegree = 2 * kCircleHalfWidth;
// Quartic fit over the two-ring neighbourhood (15 or 18 neighbours against
// 14 coefficients); third-order Hessians on the icosahedral grid.
constexpr int kSphereDegree = 4;

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

// Signed area of the spherical triangle (a, b, c); positive when
// counter-clockwise seen from outside.
double spherical_triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                               const Eigen::Vector3d& c) {
  const double triple = a.dot(b.cross(c));
  const double denom = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(triple, denom);
}

std::uint64_t fnv1a(std::span<const Eigen::Vector3d> nodes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& x : nodes) {
    for (int k = 0; k < 3; ++k) {
      double v = x[k];
      if (v == 0.0) v = 0.0;  // fold -0.0
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char byte : bytes) {
        hash ^= byte;
        hash *= 0x100000001b3ULL;
      }
    }
  }
  return hash;
}

std::vector<std::array<int, 2>> monomial_table(int tangent_dim, int degree) {
  std::vector<std::array<int, 2>> table;
  for (int total = 1; total <= degree; ++total) {
    if (tangent_dim == 1) {
      table.push_back({total, 0});
    } else {
      for (int b = 0; b <= total; ++b) table.push_back({total - b, b});
    }
  }
  return table;
}

double monomial(const std::array<int, 2>& e, const Eigen::Vector2d& v) {
  return std::pow(v[0], e[0]) * std::pow(v[1], e[1]) / (factorial(e[0]) * factorial(e[1]));
}

// d/dv_k of the scaled monomial, evaluated at v.
double monomial_derivative(const std::array<int, 2>& e, const Eigen::Vector2d& v, int k) {
  std::array<int, 2> d = e;
  if (d[k] == 0) return 0.0;
  d[k] -= 1;
  return monomial(d, v);
}

double monomial_second(const std::array<int, 2>& e, const Eigen::Vector2d& v, int k, int l) {
  std::array<int, 2> d = e;
  if (d[k] == 0) return 0.0;
  d[k] -= 1;
  if (d[l] == 0) return 0.0;
  d[l] -= 1;
  return monomial(d, v);
}

}  // namespace

double Grid::total_measure() const { return dim_ == 2 ? 2.0 * kPi : 4.0 * kPi; }

std::string Grid::spec() const {
  std::ostringstream out;
  if (dim_ == 2) {
    out << "S1:nodes=" << resolution_;
  } else {
    out << "S2:level=" << resolution_;
  }
  return out.str();
}

Eigen::Vector3d Grid::to_ambient(int i, const Eigen::Vector2d& v) const {
  const auto& f = frame(i);
  return v[0] * f.e1 + v[1] * f.e2;
}

Eigen::Vector3d Grid::exp_map(int i, const Eigen::Vector2d& v) const {
  const Eigen::Vector3d t = to_ambient(i, v);
  const double len = t.norm();
  if (len == 0.0) return node(i);
  return std::cos(len) * node(i) + std::sin(len) / len * t;
}

Eigen::Vector2d Grid::log_map(int i, const Eigen::Vector3d& y) const {
  const Eigen::Vector3d& x = node(i);
  const double c = x.dot(y);
  const Eigen::Vector3d w = y - c * x;
  const double s = w.norm();
  if (s == 0.0) return Eigen::Vector2d::Zero();
  const double scale = std::atan2(s, c) / s;
  const auto& f = frame(i);
  return {scale * w.dot(f.e1), scale * w.dot(f.e2)};
}

void Grid::build_circle(int count) {
  nodes_.resize(static_cast<std::size_t>(count));
  const int half = count / 2;
  for (int i = 0; i < half; ++i) {
    const double theta = 2.0 * kPi * i / count;
    nodes_[static_cast<std::size_t>(i)] = {std::cos(theta), std::sin(theta), 0.0};
  }
  for (int i = half; i < count; ++i) {
    nodes_[static_cast<std::size_t>(i)] = -nodes_[static_cast<std::size_t>(i - half)];
  }
  weights_.assign(static_cast<std::size_t>(count), 2.0 * kPi / count);
}

void Grid::build_icosahedral(int level) {
  // Pole-up icosahedron; the lower ring is the exact negation of the upper
  // ring so that subdivision keeps the node set closed under x -> -x bitwise.
  std::vector<Eigen::Vector3d> pts(12);
  pts[0] = {0.0, 0.0, 1.0};
  const double z = 1.0 / std::sqrt(5.0);
  const double r = 2.0 / std::sqrt(5.0);
  for (int k = 0; k < 5; ++k) {
    const double phi = 2.0 * kPi * k / 5.0;
    pts[static_cast<std::size_t>(1 + k)] = {r * std::cos(phi), r * std::sin(phi), z};
  }
  for (int k = 0; k < 5; ++k) {
    pts[static_cast<std::size_t>(6 + k)] = -pts[static_cast<std::size_t>(1 + k)];
  }
  pts[11] = -pts[0];

  auto upper = [](int k) { return 1 + ((k % 5) + 5) % 5; };
  auto lower = [](int k) { return 6 + ((k % 5) + 5) % 5; };
  std::vector<std::array<int, 3>> tris;
  for (int k = 0; k < 5; ++k) {
    tris.push_back({0, upper(k), upper(k + 1)});
    tris.push_back({upper(k), lower(k + 3), upper(k + 1)});
    tris.push_back({upper(k + 1), lower(k + 3), lower(k + 4)});
    tris.push_back({11, lower(k + 4), lower(k + 3)});
  }

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      const Eigen::Vector3d sum =
          pts[static_cast<std::size_t>(key.first)] + pts[static_cast<std::size_t>(key.second)];
      pts.push_back(sum / sum.norm());
      const int id = static_cast<int>(pts.size()) - 1;
      midpoints.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      const int ab = midpoint(t[0], t[1]);
      const int bc = midpoint(t[1], t[2]);
      const int ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }

  for (auto& t : tris) {
    const auto& a = pts[static_cast<std::size_t>(t[0])];
    const auto& b = pts[static_cast<std::size_t>(t[1])];
    const auto& c = pts[static_cast<std::size_t>(t[2])];
    if ((b - a).cross(c - a).dot(a + b + c) < 0.0) std::swap(t[1], t[2]);
  }
  nodes_ = std::move(pts);
  triangles_ = std::move(tris);
}

void Grid::build_frames() {
  frames_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Eigen::Vector3d& x = nodes_[i];
    TangentFrame f;
    if (dim_ == 2) {
      f.e1 = {-x[1], x[0], 0.0};
    } else {
      // Seed with the coordinate axis least aligned with x (lowest index on ties).
      int axis = 0;
      for (int k = 1; k < 3; ++k) {
        if (std::abs(x[k]) < std::abs(x[axis])) axis = k;
      }
      Eigen::Vector3d seed = Eigen::Vector3d::Zero();
      seed[axis] = 1.0;
      f.e1 = (seed - seed.dot(x) * x).normalized();
      f.e2 = x.cross(f.e1);
    }
    frames_[i] = f;
  }
}

void Grid::build_antipodes() {
  std::map<std::array<double, 3>, int> lookup;
  for (int i = 0; i < size(); ++i) {
    const auto& x = node(i);
    lookup.emplace(std::array<double, 3>{x[0] + 0.0, x[1] + 0.0, x[2] + 0.0}, i);
  }
  antipode_.resize(nodes_.size());
  for (int i = 0; i < size(); ++i) {
    const Eigen::Vector3d y = -node(i);
    auto it = lookup.find({y[0] + 0.0, y[1] + 0.0, y[2] + 0.0});
    if (it == lookup.end()) {
      throw NumericalError("grid is not antipodally closed at node " + std::to_string(i));
    }
    antipode_[static_cast<std::size_t>(i)] = it->second;
  }
}

void Grid::build_stencils(const std::vector<std::vector<int>>& candidates, int degree) {
  monomials_ = monomial_table(tangent_dim(), degree);
  const auto ncoef = static_cast<Eigen::Index>(monomials_.size());
  stencils_.resize(nodes_.size());
  parallel_for(nodes_.size(), [&](std::size_t idx) {
    const int i = static_cast<int>(idx);
    Stencil s;
    s.neighbors = candidates[idx];
    s.coords.reserve(s.neighbors.size());
    for (int j : s.neighbors) {
      Eigen::Vector2d v = log_map(i, node(j));
      if (dim_ == 2) v[1] = 0.0;
      s.coords.push_back(v);
      s.radius = std::max(s.radius, v.norm());
    }
    const auto k = static_cast<Eigen::Index>(s.neighbors.size());
    if (k < ncoef) {
      throw NumericalError("degenerate stencil at node " + std::to_string(i) +
                           ": too few neighbours for the local fit");
    }
    // Scale coordinates by the stencil radius for conditioning; undo below.
    Eigen::MatrixXd design(k, ncoef);
    for (Eigen::Index r = 0; r < k; ++r) {
      const Eigen::Vector2d v = s.coords[static_cast<std::size_t>(r)] / s.radius;
      for (Eigen::Index c = 0; c < ncoef; ++c) {
        design(r, c) = monomial(monomials_[static_cast<std::size_t>(c)], v);
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < ncoef) {
      throw NumericalError("degenerate stencil at node " + std::to_string(i) +
                           ": neighbour fit is rank deficient");
    }
    s.fit = qr.solve(Eigen::MatrixXd::Identity(k, k));
    for (Eigen::Index c = 0; c < ncoef; ++c) {
      const auto& e = monomials_[static_cast<std::size_t>(c)];
      s.fit.row(c) /= std::pow(s.radius, e[0] + e[1]);
    }
    stencils_[idx] = std::move(s);
  });
}

GridPtr build_grid(int n, int resolution) {
  std::shared_ptr<Grid> grid(new Grid());
  grid->dim_ = n;
  grid->resolution_ = resolution;
  if (n == 2) {
    if (resolution < Grid::kMinCircleNodes || resolution > Grid::kMaxCircleNodes) {
      throw PreconditionError("resolution out of range: S1 needs between " +
                              std::to_string(Grid::kMinCircleNodes) + " and " +
                              std::to_string(Grid::kMaxCircleNodes) + " nodes, got " +
                              std::to_string(resolution));
    }
    if (resolution % 2 != 0) {
      throw PreconditionError("S1 node count must be even for antipodal pairing, got " +
                              std::to_string(resolution));
    }
    grid->build_circle(resolution);
  } else if (n == 3) {
    if (resolution < 0 || resolution > Grid::kMaxIcosahedralLevel) {
      throw PreconditionError("resolution out of range: icosahedral level must be 0.." +
                              std::to_string(Grid::kMaxIcosahedralLevel) + ", got " +
                              std::to_string(resolution));
    }
    grid->build_icosahedral(resolution);
  } else {
    throw PreconditionError("unsupported dimension n=" + std::to_string(n) +
                            " (grids exist for n = 2 and n = 3)");
  }

  grid->build_frames();
  grid->build_antipodes();

  const int count = grid->size();
  std::vector<std::vector<int>> candidates(static_cast<std::size_t>(count));
  if (n == 2) {
    for (int i = 0; i < count; ++i) {
      for (int k = -kCircleHalfWidth; k <= kCircleHalfWidth; ++k) {
        if (k != 0) candidates[static_cast<std::size_t>(i)].push_back(((i + k) % count + count) % count);
      }
    }
    grid->build_stencils(candidates, kCircleDegree);
  } else {
    std::vector<std::set<int>> ring(static_cast<std::size_t>(count));
    std::vector<std::vector<int>> incident(static_cast<std::size_t>(count));
    for (std::size_t t = 0; t < grid->triangles_.size(); ++t) {
      const auto& tri = grid->triangles_[t];
      for (int a = 0; a < 3; ++a) {
        incident[static_cast<std::size_t>(tri[static_cast<std::size_t>(a)])].push_back(static_cast<int>(t));
        for (int b = 0; b < 3; ++b) {
          if (a != b) ring[static_cast<std::size_t>(tri[static_cast<std::size_t>(a)])].insert(tri[static_cast<std::size_t>(b)]);
        }
      }
    }
    for (int i = 0; i < count; ++i) {
      std::set<int> two_ring(ring[static_cast<std::size_t>(i)]);
      for (int j : ring[static_cast<std::size_t>(i)]) {
        two_ring.insert(ring[static_cast<std::size_t>(j)].begin(), ring[static_cast<std::size_t>(j)].end());
      }
      two_ring.erase(i);
      candidates[static_cast<std::size_t>(i)].assign(two_ring.begin(), two_ring.end());
    }
    grid->build_stencils(candidates, kSphereDegree);

    // Spherical Voronoi (dual-cell) areas from triangle circumcentres.
    std::vector<Eigen::Vector3d> centres(grid->triangles_.size());
    for (std::size_t t = 0; t < grid->triangles_.size(); ++t) {
      const auto& tri = grid->triangles_[t];
      const auto& a = grid->node(tri[0]);
      const auto& b = grid->node(tri[1]);
      const auto& c = grid->node(tri[2]);
      Eigen::Vector3d cc = (b - a).cross(c - a).normalized();
      if (cc.dot(a) < 0.0) cc = -cc;
      centres[t] = cc;
    }
    grid->weights_.assign(static_cast<std::size_t>(count), 0.0);
    for (int i = 0; i < count; ++i) {
      auto& inc = incident[static_cast<std::size_t>(i)];
      const auto& f = grid->frame(i);
      const Eigen::Vector3d& x = grid->node(i);
      std::vector<std::pair<double, int>> order;
      for (int t : inc) {
        const Eigen::Vector3d d = centres[static_cast<std::size_t>(t)] - x;
        order.emplace_back(std::atan2(d.dot(f.e2), d.dot(f.e1)), t);
      }
      std::sort(order.begin(), order.end());
      double area = 0.0;
      for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& c0 = centres[static_cast<std::size_t>(order[k].second)];
        const auto& c1 = centres[static_cast<std::size_t>(order[(k + 1) % order.size()].second)];
        area += spherical_triangle_area(x, c0, c1);
      }
      grid->weights_[static_cast<std::size_t>(i)] = area;
    }
  }
  grid->fingerprint_ = fnv1a(grid->nodes_);
  return grid;
}

ScalarField::ScalarField(GridPtr grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw PreconditionError("scalar field without a grid");
  if (values_.size() != grid_->size()) {
    throw PreconditionError("scalar field has " + std::to_string(values_.size()) +
                            " values for a grid of " + std::to_string(grid_->size()) + " nodes");
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw PreconditionError("non-finite field value at node " + std::to_string(i));
    }
  }
}

ScalarField ScalarField::constant(GridPtr grid, double value) {
  const int n = grid->size();
  return ScalarField(std::move(grid), Eigen::VectorXd::Constant(n, value));
}

ScalarField ScalarField::sample(GridPtr grid,
                                const std::function<double(const Eigen::Vector3d&)>& fn) {
  Eigen::VectorXd v(grid->size());
  for (int i = 0; i < grid->size(); ++i) v[i] = fn(grid->node(i));
  return ScalarField(std::move(grid), std::move(v));
}

Jet jet_at(const Grid& grid, int i, const Eigen::VectorXd& values) {
  const Stencil& s = grid.stencil(i);
  const int m = grid.tangent_dim();
  const Eigen::Index rows = m == 1 ? 2 : 5;
  Eigen::VectorXd diff(static_cast<Eigen::Index>(s.neighbors.size()));
  for (std::size_t k = 0; k < s.neighbors.size(); ++k) {
    diff[static_cast<Eigen::Index>(k)] = values[s.neighbors[k]] - values[i];
  }
  const Eigen::VectorXd c = s.fit.topRows(rows) * diff;
  Jet jet;
  if (m == 1) {
    jet.grad[0] = c[0];
    jet.hess(0, 0) = c[1];
  } else {
    jet.grad = c.head<2>();
    jet.hess << c[2], c[3], c[3], c[4];
  }
  return jet;
}

std::vector<Jet> jets(const ScalarField& field) {
  const Grid& grid = field.grid();
  std::vector<Jet> out(static_cast<std::size_t>(grid.size()));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = jet_at(grid, static_cast<int>(i), field.values());
  });
  return out;
}

std::vector<Eigen::Vector3d> gradient(const ScalarField& field) {
  const auto js = jets(field);
  std::vector<Eigen::Vector3d> out(js.size());
  for (std::size_t i = 0; i < js.size(); ++i) {
    out[i] = field.grid().to_ambient(static_cast<int>(i), js[i].grad);
  }
  return out;
}

std::vector<Eigen::Matrix2d> hessian(const ScalarField& field) {
  const auto js = jets(field);
  std::vector<Eigen::Matrix2d> out(js.size());
  for (std::size_t i = 0; i < js.size(); ++i) out[i] = js[i].hess;
  return out;
}

ScalarField laplacian(const ScalarField& field) {
  const auto js = jets(field);
  Eigen::VectorXd lap(field.size());
  for (std::size_t i = 0; i < js.size(); ++i) {
    lap[static_cast<Eigen::Index>(i)] = js[i].hess.trace();
  }
  return ScalarField(field.grid_ptr(), std::move(lap));
}

double integrate(const ScalarField& field) {
  const auto w = field.grid().weights();
  double sum = 0.0;
  for (int i = 0; i < field.size(); ++i) sum += field[i] * w[static_cast<std::size_t>(i)];
  return sum;
}

ScalarField symmetrize_even(const ScalarField& field) {
  const Grid& grid = field.grid();
  Eigen::VectorXd v(field.size());
  for (int i = 0; i < field.size(); ++i) v[i] = 0.5 * (field[i] + field[grid.antipode(i)]);
  return ScalarField(field.grid_ptr(), std::move(v));
}

LocalModel::LocalModel(const Grid& grid, int centre, const Eigen::VectorXd& values)
    : LocalModel(grid, centre, [&values](int j) { return values[j]; }) {}

LocalModel::LocalModel(const Grid& grid, int centre, const std::function<double(int)>& value)
    : grid_(&grid), centre_(centre), base_(value(centre)) {
  const Stencil& s = grid.stencil(centre);
  Eigen::VectorXd diff(static_cast<Eigen::Index>(s.neighbors.size()));
  for (std::size_t k = 0; k < s.neighbors.size(); ++k) {
    diff[static_cast<Eigen::Index>(k)] = value(s.neighbors[k]) - base_;
  }
  coeffs_ = s.fit * diff;
}

double LocalModel::value(const Eigen::Vector2d& v) const {
  const auto mono = grid_->monomials();
  double sum = base_;
  for (std::size_t k = 0; k < mono.size(); ++k) {
    sum += coeffs_[static_cast<Eigen::Index>(k)] * monomial(mono[k], v);
  }
  return sum;
}

Eigen::Vector2d LocalModel::gradient(const Eigen::Vector2d& v) const {
  const auto mono = grid_->monomials();
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (std::size_t k = 0; k < mono.size(); ++k) {
    for (int a = 0; a < 2; ++a) {
      g[a] += coeffs_[static_cast<Eigen::Index>(k)] * monomial_derivative(mono[k], v, a);
    }
  }
  return g;
}

Eigen::Matrix2d LocalModel::hessian(const Eigen::Vector2d& v) const {
  const auto mono = grid_->monomials();
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  for (std::size_t k = 0; k < mono.size(); ++k) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        h(a, b) += coeffs_[static_cast<Eigen::Index>(k)] * monomial_second(mono[k], v, a, b);
      }
    }
  }
  return h;
}

Extremum refine_extremum(const Grid& grid, int node, const Eigen::VectorXd& values,
                         ExtremumKind kind) {
  return refine_extremum(grid, node, [&values](int j) { return values[j]; }, kind);
}

Extremum refine_extremum(const Grid& grid, int node, const std::function<double(int)>& value,
                         ExtremumKind kind) {
  const LocalModel model(grid, node, value);
  Extremum result;
  result.node = node;
  result.value = model.value(Eigen::Vector2d::Zero());
  result.point = grid.node(node);

  // Monotone Newton on sign * model inside the disc |v| <= limit. Curvatures
  // are replaced by their magnitudes (floored), so indefinite or nearly flat
  // models still give descent steps; steps that leave the disc or do not
  // decrease the model are halved.
  const double sign = kind == ExtremumKind::kMax ? -1.0 : 1.0;
  const double limit = 0.75 * grid.stencil(node).radius;
  const int m = grid.tangent_dim();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  double current = sign * result.value;
  for (int it = 0; it < 50; ++it) {
    const Eigen::Vector2d g = sign * model.gradient(v);
    const Eigen::Matrix2d h = sign * model.hessian(v);
    Eigen::Vector2d step = Eigen::Vector2d::Zero();
    if (m == 1) {
      const double c = std::max(std::abs(h(0, 0)), 1e-8 * std::max(1.0, std::abs(h(0, 0))));
      step[0] = -g[0] / c;
    } else {
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(h);
      const Eigen::Vector2d lam = eig.eigenvalues().cwiseAbs();
      const double floor = 1e-8 * std::max(1.0, lam.maxCoeff());
      const Eigen::Vector2d gt = eig.eigenvectors().transpose() * g;
      step = -eig.eigenvectors() * Eigen::Vector2d(gt[0] / std::max(lam[0], floor), gt[1] / std::max(lam[1], floor));
    }
    if (step.norm() > 2.0 * limit) step *= 2.0 * limit / step.norm();
    bool moved = false;
    for (int halving = 0; halving < 40; ++halving) {
      const Eigen::Vector2d trial = v + step;
      if (trial.norm() <= limit) {
        const double value_trial = sign * model.value(trial);
        if (value_trial < current) {
          v = trial;
          current = value_trial;
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved || step.norm() <= 1e-15 * std::max(1.0, limit)) break;
  }
  if (v.isZero()) return result;
  result.value = sign * current;
  result.point = grid.exp_map(node, v);
  result.refined = true;
  return result;
}

Extremum locate_extremum(const Grid& grid, const Eigen::VectorXd& values, ExtremumKind kind) {
  Eigen::Index best = 0;
  if (kind == ExtremumKind::kMax) {
    values.maxCoeff(&best);
  } else {
    values.minCoeff(&best);
  }
  return refine_extremum(grid, static_cast<int>(best), values, kind);
}

}  // namespace lpdm
