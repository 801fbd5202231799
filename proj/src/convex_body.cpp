#include "lpdm/convex_body.hpp"

#include "lpdm/errors.hpp"
#include "lpdm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace lpdm {

namespace {

// Below this cosine the polish of h(x)/<x,u> is skipped: the quotient is
// steep near the great circle orthogonal to u.
constexpr double kPolishMinCosine = 0.05;

}  // namespace

double SmallSym::det() const {
  return m == 1 ? a(0, 0) : a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
}

double SmallSym::trace() const { return m == 1 ? a(0, 0) : a(0, 0) + a(1, 1); }

double SmallSym::min_eigenvalue() const {
  if (m == 1) return a(0, 0);
  const double mean = 0.5 * (a(0, 0) + a(1, 1));
  const double half_gap = 0.5 * (a(0, 0) - a(1, 1));
  return mean - std::hypot(half_gap, a(0, 1));
}

Eigen::Matrix2d SmallSym::inverse() const {
  const double d = det();
  if (d == 0.0 || !std::isfinite(d)) throw NumericalError("singular b tensor");
  Eigen::Matrix2d inv = Eigen::Matrix2d::Zero();
  if (m == 1) {
    inv(0, 0) = 1.0 / a(0, 0);
  } else {
    inv << a(1, 1) / d, -a(0, 1) / d, -a(1, 0) / d, a(0, 0) / d;
  }
  return inv;
}

SupportFn::SupportFn(ScalarField h) : h_(std::move(h)) {
  for (int i = 0; i < h_.size(); ++i) {
    if (!(h_[i] > 0.0)) {
      throw PreconditionError("support function must be positive; h=" + std::to_string(h_[i]) +
                              " at node " + std::to_string(i));
    }
  }
  jets_ = jets(h_);
  const int m = h_.grid().tangent_dim();
  b_.resize(jets_.size());
  for (std::size_t i = 0; i < jets_.size(); ++i) {
    SmallSym s;
    s.m = m;
    s.a = jets_[i].hess;
    s.a(0, 0) += h_[static_cast<int>(i)];
    if (m == 2) s.a(1, 1) += h_[static_cast<int>(i)];
    b_[i] = s;
  }
}

Eigen::Vector3d SupportFn::gradient(int i) const { return grid().to_ambient(i, jet(i).grad); }

double SupportFn::psd_margin() const {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& s : b_) margin = std::min(margin, s.min_eigenvalue());
  return margin;
}

RadialFn::RadialFn(ScalarField rho) : rho_(std::move(rho)) {
  for (int i = 0; i < rho_.size(); ++i) {
    if (!(rho_[i] > 0.0)) {
      throw PreconditionError("radial function must be positive at node " + std::to_string(i));
    }
  }
}

std::vector<Eigen::Vector3d> embed(const SupportFn& h) {
  std::vector<Eigen::Vector3d> out(static_cast<std::size_t>(h.size()));
  for (int i = 0; i < h.size(); ++i) {
    out[static_cast<std::size_t>(i)] = h.gradient(i) + h[i] * h.grid().node(i);
  }
  return out;
}

double radial_from_support(const SupportFn& h, const Eigen::Vector3d& u) {
  const Grid& grid = h.grid();
  int best = -1;
  double best_value = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.size(); ++i) {
    const double c = grid.node(i).dot(u);
    if (c <= 0.0) continue;
    const double value = h[i] / c;
    if (value < best_value) {
      best_value = value;
      best = i;
    }
  }
  if (best < 0) {
    throw NumericalError("radial_from_support: no node in the open hemisphere of u");
  }
  const Stencil& s = grid.stencil(best);
  for (int j : s.neighbors) {
    if (grid.node(j).dot(u) < kPolishMinCosine) return best_value;
  }
  const auto quotient = [&](int j) { return h[j] / grid.node(j).dot(u); };
  return refine_extremum(grid, best, quotient, ExtremumKind::kMin).value;
}

RadialFn radial_field(const SupportFn& h) {
  const Grid& grid = h.grid();
  Eigen::VectorXd rho(grid.size());
  parallel_for(static_cast<std::size_t>(grid.size()), [&](std::size_t i) {
    rho[static_cast<Eigen::Index>(i)] = radial_from_support(h, grid.node(static_cast<int>(i)));
  });
  return RadialFn(ScalarField(h.field().grid_ptr(), std::move(rho)));
}

double support_from_radial(const RadialFn& rho, const Eigen::Vector3d& x) {
  const Grid& grid = rho.grid();
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.size(); ++i) {
    const double value = rho[i] * grid.node(i).dot(x);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  const auto projection = [&](int j) { return rho[j] * grid.node(j).dot(x); };
  return refine_extremum(grid, best, projection, ExtremumKind::kMax).value;
}

ScalarField support_field(const RadialFn& rho) {
  const Grid& grid = rho.grid();
  Eigen::VectorXd h(grid.size());
  parallel_for(static_cast<std::size_t>(grid.size()), [&](std::size_t i) {
    h[static_cast<Eigen::Index>(i)] = support_from_radial(rho, grid.node(static_cast<int>(i)));
  });
  return ScalarField(rho.field().grid_ptr(), std::move(h));
}

GeometricIdentityReport geometric_identity_report(const SupportFn& h,
                                                  const GeometricTolerances& tol) {
  const Grid& grid = h.grid();
  GeometricIdentityReport report;
  report.tol = tol;

  const Extremum hmax = locate_extremum(grid, h.field().values(), ExtremumKind::kMax);
  report.max_h = hmax.value;
  report.argmax_h = hmax.point;

  // max rho from direct evaluations only: the nodes, the maximiser of the
  // local model of rho and the direction of argmax h. The model value itself
  // is not used; near ridges of the body it overshoots.
  const RadialFn rho = radial_field(h);
  const Extremum rho_model = locate_extremum(grid, rho.field().values(), ExtremumKind::kMax);
  report.max_rho = rho.field().max();
  for (const Eigen::Vector3d& u : {rho_model.point, report.argmax_h}) {
    report.max_rho = std::max(report.max_rho, radial_from_support(h, u.normalized()));
  }
  report.max_equal_ok = std::abs(report.max_h - report.max_rho) <= tol.equal_max;

  const auto points = embed(h);
  std::vector<double> excess(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    const Eigen::Vector3d u = points[i].normalized();
    excess[i] = h.grad_norm(static_cast<int>(i)) - radial_from_support(h, u);
  });
  report.grad_bound_worst = *std::max_element(excess.begin(), excess.end());
  report.grad_bound_ok = report.grad_bound_worst <= tol.grad_bound;

  double asym = 0.0;
  for (int i = 0; i < grid.size(); ++i) asym = std::max(asym, std::abs(h[i] - h[grid.antipode(i)]));
  report.even = asym <= tol.evenness * h.field().values().cwiseAbs().maxCoeff();
  if (report.even) {
    double worst = std::numeric_limits<double>::infinity();
    const Eigen::Vector3d x0 = report.argmax_h.normalized();
    for (int i = 0; i < grid.size(); ++i) {
      worst = std::min(worst, h[i] - report.max_h * std::abs(grid.node(i).dot(x0)));
    }
    report.even_cone_worst = worst;
    report.even_cone_ok = worst >= -tol.even_cone;
  }
  return report;
}

DualIntegralIdentity dual_integral_identity(const SupportFn& h, const ScalarField& f,
                                            const ProblemParams& params) {
  if (&f.grid() != &h.grid()) throw PreconditionError("h and f live on different grids");
  const RadialFn rho = radial_field(h);
  const Grid& grid = h.grid();
  DualIntegralIdentity out;
  for (int i = 0; i < grid.size(); ++i) {
    out.lhs += std::pow(h[i], params.p) * f[i] * grid.weight(i);
    out.rhs += std::pow(rho[i], params.q) * grid.weight(i);
  }
  out.rel_gap = std::abs(out.lhs - out.rhs) / std::max(std::abs(out.lhs), std::abs(out.rhs));
  return out;
}

void write_obj(std::ostream& out, const SupportFn& h) {
  if (h.grid().dim() != 3) throw PreconditionError("OBJ export needs an S^2 grid");
  const auto points = embed(h);
  char line[128];
  for (const auto& p : points) {
    std::snprintf(line, sizeof line, "v %.9g %.9g %.9g\n", p[0], p[1], p[2]);
    out << line;
  }
  for (const auto& t : h.grid().triangles()) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

}  // namespace lpdm
