#include "lpdm/equation.hpp"

#include "lpdm/errors.hpp"
#include "lpdm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace lpdm {

namespace {

void require_same_grid(const SupportFn& h, const ScalarField& f) {
  if (&h.grid() != &f.grid()) throw PreconditionError("h and f live on different grids");
}

}  // namespace

ResidualField::ResidualField(ScalarField v) : values(std::move(v)) {
  const auto& x = values.values();
  sup_norm = x.cwiseAbs().maxCoeff();
  double sum = 0.0;
  for (int i = 0; i < values.size(); ++i) sum += x[i] * x[i] * values.grid().weight(i);
  l2_norm = std::sqrt(sum);
}

ScalarField operator_lhs(const SupportFn& h, const ProblemParams& params) {
  params.validate();
  if (h.grid().dim() != params.n) {
    throw PreconditionError("grid dimension does not match n=" + std::to_string(params.n));
  }
  Eigen::VectorXd out(h.size());
  for (int i = 0; i < h.size(); ++i) {
    const double rho2 = h.jet(i).grad.squaredNorm() + h[i] * h[i];
    out[i] = std::pow(h[i], 1.0 - params.p) * std::pow(rho2, -0.5 * (params.n - params.q)) *
             h.b(i).det();
  }
  return ScalarField(h.field().grid_ptr(), std::move(out));
}

ResidualField residual(const SupportFn& h, const ScalarField& f, const ProblemParams& params) {
  require_same_grid(h, f);
  if (f.min() < 0.0) throw PreconditionError("density must be nonnegative");
  const ScalarField lhs = operator_lhs(h, params);
  return ResidualField(ScalarField(f.grid_ptr(), lhs.values() - f.values()));
}

ResidualField log_residual(const SupportFn& h, const ScalarField& f, const ProblemParams& params) {
  require_same_grid(h, f);
  params.validate();
  if (h.grid().dim() != params.n) {
    throw PreconditionError("grid dimension does not match n=" + std::to_string(params.n));
  }
  if (!(f.min() > 0.0)) throw PreconditionError("log residual needs a strictly positive density");
  Eigen::VectorXd g(h.size());
  for (int i = 0; i < h.size(); ++i) {
    const double det = h.b(i).det();
    if (!(det > 0.0)) {
      throw NumericalError("det b <= 0 at node " + std::to_string(i) + " (convexity lost)");
    }
    const double rho2 = h.jet(i).grad.squaredNorm() + h[i] * h[i];
    g[i] = std::log(det) - (params.p - 1.0) * std::log(h[i]) -
           0.5 * (params.n - params.q) * std::log(rho2) - std::log(f[i]);
  }
  return ResidualField(ScalarField(f.grid_ptr(), std::move(g)));
}

double log_residual_rounding_floor(const SupportFn& h) {
  const Grid& grid = h.grid();
  const double unit_roundoff = 0.5 * std::numeric_limits<double>::epsilon();
  const bool circle = grid.tangent_dim() == 1;
  double worst = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    const Stencil& s = grid.stencil(i);
    double acc = circle ? std::abs(h[i]) : 2.0 * std::abs(h[i]);
    double centre = 0.0;
    for (std::size_t k = 0; k < s.neighbors.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(k);
      const double w = circle ? std::abs(s.fit(1, col))
                              : std::abs(s.fit(2, col)) + 2.0 * std::abs(s.fit(3, col)) +
                                    std::abs(s.fit(4, col));
      acc += w * std::abs(h[s.neighbors[k]]);
      centre += w;
    }
    acc += centre * std::abs(h[i]);
    const double lambda = h.b(i).min_eigenvalue();
    if (!(lambda > 0.0)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, unit_roundoff * acc / lambda);
  }
  return worst;
}

Linearization::Linearization(const SupportFn& h, const ProblemParams& params)
    : grid_(h.field().grid_ptr()) {
  params.validate();
  const Grid& grid = *grid_;
  const int m = grid.tangent_dim();
  const int count = grid.size();
  const double nq = params.n - params.q;

  // Per-node rows assembled independently, then concatenated in node order.
  std::vector<std::vector<Eigen::Triplet<double>>> rows(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t idx) {
    const int i = static_cast<int>(idx);
    const Stencil& s = grid.stencil(i);
    const Eigen::Matrix2d binv = h.b(i).inverse();
    const Eigen::Vector2d& g = h.jet(i).grad;
    const double rho2 = g.squaredNorm() + h[i] * h[i];
    auto& row = rows[idx];
    row.reserve(s.neighbors.size() + 1);
    double diagonal = 0.0;
    for (std::size_t k = 0; k < s.neighbors.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(k);
      double entry = 0.0;
      if (m == 1) {
        entry = binv(0, 0) * s.fit(1, col) - nq * g[0] * s.fit(0, col) / rho2;
      } else {
        entry = binv(0, 0) * s.fit(2, col) + 2.0 * binv(0, 1) * s.fit(3, col) +
                binv(1, 1) * s.fit(4, col) -
                nq * (g[0] * s.fit(0, col) + g[1] * s.fit(1, col)) / rho2;
      }
      row.emplace_back(i, s.neighbors[k], entry);
      diagonal -= entry;
    }
    const double trace_inv = m == 1 ? binv(0, 0) : binv(0, 0) + binv(1, 1);
    diagonal += trace_inv - (params.p - 1.0) / h[i] - nq * h[i] / rho2;
    row.emplace_back(i, i, diagonal);
  });
  std::vector<Eigen::Triplet<double>> triplets;
  for (const auto& row : rows) triplets.insert(triplets.end(), row.begin(), row.end());
  matrix_.resize(count, count);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
}

ScalarField Linearization::apply(const ScalarField& delta) const {
  if (&delta.grid() != grid_.get()) throw PreconditionError("field lives on a different grid");
  return ScalarField(grid_, matrix_ * delta.values());
}

Linearization linearize(const SupportFn& h, const ProblemParams& params) {
  return Linearization(h, params);
}

}  // namespace lpdm
