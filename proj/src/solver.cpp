#include "lpdm/solver.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <utility>

namespace lpdm {

namespace {

// Diagonal shifts tried (relative to the largest diagonal entry) when the
// Newton matrix is singular.
constexpr double kShifts[] = {1e-10, 1e-7, 1e-4};

std::string fmt_double(double x) {
  std::ostringstream out;
  out.precision(6);
  out << x;
  return out.str();
}

Eigen::VectorXd solve_newton_system(const Eigen::SparseMatrix<double>& J, const Eigen::VectorXd& rhs) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(J);
  if (lu.info() == Eigen::Success) {
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() == Eigen::Success && x.allFinite()) return x;
  }
  double scale = 0.0;
  for (int i = 0; i < J.rows(); ++i) scale = std::max(scale, std::abs(J.coeff(i, i)));
  Eigen::SparseMatrix<double> identity(J.rows(), J.cols());
  identity.setIdentity();
  for (double shift : kShifts) {
    const Eigen::SparseMatrix<double> shifted = J - shift * std::max(scale, 1.0) * identity;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success) continue;
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() == Eigen::Success && x.allFinite()) return x;
  }
  return {};
}

struct Trial {
  std::optional<SupportFn> h;
  double log_sup = 0.0;
};

// Admissible means: positive, min eig b above the floor, log residual
// defined and strictly smaller in sup norm.
Trial try_step(const GridPtr& grid, const Eigen::VectorXd& values, const ScalarField& f,
               const ProblemParams& params, const SolverOptions& opts, double current) {
  Trial t;
  if (!values.allFinite() || values.minCoeff() <= 0.0) return t;
  ScalarField field(grid, values);
  if (opts.enforce_even) field = symmetrize_even(field);
  SupportFn h(std::move(field));
  if (!(h.psd_margin() > opts.psd_floor)) return t;
  try {
    t.log_sup = log_residual(h, f, params).sup_norm;
  } catch (const NumericalError&) {
    return t;
  }
  if (t.log_sup < current) t.h = std::move(h);
  return t;
}

SolveReport make_report(SupportFn h, const ScalarField& f, const ProblemParams& params,
                        const SolverOptions& opts, int iterations,
                        std::vector<IterationRecord> history) {
  const ResidualField g = log_residual(h, f, params);
  const ResidualField r = residual(h, f, params);
  AprioriReport apriori = apriori_report(h, f, params);
  GeometricIdentityReport geometry = geometric_identity_report(h);
  DualIntegralIdentity dual = dual_integral_identity(h, f, params);
  const double floor = log_residual_rounding_floor(h);
  SolveReport report(std::move(h), f);
  report.params = params;
  report.options = opts;
  report.iterations = iterations;
  report.history = std::move(history);
  report.rounding_floor = floor;
  report.floor_limited = g.sup_norm > opts.tol_residual;
  report.log_sup = g.sup_norm;
  report.log_l2 = g.l2_norm;
  report.plain_sup = r.sup_norm;
  report.plain_l2 = r.l2_norm;
  report.min_h = apriori.min_h;
  report.max_h = apriori.max_h;
  report.max_grad = apriori.max_grad;
  report.max_H = apriori.max_H;
  report.psd_margin = apriori.psd_margin;
  report.apriori = apriori;
  report.geometry = geometry;
  report.dual = dual;
  return report;
}

}  // namespace

void SolverOptions::validate() const {
  if (!(tol_residual > 0.0)) throw PreconditionError("tol_residual must be positive");
  if (max_iters < 1) throw PreconditionError("max_iters must be at least 1");
  if (!(backtrack > 0.0 && backtrack < 1.0)) {
    throw PreconditionError("backtrack factor must lie in (0, 1)");
  }
  if (!(min_step > 0.0 && min_step <= 1.0)) throw PreconditionError("min_step must lie in (0, 1]");
  if (!(psd_floor >= 0.0)) throw PreconditionError("psd_floor must be nonnegative");
}

void LadderConfig::validate() const {
  if (!(eps_min > 0.0)) throw PreconditionError("eps_min must be positive");
  if (!(eps0 >= eps_min)) throw PreconditionError("eps0 must be at least eps_min");
  if (!(factor > 0.0 && factor < 1.0)) throw PreconditionError("ladder factor must lie in (0, 1)");
}

std::vector<double> LadderConfig::levels() const {
  validate();
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double eps = eps0 * std::pow(factor, k);
    // Relative slack so that 1e-1 * (10^{-1/2})^8 lands on 1e-5.
    if (eps <= eps_min * (1.0 + 1e-9)) break;
    out.push_back(eps);
  }
  out.push_back(eps_min);
  return out;
}

NonConvergence::NonConvergence(const std::string& what, int iterations, double last_log_sup)
    : Error(what), iterations_(iterations), last_log_sup_(last_log_sup) {}

SupportFn default_init(const ScalarField& f, const ProblemParams& params) {
  if (params.p == params.q) {
    throw PreconditionError("p = q: the constant initial guess (max f)^{1/(q-p)} is undefined");
  }
  if (!(f.min() > 0.0)) throw PreconditionError("default_init needs a strictly positive density");
  return SupportFn(ScalarField::constant(f.grid_ptr(), std::pow(f.max(), 1.0 / (params.q - params.p))));
}

SolveReport newton_solve(const ScalarField& f, const ProblemParams& params, const SupportFn& init,
                         const SolverOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  params.validate();
  opts.validate();
  if (&f.grid() != &init.grid()) throw PreconditionError("f and init live on different grids");
  if (f.grid().dim() != params.n) {
    throw PreconditionError("grid dimension does not match n=" + std::to_string(params.n));
  }
  if (f.min() < 0.0) throw PreconditionError("density must be nonnegative");
  if (!(f.min() > 0.0)) throw PreconditionError("newton_solve needs a strictly positive density");

  const GridPtr& grid = f.grid_ptr();
  SupportFn h = opts.enforce_even ? SupportFn(symmetrize_even(init.field())) : init;
  if (!(h.psd_margin() > opts.psd_floor)) {
    throw PreconditionError("initial guess is not strictly convex (min eig b = " +
                            fmt_double(h.psd_margin()) + ")");
  }

  std::vector<IterationRecord> history;
  ResidualField g = log_residual(h, f, params);
  int iterations = 0;
  while (g.sup_norm > opts.tol_residual) {
    if (iterations >= opts.max_iters) {
      throw NonConvergence("no convergence in " + std::to_string(opts.max_iters) +
                               " iterations (sup|G| = " + fmt_double(g.sup_norm) + ")",
                           iterations, g.sup_norm);
    }
    const Linearization lin(h, params);
    const Eigen::VectorXd delta = solve_newton_system(lin.matrix(), -g.values.values());
    if (delta.size() == 0) {
      throw NonConvergence("Newton system could not be solved at iteration " +
                               std::to_string(iterations),
                           iterations, g.sup_norm);
    }
    double step = 1.0;
    Trial accepted;
    while (step >= opts.min_step) {
      Trial t = try_step(grid, h.field().values() + step * delta, f, params, opts, g.sup_norm);
      if (t.h) {
        accepted = std::move(t);
        break;
      }
      step *= opts.backtrack;
    }
    if (!accepted.h) {
      if (opts.accept_rounding_floor && g.sup_norm <= log_residual_rounding_floor(h)) break;
      throw NonConvergence("line search stalled at iteration " + std::to_string(iterations) +
                               " (sup|G| = " + fmt_double(g.sup_norm) + ")",
                           iterations, g.sup_norm);
    }
    history.push_back({g.sup_norm, step});
    h = std::move(*accepted.h);
    g = log_residual(h, f, params);
    ++iterations;
  }
  history.push_back({g.sup_norm, 0.0});

  SolveReport report = make_report(std::move(h), f, params, opts, iterations, std::move(history));
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

LadderReport continuation_ladder(const ScalarField& f, const ProblemParams& params,
                                 const LadderConfig& ladder, const SolverOptions& opts,
                                 bool experimental) {
  params.validate();
  opts.validate();
  const std::vector<double> eps_levels = ladder.levels();
  if (f.min() < 0.0) throw PreconditionError("density must be nonnegative");
  if (!(f.max() > 0.0)) throw PreconditionError("density must be nonzero");
  const Grid& grid = f.grid();
  for (int i = 0; i < grid.size(); ++i) {
    if (std::abs(f[i] - f[grid.antipode(i)]) > 1e-12 * f.max()) {
      throw PreconditionError("density must be even (f(x) = f(-x))");
    }
  }
  if (!params.guaranteed_regime() && !experimental) {
    throw PreconditionError("the ladder needs p > q > 0 (got " + params.describe() +
                            "); pass --experimental to run anyway");
  }

  LadderReport out;
  out.params = params;
  out.config = ladder;
  out.options = opts;
  for (double eps : eps_levels) {
    const ScalarField f_eps(f.grid_ptr(), f.values().array() + eps);
    try {
      const SupportFn init = out.levels.empty() ? default_init(f_eps, params) : *out.limit();
      out.levels.push_back({eps, newton_solve(f_eps, params, init, opts)});
    } catch (const NonConvergence& e) {
      out.failed_eps = eps;
      out.failure = e.what();
      break;
    }
  }
  for (std::size_t k = 0; k + 1 < out.levels.size(); ++k) {
    const SupportFn& a = out.levels[k].report.h;
    const SupportFn& b = out.levels[k + 1].report.h;
    CauchyStep c{out.levels[k].eps, out.levels[k + 1].eps};
    for (int i = 0; i < a.size(); ++i) {
      c.sup_dh = std::max(c.sup_dh, std::abs(a[i] - b[i]));
      c.sup_dgrad = std::max(c.sup_dgrad, (a.gradient(i) - b.gradient(i)).norm());
      c.sup_dH = std::max(c.sup_dH, std::abs(a.trace_b(i) - b.trace_b(i)));
    }
    out.cauchy.push_back(c);
  }
  out.completed = !out.failed_eps.has_value();
  return out;
}

}  // namespace lpdm
