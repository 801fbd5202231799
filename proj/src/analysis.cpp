#include "lpdm/analysis.hpp"

#include "lpdm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lpdm {

namespace {

void require_sphere(const ScalarField& f, int n) {
  if (n == 2) {
    throw PreconditionError(
        "condition checks are undefined for n = 2 (exponent 1/(n-2)); use n = 3");
  }
  if (n != 3 || f.grid().dim() != 3) {
    throw PreconditionError("condition checks need n = 3 on an S^2 grid");
  }
  if (f.min() < 0.0) throw PreconditionError("density must be nonnegative");
}

struct Derivs {
  double f = 0.0;
  double grad2 = 0.0;
  double lap = 0.0;
};

std::vector<Derivs> derivs(const ScalarField& f) {
  const auto js = jets(f);
  std::vector<Derivs> out(js.size());
  for (std::size_t i = 0; i < js.size(); ++i) {
    out[i] = {f[static_cast<int>(i)], js[i].grad.squaredNorm(), js[i].hess.trace()};
  }
  return out;
}

// f^{2 - 1/(n-2)}; f for n = 3.
double pair_weight(double f, int n) { return std::pow(f, 2.0 - 1.0 / (n - 2)); }

}  // namespace

ConditionReport condition_I(const ScalarField& f, int n, const ConditionOptions& opts) {
  require_sphere(f, n);
  ConditionReport report;
  report.f_cut = opts.f_cut;
  // With n = 3 the power f^{1/(n-2)} is f itself, so the division-free
  // forms |grad f| <= (n-2) A f^{1-1/(n-2)} and
  // f lap f - (n-3)/(n-2) |grad f|^2 >= -(n-2) A f^{2-1/(n-2)} reduce to the
  // derivatives of f and no node needs dividing by f.
  const auto d = derivs(f);
  double a_grad = 0.0;
  double a_lap = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i].f < opts.f_cut) ++report.vanishing_nodes;
    const double g = std::sqrt(d[i].grad2);
    if (g > a_grad || report.worst_grad_node < 0) {
      a_grad = std::max(a_grad, g);
      report.worst_grad_node = static_cast<int>(i);
    }
    const double lap_deficit = std::max(0.0, -d[i].lap);
    if (lap_deficit > a_lap || report.worst_lap_node < 0) {
      a_lap = std::max(a_lap, lap_deficit);
      report.worst_lap_node = static_cast<int>(i);
    }
  }
  report.A_grad = a_grad;
  report.A_lap = a_lap;
  if (opts.A) {
    report.A_supplied = opts.A;
    report.grad_ok = a_grad <= *opts.A;
    report.lap_ok = a_lap <= *opts.A;
  }
  return report;
}

ConditionReport condition_II(const ScalarField& f, int n, double q, const ConditionOptions& opts) {
  if (!(q < 2.0)) {
    throw PreconditionError("condition II requires q < 2 (got q=" + std::to_string(q) + ")");
  }
  require_sphere(f, n);
  const double c = (3.0 - q) / (2.0 - q);
  ConditionReport report;
  report.f_cut = opts.f_cut;
  const auto d = derivs(f);
  double a_ii = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double numerator = d[i].f * d[i].lap - c * d[i].grad2;
    if (d[i].f <= opts.f_cut) {
      ++report.vanishing_nodes;
      if (numerator < -opts.vanishing_tol) report.vanishing_ok = false;
      continue;
    }
    const double ratio = std::max(0.0, -numerator / pair_weight(d[i].f, n));
    if (ratio > a_ii || report.worst_II_node < 0) {
      a_ii = std::max(a_ii, ratio);
      report.worst_II_node = static_cast<int>(i);
    }
  }
  report.A_II = a_ii;
  if (opts.A) {
    report.A_supplied = opts.A;
    report.II_ok = a_ii <= *opts.A && report.vanishing_ok;
  }
  return report;
}

double minimal_pair_constant(const ScalarField& f, double a, double b, int n,
                             const ConditionOptions& opts) {
  require_sphere(f, n);
  const auto d = derivs(f);
  double A = 0.0;
  for (const auto& x : d) {
    if (x.f <= opts.f_cut) continue;
    const double lhs = a * x.f * x.lap - b * x.grad2;
    A = std::max(A, -lhs / pair_weight(x.f, n));
  }
  return A;
}

AdditivityResult additivity_check(const ScalarField& f1, const ScalarField& f2, double a,
                                  double b, double A, int n, double tol) {
  require_sphere(f1, n);
  require_sphere(f2, n);
  if (&f1.grid() != &f2.grid()) throw PreconditionError("f1 and f2 live on different grids");

  auto margins = [&](const ScalarField& f, double constant) {
    const auto d = derivs(f);
    std::vector<double> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double lhs = a * d[i].f * d[i].lap - b * d[i].grad2;
      out[i] = lhs + constant * pair_weight(d[i].f, n);
    }
    return out;
  };

  AdditivityResult result;
  const auto m1 = margins(f1, A);
  const auto m2 = margins(f2, A);
  result.premise_holds = *std::min_element(m1.begin(), m1.end()) >= -tol &&
                         *std::min_element(m2.begin(), m2.end()) >= -tol;

  const ScalarField sum(f1.grid_ptr(), f1.values() + f2.values());
  const auto ms = margins(sum, 2.0 * A);
  const auto worst = std::min_element(ms.begin(), ms.end());
  result.worst_node = static_cast<int>(worst - ms.begin());
  result.worst_margin = *worst;
  result.holds = *worst >= -tol;
  return result;
}

AlgebraicInequality algebraic_inequality(std::span<const double> a) {
  if (a.size() < 2) throw PreconditionError("algebraic inequality needs at least two numbers");
  AlgebraicInequality out;
  double sum = 0.0;
  for (double v : a) {
    out.lhs += v * v;
    sum += v;
  }
  const double n_minus_2 = static_cast<double>(a.size()) - 1.0;
  out.rhs = sum * sum / n_minus_2;
  const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  out.hypothesis = *lo <= 0.0 && *hi >= 0.0;
  out.holds = out.lhs >= out.rhs;
  return out;
}

AprioriReport apriori_report(const SupportFn& h, const ScalarField& f, const ProblemParams& params,
                             double tol_c0, double tol_grad) {
  if (&h.grid() != &f.grid()) throw PreconditionError("h and f live on different grids");
  AprioriReport r;
  r.tol_c0 = tol_c0;
  r.tol_grad = tol_grad;
  r.min_h = h.field().min();
  r.max_h = h.field().max();
  const double max_f = f.max();
  r.c0_applicable = params.p > params.q;
  if (r.c0_applicable) {
    r.c0_lower_bound = std::pow(max_f, 1.0 / (params.q - params.p));
    r.c0_lower_bound_as_printed = 1.0 / std::pow(max_f, params.p - params.q);
    r.c0_lower_ok = r.min_h >= r.c0_lower_bound - tol_c0;
  } else {
    r.c0_lower_bound = std::numeric_limits<double>::quiet_NaN();
    r.c0_lower_bound_as_printed = std::numeric_limits<double>::quiet_NaN();
    r.c0_lower_ok = true;
  }
  r.max_H = -std::numeric_limits<double>::infinity();
  r.min_H = std::numeric_limits<double>::infinity();
  for (int i = 0; i < h.size(); ++i) {
    r.max_grad = std::max(r.max_grad, h.grad_norm(i));
    r.max_H = std::max(r.max_H, h.trace_b(i));
    r.min_H = std::min(r.min_H, h.trace_b(i));
  }
  r.grad_bound_ok = r.max_grad <= r.max_h + tol_grad;
  r.psd_margin = h.psd_margin();
  return r;
}

}  // namespace lpdm
