#include "lpdm/report.hpp"

#include "lpdm/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lpdm {

namespace {

std::vector<double> floats(const ReportRow& r) {
  return {r.eps,     r.log_residual_sup, r.log_residual_l2, r.residual_sup, r.residual_l2,
          r.min_h,   r.c0_lower_bound,   r.max_h,           r.max_grad,     r.max_H,
          r.psd_margin, r.dual_rel_gap};
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

ReportRow make_row(const SolveReport& report, double eps) {
  ReportRow r;
  r.eps = eps;
  r.log_residual_sup = report.log_sup;
  r.log_residual_l2 = report.log_l2;
  r.residual_sup = report.plain_sup;
  r.residual_l2 = report.plain_l2;
  r.min_h = report.min_h;
  r.c0_lower_bound = report.apriori.c0_lower_bound;
  r.max_h = report.max_h;
  r.max_grad = report.max_grad;
  r.max_H = report.max_H;
  r.psd_margin = report.psd_margin;
  r.dual_rel_gap = report.dual.rel_gap;
  r.iterations = report.iterations;
  return r;
}

ReportRow recompute_row(const SupportFn& h, const ScalarField& f_eps, const ProblemParams& params,
                        double eps, int iterations) {
  const ResidualField g = log_residual(h, f_eps, params);
  const ResidualField res = residual(h, f_eps, params);
  const AprioriReport a = apriori_report(h, f_eps, params);
  const DualIntegralIdentity dual = dual_integral_identity(h, f_eps, params);
  ReportRow r;
  r.eps = eps;
  r.log_residual_sup = g.sup_norm;
  r.log_residual_l2 = g.l2_norm;
  r.residual_sup = res.sup_norm;
  r.residual_l2 = res.l2_norm;
  r.min_h = a.min_h;
  r.c0_lower_bound = a.c0_lower_bound;
  r.max_h = a.max_h;
  r.max_grad = a.max_grad;
  r.max_H = a.max_H;
  r.psd_margin = a.psd_margin;
  r.dual_rel_gap = dual.rel_gap;
  r.iterations = iterations;
  return r;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = {
      "eps",        "log_residual_sup", "log_residual_l2", "residual_sup", "residual_l2",
      "min_h",      "c0_lower_bound",   "max_h",           "max_grad",     "max_H",
      "psd_margin", "dual_rel_gap",     "iterations"};
  return columns;
}

std::string csv_header() {
  std::string out;
  for (const auto& c : csv_columns()) out += (out.empty() ? "" : ",") + c;
  return out;
}

std::string csv_line(const ReportRow& row) {
  std::string out;
  for (double v : floats(row)) out += format_double(v) + ",";
  return out + std::to_string(row.iterations);
}

std::optional<ReportRow> parse_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (cells.size() != csv_columns().size()) return std::nullopt;
  std::vector<double> v;
  try {
    for (std::size_t k = 0; k + 1 < cells.size(); ++k) v.push_back(std::stod(cells[k]));
    ReportRow r{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11],
                std::stoi(cells.back())};
    return r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

double row_deviation(const ReportRow& a, const ReportRow& b) {
  const auto x = floats(a);
  const auto y = floats(b);
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (std::isnan(x[k]) && std::isnan(y[k])) continue;
    const double d = std::abs(x[k] - y[k]) / std::max(1.0, std::abs(x[k]));
    worst = std::max(worst, std::isnan(d) ? INFINITY : d);
  }
  return worst;
}

nlohmann::ordered_json level_json(const SolveReport& report, double eps) {
  const ReportRow row = make_row(report, eps);
  nlohmann::ordered_json j;
  for (std::size_t k = 0; k < csv_columns().size() - 1; ++k) {
    j[csv_columns()[k]] = number_or_null(floats(row)[k]);
  }
  j["iterations"] = row.iterations;
  j["floor_limited"] = report.floor_limited;
  j["rounding_floor"] = report.rounding_floor;
  j["min_H"] = report.apriori.min_H;
  j["c0_applicable"] = report.apriori.c0_applicable;
  j["c0_lower_bound_as_printed"] = number_or_null(report.apriori.c0_lower_bound_as_printed);
  j["c0_lower_ok"] = report.apriori.c0_lower_ok;
  j["grad_bound_ok"] = report.apriori.grad_bound_ok;
  const GeometricIdentityReport& g = report.geometry;
  j["geometry"] = {{"max_h", g.max_h},
                   {"max_rho", g.max_rho},
                   {"max_equal_ok", g.max_equal_ok},
                   {"grad_le_rho_ok", g.grad_bound_ok},
                   {"grad_le_rho_worst", g.grad_bound_worst},
                   {"even", g.even},
                   {"even_cone_ok", g.even_cone_ok ? nlohmann::ordered_json(*g.even_cone_ok)
                                                   : nlohmann::ordered_json(nullptr)},
                   {"even_cone_worst", g.even ? nlohmann::ordered_json(g.even_cone_worst)
                                              : nlohmann::ordered_json(nullptr)}};
  j["dual_identity"] = {{"lhs", report.dual.lhs}, {"rhs", report.dual.rhs}};
  j["tolerances"] = {{"c0", report.apriori.tol_c0},
                     {"grad", report.apriori.tol_grad},
                     {"max_equal", g.tol.equal_max},
                     {"grad_le_rho", g.tol.grad_bound},
                     {"even_cone", g.tol.even_cone}};
  return j;
}

}  // namespace lpdm
