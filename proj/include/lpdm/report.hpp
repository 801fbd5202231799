#pragma once

#include "lpdm/solver.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace lpdm {

/// One CSV row per solved level. Wall time is deliberately absent: report
/// files must be byte-identical across runs.
struct ReportRow {
  double eps = 0.0;
  double log_residual_sup = 0.0;
  double log_residual_l2 = 0.0;
  double residual_sup = 0.0;
  double residual_l2 = 0.0;
  double min_h = 0.0;
  double c0_lower_bound = 0.0;
  double max_h = 0.0;
  double max_grad = 0.0;
  double max_H = 0.0;
  double psd_margin = 0.0;
  double dual_rel_gap = 0.0;
  int iterations = 0;
};

ReportRow make_row(const SolveReport& report, double eps);

/// Recomputes every column from h alone (f_eps is the density that was
/// solved for); iterations cannot be recovered from h and are passed in.
ReportRow recompute_row(const SupportFn& h, const ScalarField& f_eps, const ProblemParams& params,
                        double eps, int iterations);

const std::vector<std::string>& csv_columns();
std::string csv_header();
/// Floats with 17 significant digits.
std::string csv_line(const ReportRow& row);
/// Inverse of csv_line; nullopt when the line does not have every column.
std::optional<ReportRow> parse_csv_line(const std::string& line);

/// Largest relative difference over the float columns (absolute below 1).
double row_deviation(const ReportRow& a, const ReportRow& b);

/// Row columns plus the pass/fail flags and extra diagnostics of a level.
nlohmann::ordered_json level_json(const SolveReport& report, double eps);

}  // namespace lpdm
