#include "repcause/report_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace repcause {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

Json report_json(const AteReport& report) {
  Json j;
  j["method"] = report.method;
  j["estimate"] = report.estimate;
  j["std_error"] = report.std_error;
  j["ci_low"] = report.ci_low;
  j["ci_high"] = report.ci_high;
  j["level"] = report.level;
  j["n"] = report.n_used;
  j["folds"] = report.folds;
  j["warnings"] = report.warnings;
  if (!report.per_fold_estimates.empty()) j["per_fold_estimates"] = report.per_fold_estimates;
  return j;
}

Json summary_json(const EstimatorSummary& s) {
  Json j;
  j["estimator"] = s.estimator;
  j["reps"] = s.reps;
  j["mean_estimate"] = s.mean_estimate;
  j["mean_bias"] = s.mean_bias;
  j["bias_mc_se"] = s.bias_mc_se;
  j["coverage"] = s.coverage;
  j["mean_ci_width"] = s.mean_ci_width;
  j["mean_std_error"] = s.mean_std_error;
  return j;
}

Json id_json(const IdEstimate& estimate) {
  Json j;
  j["method"] = to_string(estimate.method);
  j["k"] = estimate.k_neighbors;
  j["estimate"] = estimate.value;
  j["warnings"] = estimate.warnings;
  return j;
}

std::string coverage_csv(const CoverageResult& result) {
  std::ostringstream out;
  out << "rep,estimator,estimate,se,ci_low,ci_high,covered\n";
  for (const RepetitionRow& row : result.rows) {
    out << row.rep << ',' << row.estimator << ',' << format_number(row.report.estimate) << ','
        << format_number(row.report.std_error) << ',' << format_number(row.report.ci_low) << ','
        << format_number(row.report.ci_high) << ',' << (row.covered ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string curve_csv(const std::vector<SparsityPoint>& curve) {
  std::ostringstream out;
  out << "rotations,nonzero_count\n";
  for (const SparsityPoint& p : curve) out << p.rotations << ',' << p.nonzero << '\n';
  return out.str();
}

std::string rate_csv(const RateResult& result) {
  std::ostringstream out;
  out << "d,n,test_mse\n";
  for (const RatePoint& p : result.points) out << p.d << ',' << p.n << ',' << format_number(p.test_mse) << '\n';
  return out.str();
}

std::string per_point_csv(const IdEstimate& estimate) {
  std::ostringstream out;
  out << "point,value\n";
  for (std::size_t i = 0; i < estimate.per_point_values.size(); ++i) {
    out << i << ',' << format_number(estimate.per_point_values[i]) << '\n';
  }
  return out.str();
}

}  // namespace repcause
