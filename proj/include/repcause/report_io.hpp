#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "repcause/estimators.hpp"
#include "repcause/experiments.hpp"
#include "repcause/intrinsic_dim.hpp"
#include "repcause/transforms.hpp"

namespace repcause {

using Json = nlohmann::ordered_json;

// Shortest decimal that round-trips; "nan"/"inf" spelled out.
std::string format_number(double value);

Json report_json(const AteReport& report);
Json summary_json(const EstimatorSummary& summary);
Json id_json(const IdEstimate& estimate);

// rep,estimator,estimate,se,ci_low,ci_high,covered
std::string coverage_csv(const CoverageResult& result);
// rotations,nonzero_count
std::string curve_csv(const std::vector<SparsityPoint>& curve);
// d,n,test_mse
std::string rate_csv(const RateResult& result);
// point,value
std::string per_point_csv(const IdEstimate& estimate);

}  // namespace repcause
