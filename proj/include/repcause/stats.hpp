#pragma once

#include <span>
#include <vector>

namespace repcause::stats {

double normal_cdf(double x);
double normal_quantile(double p);
// Two-sided critical value z_{(1+level)/2}.
double normal_critical(double level);

double mean(std::span<const double> x);
// Unbiased (n-1) sample variance.
double sample_variance(std::span<const double> x);
double median(std::vector<double> x);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov test against N(0,1).
KsResult ks_test_standard_normal(std::vector<double> sample);
// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_survival(double x);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit least_squares_line(std::span<const double> x, std::span<const double> y);

}  // namespace repcause::stats
