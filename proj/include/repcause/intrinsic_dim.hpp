#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace repcause {

enum class IdMethod { mle, ess, lpca };

const char* to_string(IdMethod method);
IdMethod parse_id_method(const std::string& name);

struct IdEstimate {
  IdMethod method = IdMethod::mle;
  int k_neighbors = 0;
  double value = 0.0;  // clamped to [1, d]
  std::vector<double> per_point_values;
  std::vector<std::string> warnings;
};

inline constexpr int kMleNeighbors = 5;
inline constexpr int kEssNeighbors = 25;
inline constexpr int kLpcaNeighbors = 50;
inline constexpr double kLpcaAlpha = 0.05;

// Levina-Bickel estimator with the unbiased (k - 2) normalisation. The
// global value is the mean of per-point estimates; with `harmonic` it is
// the inverse of the mean per-point log-distance ratio.
IdEstimate id_mle(const Eigen::MatrixXd& z, int k = kMleNeighbors, bool harmonic = false);

// Expected simplex skewness over each point's neighbourhood, inverted
// against the Gaussian reference curve; median over points.
IdEstimate id_ess(const Eigen::MatrixXd& z, int k = kEssNeighbors);

// Local PCA with the Fukunaga-Olsen eigenvalue threshold; median over points.
IdEstimate id_lpca(const Eigen::MatrixXd& z, int k = kLpcaNeighbors, double alpha = kLpcaAlpha);

// E|sin theta| between two independent isotropic Gaussian vectors in R^m.
double ess_reference(int m);
// Local ESS statistic of the rows of `points`, centred at their mean.
// Returns a negative value when the neighbourhood has rank 0.
double ess_statistic(const Eigen::MatrixXd& points);
// Piecewise-linear inverse of ess_reference over m = 1..max_dim.
double ess_invert(double statistic, int max_dim);

}  // namespace repcause
