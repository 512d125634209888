#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace repcause {

// Exact k nearest neighbours under the Euclidean metric. Zero distances
// (the point itself and any duplicates) are excluded; ties go to the
// lower row index.
struct KnnResult {
  Eigen::MatrixXd distances;                          // n x k, ascending per row
  Eigen::Matrix<Eigen::Index, -1, -1> indices;        // n x k
  Eigen::Index duplicate_points = 0;                  // rows with a zero-distance partner
  std::vector<std::string> warnings;
};

KnnResult knn(const Eigen::MatrixXd& z, int k);
KnnResult knn_serial(const Eigen::MatrixXd& z, int k);

}  // namespace repcause
