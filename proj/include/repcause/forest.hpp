#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace repcause {

struct ForestOptions {
  int trees = 100;
  int max_depth = 0;     // 0 = unbounded
  int min_leaf = 5;
  int max_features = 0;  // 0 = floor(sqrt(d))
  bool bootstrap = true;
};

enum class SplitCriterion { variance, gini };

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  int depth() const;
};

struct ForestModel {
  std::vector<Tree> trees;
  SplitCriterion criterion = SplitCriterion::variance;
  int n_features = 0;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

// CART on the given rows. Tree `i` of a forest uses seed + i, so serial
// and parallel growth produce the same forest.
Tree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& target, SplitCriterion criterion,
               const ForestOptions& options, std::uint64_t seed);

ForestModel grow_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& target, SplitCriterion criterion,
                        const ForestOptions& options, std::uint64_t seed);
// Reference path: trees grown one after another on the calling thread.
ForestModel grow_forest_serial(const Eigen::MatrixXd& x, const Eigen::VectorXd& target, SplitCriterion criterion,
                               const ForestOptions& options, std::uint64_t seed);

}  // namespace repcause
