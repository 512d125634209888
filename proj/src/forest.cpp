#include "repcause/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "repcause/errors.hpp"
#include "repcause/parallel.hpp"

namespace repcause {

double Tree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    node = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

int Tree::depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].feature < 0) continue;
    depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
    deepest = std::max(deepest, depth[i] + 1);
  }
  return deepest;
}

Eigen::VectorXd ForestModel::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() != n_features) throw DimensionError("forest expects " + std::to_string(n_features) + " features");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double sum = 0.0;
    for (const Tree& tree : trees) sum += tree.predict(x.row(i));
    out[i] = sum / static_cast<double>(trees.size());
  }
  return out;
}

namespace {

// Impurity of a node holding `count` targets with the given sums, scaled by
// the node size so children can be compared by simple addition.
double node_impurity(SplitCriterion criterion, double count, double sum, double sum_sq) {
  if (count <= 0.0) return 0.0;
  if (criterion == SplitCriterion::gini) {
    const double p = sum / count;  // binary targets
    return count * 2.0 * p * (1.0 - p);
  }
  return std::max(0.0, sum_sq - sum * sum / count);
}

struct Builder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& target;
  SplitCriterion criterion;
  ForestOptions options;
  std::mt19937_64 rng;
  Tree tree;
  std::vector<Eigen::Index> scratch;

  int build(std::vector<Eigen::Index>& rows, int depth) {
    double sum = 0.0, sum_sq = 0.0;
    for (Eigen::Index r : rows) {
      sum += target[r];
      sum_sq += target[r] * target[r];
    }
    const double count = static_cast<double>(rows.size());
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, sum / count});

    const double parent = node_impurity(criterion, count, sum, sum_sq);
    const auto min_leaf = static_cast<std::size_t>(std::max(1, options.min_leaf));
    const bool depth_ok = options.max_depth <= 0 || depth < options.max_depth;
    if (!depth_ok || rows.size() < 2 * min_leaf || parent <= 1e-12 * count) return id;

    const auto d = static_cast<int>(x.cols());
    int m = options.max_features > 0 ? std::min(options.max_features, d)
                                     : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
    std::vector<int> features(static_cast<std::size_t>(d));
    std::iota(features.begin(), features.end(), 0);
    // Partial Fisher-Yates draws m features without replacement.
    for (int i = 0; i < m; ++i) {
      std::uniform_int_distribution<int> pick(i, d - 1);
      std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(pick(rng))]);
    }

    double best_score = parent;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (int fi = 0; fi < m; ++fi) {
      const int f = features[static_cast<std::size_t>(fi)];
      scratch = rows;
      std::sort(scratch.begin(), scratch.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double xa = x(a, f), xb = x(b, f);
        return xa < xb || (xa == xb && a < b);
      });
      double left_sum = 0.0, left_sq = 0.0;
      for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
        const double v = target[scratch[i]];
        left_sum += v;
        left_sq += v * v;
        const std::size_t left_n = i + 1;
        const std::size_t right_n = scratch.size() - left_n;
        if (left_n < min_leaf || right_n < min_leaf) continue;
        const double lo = x(scratch[i], f), hi = x(scratch[i + 1], f);
        if (!(lo < hi)) continue;
        const double score =
            node_impurity(criterion, static_cast<double>(left_n), left_sum, left_sq) +
            node_impurity(criterion, static_cast<double>(right_n), sum - left_sum, sum_sq - left_sq);
        if (score < best_score - 1e-12 * std::abs(best_score)) {
          best_score = score;
          best_feature = f;
          best_threshold = 0.5 * (lo + hi);
          if (!(best_threshold < hi)) best_threshold = lo;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<Eigen::Index> left, right;
    for (Eigen::Index r : rows) (x(r, best_feature) <= best_threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }
};

void check_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& target, const ForestOptions& options) {
  if (options.trees < 1) throw InvalidSpec("forest needs at least one tree");
  if (options.min_leaf < 1) throw InvalidSpec("min_leaf must be >= 1");
  if (x.rows() != target.size()) throw DimensionError("forest rows and target length differ");
  if (x.rows() < 1) throw InvalidSpec("forest needs at least one row");
}

}  // namespace

Tree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& target, SplitCriterion criterion,
               const ForestOptions& options, std::uint64_t seed) {
  check_inputs(x, target, options);
  Builder builder{x, target, criterion, options, std::mt19937_64(seed), Tree{}, {}};
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  if (options.bootstrap) {
    std::uniform_int_distribution<Eigen::Index> draw(0, n - 1);
    for (auto& r : rows) r = draw(builder.rng);
  } else {
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  }
  builder.build(rows, 0);
  return std::move(builder.tree);
}

ForestModel grow_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& target, SplitCriterion criterion,
                        const ForestOptions& options, std::uint64_t seed) {
  check_inputs(x, target, options);
  ForestModel model;
  model.criterion = criterion;
  model.n_features = static_cast<int>(x.cols());
  model.trees.resize(static_cast<std::size_t>(options.trees));
  parallel_for(options.trees, [&](int i) {
    model.trees[static_cast<std::size_t>(i)] =
        grow_tree(x, target, criterion, options, seed + static_cast<std::uint64_t>(i));
  });
  return model;
}

ForestModel grow_forest_serial(const Eigen::MatrixXd& x, const Eigen::VectorXd& target, SplitCriterion criterion,
                               const ForestOptions& options, std::uint64_t seed) {
  check_inputs(x, target, options);
  ForestModel model;
  model.criterion = criterion;
  model.n_features = static_cast<int>(x.cols());
  for (int i = 0; i < options.trees; ++i) {
    model.trees.push_back(grow_tree(x, target, criterion, options, seed + static_cast<std::uint64_t>(i)));
  }
  return model;
}

}  // namespace repcause
