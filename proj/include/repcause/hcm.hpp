#pragma once

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "repcause/data.hpp"

namespace repcause {

// Hierarchical composition model. A leaf returns one input coordinate; an
// internal node combines its p children with a smooth function of
// smoothness class s.
struct HcmSpec {
  int coordinate = -1;  // >= 0 marks a leaf
  std::vector<HcmSpec> children;
  double smoothness = 2.0;
  bool additive = false;  // combiner forced to the plain sum

  static HcmSpec leaf(int coordinate);
  static HcmSpec node(std::vector<HcmSpec> children, double smoothness = 2.0, bool additive = false);

  bool is_leaf() const { return coordinate >= 0; }
  int level() const;
  int max_coordinate() const;
  // Throws InvalidSpec on a malformed tree.
  void validate() const;
};

// A full tree of the given level where every internal node has `arity`
// children and leaves draw coordinates uniformly from [0, input_dim).
HcmSpec random_hcm_spec(int level, int arity, int input_dim, double smoothness, std::uint64_t seed);

// Materialized node. Children always precede their parent in the node list.
struct HcmNode {
  int coordinate = -1;
  std::vector<int> children;
  double smoothness = 2.0;
  bool additive = false;
  double offset = 0.0;
  Vector linear;     // p
  Matrix quadratic;  // p x p, upper triangle used
  Vector amplitude;  // p sine terms
  Vector frequency;
  Vector phase;
};

class HcmFunction {
 public:
  HcmFunction(const HcmSpec& spec, std::uint64_t seed);

  double evaluate_point(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Vector evaluate(const Matrix& x) const;

  int level() const { return level_; }
  // Distinct (s, p) pairs over internal nodes.
  std::set<std::pair<double, int>> constraint_set() const;
  // Pair with the smallest s / p, the slowest-rate component.
  std::pair<double, int> worst_case_pair() const;
  int input_dim() const { return input_dim_; }

  const std::vector<HcmNode>& nodes() const { return nodes_; }
  int root() const { return static_cast<int>(nodes_.size()) - 1; }

 private:
  std::vector<HcmNode> nodes_;
  int level_ = 0;
  int input_dim_ = 0;
};

// h(v) for one materialized internal node.
double combine(const HcmNode& node, const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace repcause
