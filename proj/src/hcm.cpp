#include "repcause/hcm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace repcause {

HcmSpec HcmSpec::leaf(int coordinate) {
  HcmSpec s;
  s.coordinate = coordinate;
  return s;
}

HcmSpec HcmSpec::node(std::vector<HcmSpec> children, double smoothness, bool additive) {
  HcmSpec s;
  s.children = std::move(children);
  s.smoothness = smoothness;
  s.additive = additive;
  return s;
}

int HcmSpec::level() const {
  int deepest = 0;
  for (const HcmSpec& c : children) deepest = std::max(deepest, c.level());
  return is_leaf() ? 0 : deepest + 1;
}

int HcmSpec::max_coordinate() const {
  int top = coordinate;
  for (const HcmSpec& c : children) top = std::max(top, c.max_coordinate());
  return top;
}

void HcmSpec::validate() const {
  if (is_leaf()) {
    if (!children.empty()) throw InvalidSpec("HCM leaf cannot have children");
    return;
  }
  if (children.empty()) throw InvalidSpec("HCM internal node needs at least one child");
  if (!(smoothness > 0.0) || !std::isfinite(smoothness)) throw InvalidSpec("HCM smoothness must be positive");
  for (const HcmSpec& c : children) c.validate();
}

namespace {

HcmSpec random_subtree(int level, int arity, int input_dim, double smoothness, std::mt19937_64& rng) {
  if (level == 0) {
    std::uniform_int_distribution<int> pick(0, input_dim - 1);
    return HcmSpec::leaf(pick(rng));
  }
  std::vector<HcmSpec> children;
  for (int i = 0; i < arity; ++i) children.push_back(random_subtree(level - 1, arity, input_dim, smoothness, rng));
  return HcmSpec::node(std::move(children), smoothness);
}

// Appends the subtree in post-order and returns the index of its root.
int materialize(const HcmSpec& spec, std::mt19937_64& rng, std::vector<HcmNode>& out) {
  HcmNode node;
  node.coordinate = spec.coordinate;
  node.smoothness = spec.smoothness;
  node.additive = spec.additive;
  for (const HcmSpec& c : spec.children) node.children.push_back(materialize(c, rng, out));
  if (!spec.is_leaf() && !spec.additive) {
    const auto p = static_cast<Eigen::Index>(node.children.size());
    const double pd = static_cast<double>(p);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_real_distribution<double> freq(0.5, 2.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    node.offset = coef(rng);
    node.linear.resize(p);
    node.quadratic = Matrix::Zero(p, p);
    node.amplitude.resize(p);
    node.frequency.resize(p);
    node.phase.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) node.linear[i] = coef(rng) / pd;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i; j < p; ++j) node.quadratic(i, j) = coef(rng) / (pd * pd);
    }
    for (Eigen::Index i = 0; i < p; ++i) {
      node.amplitude[i] = coef(rng) / pd;
      node.frequency[i] = freq(rng);
      node.phase[i] = angle(rng);
    }
  }
  out.push_back(std::move(node));
  return static_cast<int>(out.size()) - 1;
}

}  // namespace

HcmSpec random_hcm_spec(int level, int arity, int input_dim, double smoothness, std::uint64_t seed) {
  if (level < 0 || arity < 1 || input_dim < 1) throw InvalidSpec("random HCM needs level >= 0, arity >= 1, input_dim >= 1");
  std::mt19937_64 rng(seed);
  return random_subtree(level, arity, input_dim, smoothness, rng);
}

double combine(const HcmNode& node, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (node.additive) return v.sum();
  double out = node.offset + node.linear.dot(v);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    for (Eigen::Index j = i; j < v.size(); ++j) out += node.quadratic(i, j) * v[i] * v[j];
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) out += node.amplitude[i] * std::sin(node.frequency[i] * v[i] + node.phase[i]);
  return out;
}

HcmFunction::HcmFunction(const HcmSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  materialize(spec, rng, nodes_);
  level_ = spec.level();
  input_dim_ = spec.max_coordinate() + 1;
}

double HcmFunction::evaluate_point(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() < input_dim_) throw DimensionError("HCM input has too few coordinates");
  std::vector<double> value(nodes_.size());
  Eigen::VectorXd args;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const HcmNode& node = nodes_[i];
    if (node.coordinate >= 0) {
      value[i] = x[node.coordinate];
      continue;
    }
    args.resize(static_cast<Eigen::Index>(node.children.size()));
    for (std::size_t c = 0; c < node.children.size(); ++c) {
      args[static_cast<Eigen::Index>(c)] = value[static_cast<std::size_t>(node.children[c])];
    }
    value[i] = combine(node, args);
  }
  return value.back();
}

Vector HcmFunction::evaluate(const Matrix& x) const {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = evaluate_point(x.row(i));
  return out;
}

std::set<std::pair<double, int>> HcmFunction::constraint_set() const {
  std::set<std::pair<double, int>> out;
  for (const HcmNode& node : nodes_) {
    if (node.coordinate < 0) out.emplace(node.smoothness, static_cast<int>(node.children.size()));
  }
  return out;
}

std::pair<double, int> HcmFunction::worst_case_pair() const {
  const auto pairs = constraint_set();
  // A bare coordinate has no combiner; treat it as infinitely smooth in one variable.
  if (pairs.empty()) return {std::numeric_limits<double>::infinity(), 1};
  return *std::min_element(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    return a.first / a.second < b.first / b.second;
  });
}

}  // namespace repcause
