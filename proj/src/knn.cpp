#include "repcause/knn.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "repcause/errors.hpp"
#include "repcause/parallel.hpp"

namespace repcause {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Candidate {
  double distance;
  Eigen::Index index;
  bool operator<(const Candidate& other) const {
    return distance < other.distance || (distance == other.distance && index < other.index);
  }
};

// Returns true when row i has a zero-distance partner other than itself.
bool neighbours_of(const RowMajor& z, Eigen::Index i, int k, std::vector<Candidate>& scratch, KnnResult& out) {
  const Eigen::Index n = z.rows();
  const Eigen::Index d = z.cols();
  const double* a = z.row(i).data();
  scratch.clear();
  bool duplicate = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == i) continue;
    const double* b = z.row(j).data();
    double sq = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
      const double diff = a[c] - b[c];
      sq += diff * diff;
    }
    if (sq == 0.0) {
      duplicate = true;
      continue;
    }
    scratch.push_back({std::sqrt(sq), j});
  }
  if (static_cast<Eigen::Index>(scratch.size()) < k) {
    throw NumericsError("row " + std::to_string(i) + " has fewer than k distinct neighbours");
  }
  std::partial_sort(scratch.begin(), scratch.begin() + k, scratch.end());
  for (int c = 0; c < k; ++c) {
    out.distances(i, c) = scratch[static_cast<std::size_t>(c)].distance;
    out.indices(i, c) = scratch[static_cast<std::size_t>(c)].index;
  }
  return duplicate;
}

KnnResult prepare(const Eigen::MatrixXd& z, int k) {
  if (k < 1) throw InvalidSpec("k must be >= 1");
  if (k >= z.rows()) throw InvalidSpec("k must be smaller than the number of points");
  if (!z.allFinite()) throw NumericsError("knn input contains non-finite values");
  KnnResult out;
  out.distances.resize(z.rows(), k);
  out.indices.resize(z.rows(), k);
  return out;
}

void finish(KnnResult& out, const std::vector<char>& dup) {
  out.duplicate_points = std::count(dup.begin(), dup.end(), char{1});
  if (out.duplicate_points > 0) {
    out.warnings.push_back("DuplicateWarning: " + std::to_string(out.duplicate_points) +
                           " points have exact duplicates; zero distances excluded");
  }
}

}  // namespace

KnnResult knn(const Eigen::MatrixXd& z, int k) {
  KnnResult out = prepare(z, k);
  const RowMajor rows = z;
  std::vector<char> dup(static_cast<std::size_t>(z.rows()), 0);
  const int n = static_cast<int>(z.rows());
  constexpr int kBlock = 64;
  parallel_for((n + kBlock - 1) / kBlock, [&](int block) {
    std::vector<Candidate> scratch;
    const int end = std::min(n, (block + 1) * kBlock);
    for (int i = block * kBlock; i < end; ++i) dup[static_cast<std::size_t>(i)] = neighbours_of(rows, i, k, scratch, out);
  });
  finish(out, dup);
  return out;
}

KnnResult knn_serial(const Eigen::MatrixXd& z, int k) {
  KnnResult out = prepare(z, k);
  const RowMajor rows = z;
  std::vector<char> dup(static_cast<std::size_t>(z.rows()), 0);
  std::vector<Candidate> scratch;
  for (Eigen::Index i = 0; i < z.rows(); ++i) dup[static_cast<std::size_t>(i)] = neighbours_of(rows, i, k, scratch, out);
  finish(out, dup);
  return out;
}

}  // namespace repcause
