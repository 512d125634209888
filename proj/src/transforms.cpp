#include "repcause/transforms.hpp"

#include <cmath>
#include <random>

#include "repcause/parallel.hpp"

namespace repcause {

const char* to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::orthogonal: return "orthogonal";
    case TransformKind::general_invertible: return "general";
    case TransformKind::permutation: return "permutation";
    case TransformKind::diagonal_scaling: return "scaling";
  }
  return "?";
}

LinearTransform::LinearTransform(Matrix q, TransformKind kind, std::uint64_t seed)
    : q_(std::move(q)), kind_(kind), seed_(seed) {
  if (q_.rows() < 1 || q_.rows() != q_.cols()) throw DimensionError("transform must be a non-empty square matrix");
  if (!q_.allFinite()) throw NumericsError("transform contains non-finite entries");
  switch (kind_) {
    case TransformKind::orthogonal: {
      const double err = (q_.transpose() * q_ - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
      if (err > 1e-8) throw DegenerateTransform("matrix is not orthogonal (max error " + std::to_string(err) + ")");
      break;
    }
    case TransformKind::permutation:
      for (Eigen::Index i = 0; i < dim(); ++i) {
        const bool unit = (q_.row(i).array() == 1.0).count() == 1 && (q_.row(i).array() == 0.0).count() == dim() - 1;
        if (!unit) throw DegenerateTransform("permutation rows must be unit basis vectors");
      }
      if ((q_.colwise().sum().array() != 1.0).any()) throw DegenerateTransform("permutation repeats a column");
      break;
    case TransformKind::diagonal_scaling:
      if (!q_.isDiagonal(0.0) || (q_.diagonal().array() == 0.0).any()) {
        throw DegenerateTransform("scaling must be diagonal with non-zero entries");
      }
      break;
    case TransformKind::general_invertible:
      if (!(condition_number() < 1e8)) throw DegenerateTransform("condition number exceeds 1e8");
      break;
  }
}

double LinearTransform::condition_number() const {
  Eigen::JacobiSVD<Matrix> svd(q_);
  const auto& s = svd.singularValues();
  const double smallest = s[s.size() - 1];
  return smallest > 0.0 ? s[0] / smallest : std::numeric_limits<double>::infinity();
}

LinearTransform LinearTransform::inverse() const {
  if (kind_ == TransformKind::orthogonal || kind_ == TransformKind::permutation) {
    return LinearTransform(q_.transpose(), kind_, seed_);
  }
  return LinearTransform(q_.partialPivLu().inverse(), kind_, seed_);
}

LinearTransform LinearTransform::followed_by(const LinearTransform& then) const {
  if (then.dim() != dim()) throw DimensionError("cannot compose transforms of different dimension");
  const TransformKind kind = kind_ == then.kind_ ? kind_ : TransformKind::general_invertible;
  return LinearTransform(then.q_ * q_, kind, then.seed_);
}

namespace {

Matrix gaussian_matrix(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  }
  return g;
}

}  // namespace

LinearTransform sample_orthogonal(Eigen::Index d, std::uint64_t seed) {
  if (d < 1) throw DimensionError("dimension must be >= 1");
  std::mt19937_64 rng(seed);
  const Matrix g = gaussian_matrix(d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Flip column signs so that diag(R) > 0; this makes Q Haar distributed.
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return LinearTransform(std::move(q), TransformKind::orthogonal, seed);
}

LinearTransform sample_invertible(Eigen::Index d, std::uint64_t seed) {
  if (d < 1) throw DimensionError("dimension must be >= 1");
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Matrix g = gaussian_matrix(d, rng);
    Eigen::JacobiSVD<Matrix> svd(g);
    const auto& s = svd.singularValues();
    if (s[s.size() - 1] > 0.0 && s[0] / s[s.size() - 1] < 1e6) {
      return LinearTransform(std::move(g), TransformKind::general_invertible, seed);
    }
  }
  throw DegenerateTransform("no well-conditioned draw within 100 attempts");
}

LinearTransform make_permutation(const std::vector<Eigen::Index>& perm) {
  const auto d = static_cast<Eigen::Index>(perm.size());
  Matrix q = Matrix::Zero(d, d);
  // Row i picks input coordinate perm[i].
  for (Eigen::Index i = 0; i < d; ++i) {
    if (perm[static_cast<std::size_t>(i)] < 0 || perm[static_cast<std::size_t>(i)] >= d) {
      throw DegenerateTransform("permutation index out of range");
    }
    q(i, perm[static_cast<std::size_t>(i)]) = 1.0;
  }
  return LinearTransform(std::move(q), TransformKind::permutation, 0);
}

LinearTransform make_scaling(const Vector& diagonal) {
  return LinearTransform(diagonal.asDiagonal().toDenseMatrix(), TransformKind::diagonal_scaling, 0);
}

Matrix apply(const Matrix& z, const LinearTransform& q) {
  if (z.cols() != q.dim()) {
    throw DimensionError("transform is " + std::to_string(q.dim()) + "-dimensional, data has " +
                         std::to_string(z.cols()) + " columns");
  }
  return z * q.q().transpose();
}

RepresentationSet apply(const RepresentationSet& set, const LinearTransform& q) { return set.with_z(apply(set.z(), q)); }

int count_nonzero(const Vector& coef, double threshold) {
  return static_cast<int>((coef.array().abs() > threshold).count());
}

namespace {

// Composite rotation after r steps: O_r * ... * O_1, with O_i drawn from seed + i.
Matrix composite_rotation(Eigen::Index d, int r, std::uint64_t seed) {
  Matrix q = Matrix::Identity(d, d);
  for (int i = 1; i <= r; ++i) q = sample_orthogonal(d, seed + static_cast<std::uint64_t>(i)).q() * q;
  return q;
}

SparsityPoint curve_point(const RepresentationSet& set, int r, const PenaltyOptions& penalty, std::uint64_t seed) {
  const Matrix q = composite_rotation(set.d(), r, seed);
  const Matrix rotated = set.z() * q.transpose();
  const FittedLearner fit = fit_lasso(rotated, set.y(), penalty, seed);
  return SparsityPoint{r, count_nonzero(fit.linear().coef)};
}

void check_curve_args(const RepresentationSet& set, int n_rotations) {
  if (n_rotations < 0) throw InvalidSpec("n_rotations must be >= 0");
  set.y();
}

}  // namespace

std::vector<SparsityPoint> sparsity_rotation_curve(const RepresentationSet& set, int n_rotations,
                                                   const PenaltyOptions& penalty, std::uint64_t seed) {
  check_curve_args(set, n_rotations);
  std::vector<SparsityPoint> curve(static_cast<std::size_t>(n_rotations) + 1);
  parallel_for(n_rotations + 1,
               [&](int r) { curve[static_cast<std::size_t>(r)] = curve_point(set, r, penalty, seed); });
  return curve;
}

std::vector<SparsityPoint> sparsity_rotation_curve_serial(const RepresentationSet& set, int n_rotations,
                                                          const PenaltyOptions& penalty, std::uint64_t seed) {
  check_curve_args(set, n_rotations);
  std::vector<SparsityPoint> curve;
  for (int r = 0; r <= n_rotations; ++r) curve.push_back(curve_point(set, r, penalty, seed));
  return curve;
}

}  // namespace repcause
