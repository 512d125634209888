#pragma once

#include <cstdint>
#include <vector>

#include "repcause/data.hpp"
#include "repcause/learners.hpp"

namespace repcause {

enum class TransformKind { orthogonal, general_invertible, permutation, diagonal_scaling };

const char* to_string(TransformKind kind);

// Invertible d x d map acting on representation rows: z' = Q z.
class LinearTransform {
 public:
  LinearTransform(Matrix q, TransformKind kind, std::uint64_t seed);

  const Matrix& q() const { return q_; }
  TransformKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  Eigen::Index dim() const { return q_.rows(); }

  LinearTransform inverse() const;
  // Applied as `then` after this one: Q = then.q * this.q.
  LinearTransform followed_by(const LinearTransform& then) const;
  double condition_number() const;

 private:
  Matrix q_;
  TransformKind kind_;
  std::uint64_t seed_;
};

// Haar orthogonal: QR of a Gaussian matrix with R_ii > 0.
LinearTransform sample_orthogonal(Eigen::Index d, std::uint64_t seed);
// Gaussian matrix, redrawn until its condition number is below 1e6.
LinearTransform sample_invertible(Eigen::Index d, std::uint64_t seed);
LinearTransform make_permutation(const std::vector<Eigen::Index>& perm);
LinearTransform make_scaling(const Vector& diagonal);

Matrix apply(const Matrix& z, const LinearTransform& q);
RepresentationSet apply(const RepresentationSet& set, const LinearTransform& q);

struct SparsityPoint {
  int rotations = 0;
  int nonzero = 0;
};

inline constexpr double kNonzeroThreshold = 1e-8;

int count_nonzero(const Vector& coef, double threshold = kNonzeroThreshold);

// For r = 0..n_rotations, rotates z by r composed Haar rotations
// (rotation r drawn with seed + r) and records the lasso support size on
// the regression target y.
std::vector<SparsityPoint> sparsity_rotation_curve(const RepresentationSet& set, int n_rotations,
                                                   const PenaltyOptions& penalty, std::uint64_t seed);
std::vector<SparsityPoint> sparsity_rotation_curve_serial(const RepresentationSet& set, int n_rotations,
                                                          const PenaltyOptions& penalty, std::uint64_t seed);

}  // namespace repcause
