#include <doctest.h>

#include "repcause/parallel.hpp"
#include "repcause/transforms.hpp"
#include "test_util.hpp"

using namespace repcause;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// y = 3 z0 - 2 z1 + 1.5 z2 + N(0, 0.1^2), z standard Gaussian.
RepresentationSet three_sparse(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  const Matrix z = test::gaussian(n, d, seed);
  const Vector noise = test::gaussian(n, 1, seed + 1000).col(0) * 0.1;
  const Vector y = 3.0 * z.col(0) - 2.0 * z.col(1) + 1.5 * z.col(2) + noise;
  return RepresentationSet(z, std::nullopt, y);
}

}  // namespace

TEST_CASE("sample_orthogonal") {
  const LinearTransform q1 = sample_orthogonal(1, 3);
  CHECK(std::abs(q1.q()(0, 0)) == 1.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix q = sample_orthogonal(8, seed).q();
    CHECK(max_abs(q.transpose() * q - Matrix::Identity(8, 8)) <= 1e-8);
  }
  const Matrix q3 = sample_orthogonal(3, 42).q();
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(q3.col(j).norm() - 1.0) <= 1e-10);
  CHECK(sample_orthogonal(6, 9).q() == sample_orthogonal(6, 9).q());
  CHECK(sample_orthogonal(6, 9).q() != sample_orthogonal(6, 10).q());
  CHECK_THROWS_AS(sample_orthogonal(0, 1), DimensionError);
}

TEST_CASE("Haar sampling is not biased toward a sign") {
  // Under Haar measure E[Q_00] = 0 and E[Q_00^2] = 1/d.
  const int draws = 4000;
  const int d = 4;
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < draws; ++s) {
    const double v = sample_orthogonal(d, static_cast<std::uint64_t>(s)).q()(0, 0);
    sum += v;
    sum_sq += v * v;
  }
  CHECK(std::abs(sum / draws) < 4.0 * std::sqrt(1.0 / d / draws));
  CHECK(std::abs(sum_sq / draws - 1.0 / d) < 0.02);
}

TEST_CASE("sample_invertible") {
  const LinearTransform q1 = sample_invertible(1, 7);
  CHECK(q1.q()(0, 0) != 0.0);
  const LinearTransform q5 = sample_invertible(5, 11);
  CHECK(std::abs(q5.q().partialPivLu().determinant()) > 1e-12);
  const Matrix z = test::gaussian(30, 5, 2);
  const Matrix back = apply(apply(z, q5), q5.inverse());
  CHECK(max_abs(back - z) <= 1e-8 * max_abs(z));
}

TEST_CASE("transform validation") {
  Matrix not_orth = Matrix::Identity(3, 3);
  not_orth(0, 1) = 0.1;
  CHECK_THROWS_AS(LinearTransform(not_orth, TransformKind::orthogonal, 0), DegenerateTransform);
  CHECK_THROWS_AS(LinearTransform(Matrix::Zero(2, 2), TransformKind::general_invertible, 0), DegenerateTransform);
  CHECK_THROWS_AS(LinearTransform(Matrix::Zero(2, 3), TransformKind::general_invertible, 0), DimensionError);
  CHECK_THROWS_AS(make_permutation({0, 0}), DegenerateTransform);
  Vector diag(2);
  diag << 2.0, 0.0;
  CHECK_THROWS_AS(make_scaling(diag), DegenerateTransform);
  diag << 2.0, -0.5;
  const LinearTransform s = make_scaling(diag);
  CHECK(s.inverse().q()(0, 0) == 0.5);
  CHECK(sample_orthogonal(4, 1).followed_by(sample_orthogonal(4, 2)).kind() == TransformKind::orthogonal);
}

TEST_CASE("apply") {
  const Matrix z = test::gaussian(20, 4, 1);
  Vector t = Vector::Zero(20);
  t.tail(10).setOnes();
  const Vector y = test::gaussian(20, 1, 2).col(0);
  const RepresentationSet set(z, t, y, t);

  const RepresentationSet same = apply(set, LinearTransform(Matrix::Identity(4, 4), TransformKind::orthogonal, 0));
  CHECK(same == set);

  const RepresentationSet swapped = apply(set, make_permutation({1, 0, 2, 3}));
  CHECK(swapped.z().col(0) == z.col(1));
  CHECK(swapped.z().col(1) == z.col(0));
  CHECK(swapped.z().col(2) == z.col(2));
  CHECK(swapped.t() == set.t());
  CHECK(swapped.y() == set.y());
  CHECK(swapped.label() == set.label());

  const LinearTransform q = sample_orthogonal(4, 5);
  const Matrix rotated = apply(z, q);
  CHECK(max_abs(rotated.row(3).transpose() - q.q() * z.row(3).transpose()) < 1e-12);
  for (Eigen::Index i = 0; i < 20; ++i) {
    for (Eigen::Index j = i + 1; j < 20; ++j) {
      const double raw = (z.row(i) - z.row(j)).norm();
      const double rot = (rotated.row(i) - rotated.row(j)).norm();
      CHECK(std::abs(rot - raw) <= 1e-8 * raw);
    }
  }
  CHECK_THROWS_AS(apply(set, sample_orthogonal(3, 1)), DimensionError);
}

TEST_CASE("OLS predictions are invariant under invertible transforms") {
  const Matrix z = test::gaussian(80, 6, 3);
  const Vector y = test::gaussian(80, 1, 4).col(0) + z.col(2);
  const Vector raw = fit_ols(z, y).predict(z);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Matrix qz = apply(z, sample_invertible(6, seed));
    const Vector moved = fit_ols(qz, y).predict(qz);
    CHECK(max_abs(moved - raw) <= 1e-6 * max_abs(raw));
  }
}

TEST_CASE("lasso support is not rotation invariant") {
  const RepresentationSet set = three_sparse(300, 20, 8);
  PenaltyOptions penalty;
  penalty.lambda = 0.1;
  const Vector raw = fit_lasso(set.z(), set.y(), penalty, 0).linear().coef;
  const Matrix rotated = apply(set.z(), sample_orthogonal(20, 77));
  const Vector rot = fit_lasso(rotated, set.y(), penalty, 0).linear().coef;
  CHECK(count_nonzero(raw) <= 5);
  CHECK(count_nonzero(rot) > count_nonzero(raw));
}

TEST_CASE("sparsity_rotation_curve on the 3-sparse generator") {
  const RepresentationSet set = three_sparse(500, 50, 21);
  PenaltyOptions penalty;
  const auto curve = sparsity_rotation_curve(set, 5, penalty, 3);
  REQUIRE(curve.size() == 6);
  for (int r = 0; r <= 5; ++r) CHECK(curve[static_cast<std::size_t>(r)].rotations == r);
  CHECK(curve[0].nonzero <= 10);
  CHECK(curve[0].nonzero >= 3);
  const auto again = sparsity_rotation_curve(set, 0, penalty, 3);
  CHECK(again[0].nonzero == curve[0].nonzero);
  CHECK(curve[5].nonzero > curve[0].nonzero);
  CHECK_THROWS_AS(sparsity_rotation_curve(set, -1, penalty, 3), InvalidSpec);
}

TEST_CASE("sparsity curve: parallel equals serial") {
  const RepresentationSet set = three_sparse(200, 15, 2);
  PenaltyOptions penalty;
  const auto serial = sparsity_rotation_curve_serial(set, 4, penalty, 9);
  ScopedThreads threads(3);
  const auto parallel = sparsity_rotation_curve(set, 4, penalty, 9);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].nonzero == parallel[i].nonzero);
}

TEST_CASE("mean nonzero count grows with rotations over seeds") {
  const int seeds = 20;
  double at0 = 0.0, at5 = 0.0;
  PenaltyOptions penalty;
  penalty.grid_size = 20;
  for (int s = 0; s < seeds; ++s) {
    const RepresentationSet set = three_sparse(500, 50, 100 + static_cast<std::uint64_t>(s));
    const auto curve = sparsity_rotation_curve(set, 5, penalty, 500 + static_cast<std::uint64_t>(s));
    at0 += curve.front().nonzero;
    at5 += curve.back().nonzero;
  }
  CHECK(at5 / seeds >= at0 / seeds);
}
