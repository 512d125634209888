#include "repcause/manifold.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace repcause {

void ManifoldSpec::validate() const {
  if (n < 2) throw InvalidSpec("manifold sample needs n >= 2");
  if (d_manifold < 1 || d_ambient < 1) throw InvalidSpec("dimensions must be >= 1");
  if (identity_map) {
    if (d_manifold != d_ambient) throw InvalidSpec("identity map needs d_manifold == d_ambient");
  } else if (d_manifold >= d_ambient) {
    throw InvalidSpec("d_manifold must be smaller than d_ambient");
  }
  if (!(curvature >= 0.0) || !std::isfinite(curvature)) throw InvalidSpec("curvature must be finite and >= 0");
  if (!(frequency > 0.0) || !std::isfinite(frequency)) throw InvalidSpec("frequency must be finite and > 0");
  if (!(label_sharpness >= 0.0) || !std::isfinite(label_sharpness)) {
    throw InvalidSpec("label_sharpness must be finite and >= 0");
  }
  if (label_sharpness > 0.0 && !identity_map && (label_coordinates < 1 || label_coordinates >= d_ambient)) {
    throw InvalidSpec("label_coordinates must lie in [1, d_ambient)");
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw InvalidSpec("noise_sd must be finite and >= 0");
}

SmoothEmbedding::SmoothEmbedding(const ManifoldSpec& spec)
    : d_ambient_(spec.d_ambient),
      d_manifold_(spec.d_manifold),
      identity_(spec.identity_map),
      curvature_(spec.curvature),
      label_sharpness_(spec.label_sharpness) {
  spec.validate();
  std::mt19937_64 rng(spec.map_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  linear_.resize(d_ambient_, d_manifold_);
  frequency_.resize(d_ambient_, d_manifold_);
  phase_.resize(d_ambient_);
  for (Eigen::Index a = 0; a < d_ambient_; ++a) {
    for (Eigen::Index l = 0; l < d_manifold_; ++l) linear_(a, l) = normal(rng);
    for (Eigen::Index l = 0; l < d_manifold_; ++l) frequency_(a, l) = normal(rng);
    phase_[a] = angle(rng);
  }
  linear_ /= std::sqrt(static_cast<double>(d_manifold_));
  frequency_ *= spec.frequency;
  if (label_sharpness_ > 0.0 && !identity_) {
    label_loading_.resize(spec.label_coordinates);
    for (Eigen::Index a = 0; a < label_loading_.size(); ++a) label_loading_[a] = normal(rng) < 0.0 ? -1.0 : 1.0;
  }
  if (spec.rotate) rotation_ = sample_orthogonal(d_ambient_, spec.map_seed ^ 0x9e3779b97f4a7c15ULL);
}

Matrix SmoothEmbedding::embed(const Matrix& u) const {
  if (u.cols() != d_manifold_) throw DimensionError("latent dimension mismatch");
  Matrix x;
  if (identity_) {
    x = u;
  } else {
    x = u * linear_.transpose();
    const Matrix arg = (u * frequency_.transpose()).rowwise() + phase_.transpose();
    x += curvature_ * arg.array().sin().matrix();
    if (label_loading_.size() > 0) {
      const Vector step = (label_sharpness_ * u.col(0).array()).tanh().matrix();
      x.leftCols(label_loading_.size()) = step * label_loading_.transpose();
    }
  }
  if (rotation_) x = apply(x, *rotation_);
  return x;
}

ManifoldSample sample_manifold(const SmoothEmbedding& embedding, const ManifoldSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.sample_seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  ManifoldSample out;
  out.latent.resize(spec.n, embedding.d_manifold());
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    for (Eigen::Index l = 0; l < embedding.d_manifold(); ++l) out.latent(i, l) = uniform(rng);
  }
  out.z = embedding.embed(out.latent);
  if (spec.noise_sd > 0.0) {
    std::normal_distribution<double> normal(0.0, spec.noise_sd);
    for (Eigen::Index j = 0; j < out.z.cols(); ++j) {
      for (Eigen::Index i = 0; i < out.z.rows(); ++i) out.z(i, j) += normal(rng);
    }
  }
  out.label = (out.latent.col(0).array() > 0.0).cast<double>();
  return out;
}

ManifoldSample gen_synthetic_manifold(const ManifoldSpec& spec) { return sample_manifold(SmoothEmbedding(spec), spec); }

}  // namespace repcause
