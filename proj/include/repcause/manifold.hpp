#pragma once

#include <cstdint>
#include <optional>

#include "repcause/data.hpp"
#include "repcause/transforms.hpp"

namespace repcause {

struct ManifoldSpec {
  Eigen::Index n = 2000;
  Eigen::Index d_ambient = 64;
  Eigen::Index d_manifold = 3;
  std::uint64_t map_seed = 0;     // fixes the embedding (and rotation)
  std::uint64_t sample_seed = 0;  // fixes the latent draws
  bool rotate = false;
  bool identity_map = false;      // requires d_manifold == d_ambient
  double curvature = 0.5;         // amplitude of the sine features
  double frequency = 1.0;         // scale of the sine frequencies
  // When > 0, the first label_coordinates ambient coordinates are replaced
  // by +-tanh(label_sharpness * u_1), so the label 1{u_1 > 0} is nearly
  // linear in z and sparse in the raw coordinates.
  double label_sharpness = 0.0;
  Eigen::Index label_coordinates = 1;
  double noise_sd = 0.0;          // isotropic ambient noise

  void validate() const;
};

// Smooth map u in [-1,1]^{d_M} -> R^d. Coordinate a is
// w_a.u / sqrt(d_M) + curvature * sin(frequency * v_a.u + phi_a), except the
// optional label coordinates, then an optional Haar rotation.
class SmoothEmbedding {
 public:
  explicit SmoothEmbedding(const ManifoldSpec& spec);

  Matrix embed(const Matrix& u) const;
  Eigen::Index d_ambient() const { return d_ambient_; }
  Eigen::Index d_manifold() const { return d_manifold_; }
  const std::optional<LinearTransform>& rotation() const { return rotation_; }

 private:
  Eigen::Index d_ambient_;
  Eigen::Index d_manifold_;
  bool identity_;
  double curvature_;
  Matrix linear_;     // d x d_M
  Matrix frequency_;  // d x d_M
  Vector phase_;
  Vector label_loading_;  // empty when the label feature is off
  double label_sharpness_;
  std::optional<LinearTransform> rotation_;
};

struct ManifoldSample {
  Matrix z;       // n x d_ambient
  Matrix latent;  // n x d_manifold, uniform on [-1,1]
  Vector label;   // 1{u_1 > 0}
};

ManifoldSample gen_synthetic_manifold(const ManifoldSpec& spec);
// Draws with a prebuilt embedding; spec supplies n, sample_seed and noise.
ManifoldSample sample_manifold(const SmoothEmbedding& embedding, const ManifoldSpec& spec);

}  // namespace repcause
