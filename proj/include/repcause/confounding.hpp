#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "repcause/data.hpp"
#include "repcause/learners.hpp"

namespace repcause {

enum class ConfoundingKind { label, complex, hcm_product };

const char* to_string(ConfoundingKind kind);
ConfoundingKind parse_confounding_kind(const std::string& name);

struct ConfoundingSpec {
  ConfoundingKind kind = ConfoundingKind::label;
  double true_ate = 2.0;
  double p_treat_high = 0.7;
  double p_treat_low = 0.3;
  double outcome_noise_sd = 1.0;
  double label_coef = 3.0;             // y carries -label_coef * label
  std::uint64_t coefficient_seed = 0;
  int latent_dim = 5;
  bool zero_outcome_coef = false;      // complex: b = 0
  double product_sharpness = 50.0;     // c in tanh(c * z_j)
  double product_strength = 1.0;       // outcome loading on the product

  void validate() const;
};

// A simulated dataset with the nuisance functions that generated it.
struct SimulatedData {
  RepresentationSet set;
  double true_ate = 2.0;
  Vector true_m;
  Vector true_g0;
  Vector true_g1;
  Vector propensity_coef;  // complex only
  Vector outcome_coef;     // complex only
  std::vector<std::string> warnings;
};

// t ~ Bernoulli(p_high if label else p_low); y = ate * t - c * label + noise.
SimulatedData gen_label_confounding(const Matrix& z, const std::optional<Vector>& label, const ConfoundingSpec& spec,
                                    std::uint64_t seed);

// Autoencoder-based confounding. The encoder and the coefficients are fixed
// at construction; generate() draws treatment and outcome for any reps.
class ComplexConfounder {
 public:
  ComplexConfounder(const Matrix& base_reps, const ConfoundingSpec& spec, const AutoencoderOptions& ae_options);

  // Standardized encodings e(z).
  Matrix encodings(const Matrix& reps) const;
  Vector propensity(const Matrix& reps) const;
  SimulatedData generate(const Matrix& reps, std::uint64_t seed) const;

  const Autoencoder& autoencoder() const { return ae_; }
  const Vector& propensity_coef() const { return a_; }
  const Vector& outcome_coef() const { return b_; }
  double reconstruction_share() const { return reconstruction_share_; }

 private:
  ConfoundingSpec spec_;
  Autoencoder ae_;
  Vector code_mean_;
  Vector code_scale_;
  Vector a_;
  Vector b_;
  double reconstruction_share_ = 0.0;  // reconstruction MSE / input variance
};

// Trains the autoencoder on reps, then generates from the same reps.
SimulatedData gen_complex_confounding(const Matrix& reps, const ConfoundingSpec& spec, std::uint64_t seed,
                                      const AutoencoderOptions& ae_options = {});

// s = prod_j tanh(c * z_j) on column-standardized reps; m = 0.5 + 0.4 s;
// y = ate * t + strength * s + noise.
SimulatedData gen_hcm_product_confounding(const Matrix& reps, const ConfoundingSpec& spec, std::uint64_t seed);
Vector product_signal(const Matrix& reps, double sharpness);

}  // namespace repcause
