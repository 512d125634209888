#include "repcause/confounding.hpp"

#include <cmath>
#include <random>

namespace repcause {

const char* to_string(ConfoundingKind kind) {
  switch (kind) {
    case ConfoundingKind::label: return "label";
    case ConfoundingKind::complex: return "complex";
    case ConfoundingKind::hcm_product: return "product";
  }
  return "?";
}

ConfoundingKind parse_confounding_kind(const std::string& name) {
  if (name == "label") return ConfoundingKind::label;
  if (name == "complex") return ConfoundingKind::complex;
  if (name == "product" || name == "hcm_product") return ConfoundingKind::hcm_product;
  throw InvalidSpec("unknown confounding kind '" + name + "'");
}

void ConfoundingSpec::validate() const {
  if (!(0.0 < p_treat_low && p_treat_low <= p_treat_high && p_treat_high < 1.0)) {
    throw InvalidSpec("need 0 < p_treat_low <= p_treat_high < 1");
  }
  if (!(outcome_noise_sd > 0.0)) throw InvalidSpec("outcome_noise_sd must be > 0");
  if (latent_dim < 1) throw InvalidSpec("latent_dim must be >= 1");
  if (!std::isfinite(true_ate) || !std::isfinite(label_coef)) throw InvalidSpec("coefficients must be finite");
  if (!(product_sharpness > 0.0)) throw InvalidSpec("product_sharpness must be > 0");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Draws t ~ Bernoulli(m) and y = g_t + noise, in row order.
SimulatedData draw_outcomes(const Matrix& z, Vector m, Vector g0, Vector g1, const ConfoundingSpec& spec,
                            std::uint64_t seed, std::optional<Vector> label = std::nullopt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, spec.outcome_noise_sd);
  const Eigen::Index n = z.rows();
  Vector t(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t[i] = uniform(rng) < m[i] ? 1.0 : 0.0;
    y[i] = (t[i] == 1.0 ? g1[i] : g0[i]) + noise(rng);
  }
  SimulatedData out{RepresentationSet::with_outcomes(z, std::move(t), std::move(y), std::move(label)),
                    spec.true_ate, std::move(m), std::move(g0), std::move(g1), {}, {}, {}};
  return out;
}

}  // namespace

SimulatedData gen_label_confounding(const Matrix& z, const std::optional<Vector>& label, const ConfoundingSpec& spec,
                                    std::uint64_t seed) {
  spec.validate();
  if (!label) throw MissingLabel("label confounding needs ground-truth labels");
  if (label->size() != z.rows()) throw DimensionError("label length differs from z rows");
  const Vector& l = *label;
  const Vector m = (l.array() == 1.0).select(Vector::Constant(l.size(), spec.p_treat_high),
                                            Vector::Constant(l.size(), spec.p_treat_low));
  const Vector g0 = -spec.label_coef * l;
  const Vector g1 = g0.array() + spec.true_ate;
  return draw_outcomes(z, m, g0, g1, spec, seed, l);
}

ComplexConfounder::ComplexConfounder(const Matrix& base_reps, const ConfoundingSpec& spec,
                                     const AutoencoderOptions& ae_options)
    : spec_(spec), ae_(fit_autoencoder(base_reps, spec.latent_dim, ae_options)) {
  spec_.validate();
  const Matrix codes = ae_.encode(base_reps);
  code_mean_ = codes.colwise().mean().transpose();
  const Matrix centred = codes.rowwise() - code_mean_.transpose();
  code_scale_ = (centred.colwise().squaredNorm() / static_cast<double>(codes.rows())).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < code_scale_.size(); ++j) {
    if (!(code_scale_[j] > 0.0)) code_scale_[j] = 1.0;
  }

  std::mt19937_64 rng(spec_.coefficient_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  a_.resize(spec_.latent_dim);
  b_.resize(spec_.latent_dim);
  for (Eigen::Index j = 0; j < a_.size(); ++j) a_[j] = normal(rng);
  for (Eigen::Index j = 0; j < b_.size(); ++j) b_[j] = -std::abs(normal(rng));
  if (spec_.zero_outcome_coef) b_.setZero();

  const Matrix centred_reps = base_reps.rowwise() - base_reps.colwise().mean();
  const double variance = centred_reps.squaredNorm() / static_cast<double>(base_reps.size());
  reconstruction_share_ = variance > 0.0 ? ae_.reconstruction_mse(base_reps) / variance : 0.0;
}

Matrix ComplexConfounder::encodings(const Matrix& reps) const {
  const Matrix codes = ae_.encode(reps);
  return (codes.rowwise() - code_mean_.transpose()).array().rowwise() / code_scale_.transpose().array();
}

Vector ComplexConfounder::propensity(const Matrix& reps) const {
  return (encodings(reps) * a_).unaryExpr([](double v) { return sigmoid(v); });
}

SimulatedData ComplexConfounder::generate(const Matrix& reps, std::uint64_t seed) const {
  const Matrix e = encodings(reps);
  const Vector m = (e * a_).unaryExpr([](double v) { return sigmoid(v); });
  const Vector g0 = e * b_;
  const Vector g1 = g0.array() + spec_.true_ate;
  SimulatedData out = draw_outcomes(reps, m, g0, g1, spec_, seed);
  out.propensity_coef = a_;
  out.outcome_coef = b_;
  if (reconstruction_share_ > 0.5) {
    out.warnings.push_back("PoorEncodingWarning: reconstruction error is " +
                           std::to_string(100.0 * reconstruction_share_) + "% of input variance");
  }
  return out;
}

SimulatedData gen_complex_confounding(const Matrix& reps, const ConfoundingSpec& spec, std::uint64_t seed,
                                      const AutoencoderOptions& ae_options) {
  const ComplexConfounder confounder(reps, spec, ae_options);
  return confounder.generate(reps, seed);
}

Vector product_signal(const Matrix& reps, double sharpness) {
  const Eigen::Index n = reps.rows();
  Vector s = Vector::Ones(n);
  for (Eigen::Index j = 0; j < reps.cols(); ++j) {
    const auto col = reps.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n));
    const double scale = sd > 0.0 ? sd : 1.0;
    for (Eigen::Index i = 0; i < n; ++i) s[i] *= std::tanh(sharpness * (col[i] - mean) / scale);
  }
  return s;
}

SimulatedData gen_hcm_product_confounding(const Matrix& reps, const ConfoundingSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (reps.cols() < 1) throw DimensionError("product confounding needs at least one feature");
  const Vector s = product_signal(reps, spec.product_sharpness);
  const Vector m = (0.5 + 0.4 * s.array()).matrix();
  const Vector g0 = spec.product_strength * s;
  const Vector g1 = g0.array() + spec.true_ate;
  return draw_outcomes(reps, m, g0, g1, spec, seed);
}

}  // namespace repcause
