#include "repcause/learners.hpp"

#include <algorithm>
#include <cmath>

namespace repcause {

const char* to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::ols: return "ols";
    case LearnerKind::lasso: return "lasso";
    case LearnerKind::logistic_l2: return "logistic";
    case LearnerKind::logistic_l1: return "logistic-l1";
    case LearnerKind::mlp_reg: return "mlp";
    case LearnerKind::mlp_clf: return "mlp-clf";
    case LearnerKind::forest_reg: return "forest";
    case LearnerKind::forest_clf: return "forest-clf";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view name) {
  for (auto kind : {LearnerKind::ols, LearnerKind::lasso, LearnerKind::logistic_l2, LearnerKind::logistic_l1,
                    LearnerKind::mlp_reg, LearnerKind::mlp_clf, LearnerKind::forest_reg, LearnerKind::forest_clf}) {
    if (name == to_string(kind)) return kind;
  }
  if (name == "logistic-l2") return LearnerKind::logistic_l2;
  if (name == "rf") return LearnerKind::forest_reg;
  if (name == "rf-clf") return LearnerKind::forest_clf;
  if (name == "nn") return LearnerKind::mlp_reg;
  if (name == "nn-clf") return LearnerKind::mlp_clf;
  throw InvalidSpec("unknown learner '" + std::string(name) + "'");
}

bool is_classifier(LearnerKind kind) {
  return kind == LearnerKind::logistic_l2 || kind == LearnerKind::logistic_l1 || kind == LearnerKind::mlp_clf ||
         kind == LearnerKind::forest_clf;
}

void LearnerSpec::validate() const {
  if (!(l2_lambda >= 0.0)) throw InvalidSpec("l2_lambda must be >= 0");
  if (penalty.lambda && !(*penalty.lambda >= 0.0)) throw InvalidSpec("lambda must be >= 0");
  if (kind == LearnerKind::mlp_reg || kind == LearnerKind::mlp_clf) {
    if (mlp.depth < 1) throw InvalidSpec("mlp depth must be >= 1");
    if (mlp.width < 1) throw InvalidSpec("mlp width must be >= 1");
    if (mlp.epochs < 1) throw InvalidSpec("mlp epochs must be >= 1");
    if (!(mlp.learning_rate > 0.0)) throw InvalidSpec("learning rate must be > 0");
    if (mlp.batch_size < 1) throw InvalidSpec("batch size must be >= 1");
  }
  if (kind == LearnerKind::forest_reg || kind == LearnerKind::forest_clf) {
    if (forest.trees < 1) throw InvalidSpec("forest needs at least one tree");
    if (forest.min_leaf < 1) throw InvalidSpec("min_leaf must be >= 1");
    if (forest.max_depth < 0) throw InvalidSpec("max_depth must be >= 0 (0 = unbounded)");
  }
}

FittedLearner::FittedLearner(LearnerSpec spec, Model model, TrainingDiagnostics diagnostics, Eigen::Index n_features)
    : spec_(std::move(spec)), model_(std::move(model)), diagnostics_(diagnostics), n_features_(n_features) {}

namespace {

Vector sigmoid(const Vector& eta) {
  Vector out(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double v = eta[i];
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return out;
}

Matrix standardize(const Matrix& x, const Vector& mean, const Vector& scale) {
  Matrix out = x.rowwise() - mean.transpose();
  out.array().rowwise() /= scale.transpose().array();
  return out;
}

void column_moments(const Matrix& x, Vector& mean, Vector& scale) {
  mean = x.colwise().mean().transpose();
  scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mean[j]).square().mean();
    scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
}

AdamOptions adam_from(const MlpOptions& mlp, std::uint64_t seed) {
  AdamOptions adam;
  adam.epochs = mlp.epochs;
  adam.learning_rate = mlp.learning_rate;
  adam.batch_size = mlp.batch_size;
  adam.validation_fraction = mlp.validation_fraction;
  adam.patience = mlp.patience;
  adam.seed = seed;
  return adam;
}

}  // namespace

Vector FittedLearner::predict(const Matrix& x) const {
  if (x.cols() != n_features_) {
    throw DimensionError("learner trained on " + std::to_string(n_features_) + " features, got " +
                         std::to_string(x.cols()));
  }
  return std::visit(
      [&](const auto& m) -> Vector {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          Vector eta = (x * m.coef).array() + m.intercept;
          return m.logistic ? sigmoid(eta) : eta;
        } else if constexpr (std::is_same_v<T, NetworkModel>) {
          const Matrix out = m.net.forward(standardize(x, m.x_mean, m.x_scale));
          if (m.classifier) return out.col(0);
          return (out.col(0).array() * m.y_scale + m.y_mean).matrix();
        } else {
          return m.predict(x);
        }
      },
      model_);
}

const LinearModel& FittedLearner::linear() const {
  if (const auto* m = std::get_if<LinearModel>(&model_)) return *m;
  throw InvalidSpec(std::string("learner '") + to_string(spec_.kind) + "' is not linear");
}

FittedLearner fit_mlp(const Matrix& x, const Vector& target, const LearnerSpec& spec) {
  spec.validate();
  if (spec.kind != LearnerKind::mlp_reg && spec.kind != LearnerKind::mlp_clf) {
    throw InvalidSpec("fit_mlp needs an mlp learner spec");
  }
  if (x.rows() != target.size()) throw DimensionError("feature rows and target length differ");
  if (!x.allFinite() || !target.allFinite()) throw NumericsError("non-finite value in learner input");
  const bool classifier = spec.kind == LearnerKind::mlp_clf;

  NetworkModel model;
  model.classifier = classifier;
  column_moments(x, model.x_mean, model.x_scale);
  Matrix y = target;
  if (!classifier) {
    model.y_mean = target.mean();
    const double var = (target.array() - model.y_mean).square().mean();
    // A constant target predicts its mean exactly.
    model.y_scale = var > 1e-24 ? std::sqrt(var) : 0.0;
    y = ((target.array() - model.y_mean) / (model.y_scale > 0.0 ? model.y_scale : 1.0)).matrix();
  }

  std::vector<int> sizes{static_cast<int>(x.cols())};
  std::vector<Activation> acts;
  for (int l = 0; l < spec.mlp.depth; ++l) {
    sizes.push_back(spec.mlp.width);
    acts.push_back(spec.mlp.activation);
  }
  sizes.push_back(1);
  acts.push_back(classifier ? Activation::sigmoid : Activation::identity);
  model.net = Network(sizes, acts, spec.seed);

  const AdamResult run = train_adam(model.net, standardize(x, model.x_mean, model.x_scale), y,
                                    classifier ? Loss::logistic : Loss::squared, adam_from(spec.mlp, spec.seed));
  TrainingDiagnostics diag;
  diag.final_loss = run.final_train_loss;
  diag.iterations = run.epochs_run;
  diag.converged = run.early_stopped;
  return FittedLearner(spec, std::move(model), diag, x.cols());
}

FittedLearner fit_forest(const Matrix& x, const Vector& target, const LearnerSpec& spec) {
  spec.validate();
  if (spec.kind != LearnerKind::forest_reg && spec.kind != LearnerKind::forest_clf) {
    throw InvalidSpec("fit_forest needs a forest learner spec");
  }
  if (!x.allFinite() || !target.allFinite()) throw NumericsError("non-finite value in learner input");
  const auto criterion = spec.kind == LearnerKind::forest_clf ? SplitCriterion::gini : SplitCriterion::variance;
  ForestModel model = grow_forest(x, target, criterion, spec.forest, spec.seed);
  TrainingDiagnostics diag;
  diag.iterations = spec.forest.trees;
  return FittedLearner(spec, std::move(model), diag, x.cols());
}

FittedLearner fit(const LearnerSpec& spec, const Matrix& x, const Vector& target) {
  spec.validate();
  switch (spec.kind) {
    case LearnerKind::ols: return fit_ols(x, target);
    case LearnerKind::lasso: return fit_lasso(x, target, spec.penalty, spec.seed);
    case LearnerKind::logistic_l2: return fit_logistic(x, target, spec.l2_lambda);
    case LearnerKind::logistic_l1: return fit_logistic_l1(x, target, spec.penalty, spec.seed);
    case LearnerKind::mlp_reg:
    case LearnerKind::mlp_clf: return fit_mlp(x, target, spec);
    case LearnerKind::forest_reg:
    case LearnerKind::forest_clf: return fit_forest(x, target, spec);
  }
  throw InvalidSpec("unknown learner kind");
}

// ---------------------------------------------------------------------------

Autoencoder::Autoencoder(Network net, std::size_t bottleneck_layer, Vector x_mean, Vector x_scale,
                         TrainingDiagnostics diagnostics)
    : net_(std::move(net)),
      bottleneck_layer_(bottleneck_layer),
      x_mean_(std::move(x_mean)),
      x_scale_(std::move(x_scale)),
      diagnostics_(diagnostics) {}

int Autoencoder::latent_dim() const { return net_.sizes()[bottleneck_layer_]; }

Matrix Autoencoder::encode(const Matrix& x) const {
  if (x.cols() != x_mean_.size()) throw DimensionError("autoencoder input width mismatch");
  return net_.forward_prefix(standardize(x, x_mean_, x_scale_), bottleneck_layer_);
}

Matrix Autoencoder::decode(const Matrix& codes) const {
  if (codes.cols() != latent_dim()) throw DimensionError("latent code width mismatch");
  Matrix out = net_.forward_suffix(codes, bottleneck_layer_);
  out.array().rowwise() *= x_scale_.transpose().array();
  out.rowwise() += x_mean_.transpose();
  return out;
}

Matrix Autoencoder::reconstruct(const Matrix& x) const { return decode(encode(x)); }

double Autoencoder::reconstruction_mse(const Matrix& x) const {
  return (reconstruct(x) - x).squaredNorm() / static_cast<double>(x.size());
}

Autoencoder fit_autoencoder(const Matrix& x, int latent_dim, const AutoencoderOptions& options) {
  const auto d = static_cast<int>(x.cols());
  if (latent_dim < 1 || latent_dim > d) {
    throw InvalidSpec("latent_dim must lie in [1, d]; got " + std::to_string(latent_dim));
  }
  for (int h : options.hidden) {
    if (h < 1) throw InvalidSpec("autoencoder hidden widths must be >= 1");
  }
  if (!x.allFinite()) throw NumericsError("non-finite value in autoencoder input");

  std::vector<int> sizes{d};
  std::vector<Activation> acts;
  for (int h : options.hidden) {
    sizes.push_back(h);
    acts.push_back(options.activation);
  }
  sizes.push_back(latent_dim);
  acts.push_back(Activation::identity);
  const std::size_t bottleneck = sizes.size() - 1;
  for (auto it = options.hidden.rbegin(); it != options.hidden.rend(); ++it) {
    sizes.push_back(*it);
    acts.push_back(options.activation);
  }
  sizes.push_back(d);
  acts.push_back(Activation::identity);

  Vector mean, scale;
  column_moments(x, mean, scale);
  Network net(sizes, acts, options.seed);
  const Matrix xs = standardize(x, mean, scale);
  AdamOptions adam;
  adam.epochs = options.epochs;
  adam.learning_rate = options.learning_rate;
  adam.batch_size = options.batch_size;
  adam.validation_fraction = options.validation_fraction;
  adam.patience = options.patience;
  adam.seed = options.seed;
  const AdamResult run = train_adam(net, xs, xs, Loss::squared, adam);
  TrainingDiagnostics diag;
  diag.final_loss = run.final_train_loss;
  diag.iterations = run.epochs_run;
  diag.converged = run.early_stopped;
  return Autoencoder(std::move(net), bottleneck, std::move(mean), std::move(scale), diag);
}

}  // namespace repcause
