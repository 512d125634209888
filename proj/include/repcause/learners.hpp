#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "repcause/data.hpp"
#include "repcause/forest.hpp"
#include "repcause/network.hpp"

namespace repcause {

enum class LearnerKind { ols, lasso, logistic_l2, logistic_l1, mlp_reg, mlp_clf, forest_reg, forest_clf };

const char* to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view name);
bool is_classifier(LearnerKind kind);

// L1 penalty: a fixed lambda, or cross-validation over a grid. An empty
// grid with no fixed lambda selects the default log-spaced path.
struct PenaltyOptions {
  std::optional<double> lambda;
  std::vector<double> lambda_grid;
  bool explicit_grid = false;  // true: lambda_grid must be non-empty
  int grid_size = 50;
  double grid_ratio = 1e-4;
  int cv_folds = 5;
};

struct MlpOptions {
  int depth = 4;
  int width = 50;
  Activation activation = Activation::relu;
  int epochs = 200;
  double learning_rate = 1e-3;
  int batch_size = 32;
  double validation_fraction = 0.1;
  int patience = 10;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::ols;
  double l2_lambda = 0.0;
  PenaltyOptions penalty;
  MlpOptions mlp;
  ForestOptions forest;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LinearModel {
  double intercept = 0.0;
  Vector coef;
  bool logistic = false;
};

// Network on standardized inputs; regression targets are standardized too.
struct NetworkModel {
  Network net;
  Vector x_mean;
  Vector x_scale;
  double y_mean = 0.0;
  double y_scale = 1.0;
  bool classifier = false;
};

struct TrainingDiagnostics {
  double final_loss = 0.0;
  int iterations = 0;
  bool converged = true;
  std::optional<double> selected_lambda;
};

class FittedLearner {
 public:
  using Model = std::variant<LinearModel, NetworkModel, ForestModel>;

  FittedLearner(LearnerSpec spec, Model model, TrainingDiagnostics diagnostics, Eigen::Index n_features);

  const LearnerSpec& spec() const { return spec_; }
  const Model& model() const { return model_; }
  const TrainingDiagnostics& diagnostics() const { return diagnostics_; }
  Eigen::Index n_features() const { return n_features_; }
  bool classifier() const { return is_classifier(spec_.kind); }

  // Regression values, or probabilities in [0,1] for classifiers.
  Vector predict(const Matrix& x) const;

  // Only for linear learners.
  const LinearModel& linear() const;

 private:
  LearnerSpec spec_;
  Model model_;
  TrainingDiagnostics diagnostics_;
  Eigen::Index n_features_;
};

FittedLearner fit_ols(const Matrix& x, const Vector& y);
FittedLearner fit_lasso(const Matrix& x, const Vector& y, const PenaltyOptions& penalty, std::uint64_t seed);
FittedLearner fit_logistic(const Matrix& x, const Vector& t, double l2_lambda);
FittedLearner fit_logistic_l1(const Matrix& x, const Vector& t, const PenaltyOptions& penalty, std::uint64_t seed);
FittedLearner fit_mlp(const Matrix& x, const Vector& target, const LearnerSpec& spec);
FittedLearner fit_forest(const Matrix& x, const Vector& target, const LearnerSpec& spec);

// Dispatches on spec.kind.
FittedLearner fit(const LearnerSpec& spec, const Matrix& x, const Vector& target);

// Default path: grid_size points log-spaced from lambda_max down to
// grid_ratio * lambda_max, with lambda_max on the standardized scale.
std::vector<double> lambda_path(double lambda_max, int grid_size, double grid_ratio);
double lasso_lambda_max(const Matrix& x, const Vector& y);

struct AutoencoderOptions {
  std::vector<int> hidden{256, 64};
  Activation activation = Activation::relu;
  int epochs = 200;
  double learning_rate = 1e-3;
  int batch_size = 32;
  double validation_fraction = 0.1;
  int patience = 10;
  std::uint64_t seed = 0;
};

// Symmetric encoder/decoder with a linear bottleneck and linear output.
class Autoencoder {
 public:
  Autoencoder(Network net, std::size_t bottleneck_layer, Vector x_mean, Vector x_scale,
              TrainingDiagnostics diagnostics);

  int latent_dim() const;
  Matrix encode(const Matrix& x) const;
  Matrix decode(const Matrix& codes) const;
  Matrix reconstruct(const Matrix& x) const;
  // Mean squared reconstruction error per entry, original scale.
  double reconstruction_mse(const Matrix& x) const;
  const TrainingDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  Network net_;
  std::size_t bottleneck_layer_;
  Vector x_mean_;
  Vector x_scale_;
  TrainingDiagnostics diagnostics_;
};

Autoencoder fit_autoencoder(const Matrix& x, int latent_dim, const AutoencoderOptions& options);

}  // namespace repcause
