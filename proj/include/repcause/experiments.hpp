#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "repcause/confounding.hpp"
#include "repcause/estimators.hpp"
#include "repcause/hcm.hpp"
#include "repcause/manifold.hpp"
#include "repcause/stats.hpp"

namespace repcause {

enum class EstimatorKind { naive, oracle, s_learner, dml_aipw, dml_plr };

struct EstimatorConfig {
  std::string name;
  EstimatorKind kind = EstimatorKind::naive;
  LearnerSpec g;  // outcome model (or S-learner model, or l for partialling-out)
  LearnerSpec m;  // propensity model
  int folds = kDefaultFolds;
  double clip_eps = kDefaultClipEps;
  double level = kDefaultLevel;
};

// Parses "naive", "oracle", "s-learner:<g>", "dml-aipw:<g>:<m>" or
// "dml-plr:<l>:<m>" with learner names as accepted by parse_learner_kind.
EstimatorConfig parse_estimator(const std::string& text);

AteReport run_estimator(const EstimatorConfig& config, const SimulatedData& data, std::uint64_t seed);

// Builds the dataset for one repetition from its derived seed. Must be
// safe to call concurrently.
using Generator = std::function<SimulatedData(std::uint64_t seed)>;

// Fresh manifold draws per repetition under one fixed embedding.
Generator label_generator(const ManifoldSpec& manifold, const ConfoundingSpec& confounding);
// Trains the autoencoder once on a base pool of base_n draws, then encodes
// fresh draws per repetition.
Generator complex_generator(const ManifoldSpec& manifold, const ConfoundingSpec& confounding,
                            const AutoencoderOptions& autoencoder, Eigen::Index base_n);
// Standard Gaussian representations of shape n x d.
Generator product_generator(Eigen::Index n, Eigen::Index d, const ConfoundingSpec& confounding);

struct RepetitionRow {
  int rep = 0;
  std::string estimator;
  AteReport report;
  double truth = 0.0;
  bool covered = false;
};

struct EstimatorSummary {
  std::string estimator;
  int reps = 0;
  double mean_estimate = 0.0;
  double mean_bias = 0.0;
  double bias_mc_se = 0.0;  // sd of estimates / sqrt(reps)
  double coverage = 0.0;
  double mean_ci_width = 0.0;
  double mean_std_error = 0.0;
};

struct CoverageResult {
  std::vector<RepetitionRow> rows;  // sorted by (rep, estimator order)
  std::vector<EstimatorSummary> summaries;
};

// Repetition r uses seed + r for both data and estimator randomness.
CoverageResult run_coverage_experiment(const Generator& generator, const std::vector<EstimatorConfig>& estimators,
                                       int reps, std::uint64_t seed);
CoverageResult run_coverage_experiment_serial(const Generator& generator,
                                              const std::vector<EstimatorConfig>& estimators, int reps,
                                              std::uint64_t seed);

struct NormalityResult {
  std::vector<double> standardized;  // (estimate - truth) / std_error
  stats::KsResult ks;
};

NormalityResult run_normality_experiment(const Generator& generator, const EstimatorConfig& estimator, int reps,
                                         std::uint64_t seed);

struct RateConfig {
  HcmSpec hcm;
  int d_manifold = 2;
  std::vector<Eigen::Index> ambient_dims{10, 100};
  std::vector<Eigen::Index> n_grid{500, 1000, 2000, 4000};
  LearnerSpec mlp;  // must be an MLP regressor
  double noise_sd = 0.1;
  Eigen::Index test_n = 10000;
  int reps = 1;  // test MSE is averaged over repetitions
  double curvature = 0.5;
};

struct RatePoint {
  Eigen::Index d = 0;
  Eigen::Index n = 0;
  double test_mse = 0.0;
};

struct RateSlope {
  Eigen::Index d = 0;
  double slope = 0.0;  // of log MSE against log n
};

struct RateResult {
  std::vector<RatePoint> points;  // sorted by (d, n)
  std::vector<RateSlope> slopes;
  std::pair<double, int> worst_case_pair;
};

RateResult run_rate_experiment(const RateConfig& config, std::uint64_t seed);

}  // namespace repcause
