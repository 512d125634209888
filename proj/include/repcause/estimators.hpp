#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repcause/data.hpp"
#include "repcause/learners.hpp"

namespace repcause {

inline constexpr double kDefaultClipEps = 0.01;
inline constexpr double kDefaultLevel = 0.95;
// Share of clipped propensities above which an overlap warning is raised.
inline constexpr double kOverlapWarningShare = 0.20;

struct AteReport {
  std::string method;
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = kDefaultLevel;
  std::vector<double> per_fold_estimates;
  Eigen::Index n_used = 0;
  int folds = 0;
  std::vector<std::string> warnings;

  bool covers(double truth) const { return ci_low <= truth && truth <= ci_high; }
  // Rebuilds the normal interval at a different level.
  AteReport at_level(double new_level) const;
};

AteReport naive_ate(const Vector& t, const Vector& y, double level = kDefaultLevel);

// OLS of y on (1, t, label); a constant label column is dropped.
AteReport oracle_ate(const Vector& t, const Vector& y, const Vector& label, double level = kDefaultLevel);

// One learner on [t, z]; contrasts g(1,z) - g(0,z) averaged. The standard
// error ignores nuisance-estimation noise and is anti-conservative.
AteReport s_learner_ate(const RepresentationSet& set, const LearnerSpec& spec, double level = kDefaultLevel);

// Per-unit doubly-robust score. m must lie strictly inside (0,1).
Vector evaluate_score(const Vector& t, const Vector& y, const Vector& g1, const Vector& g0, const Vector& m);

Vector clip_propensity(const Vector& m, double clip_eps, Eigen::Index* clipped = nullptr);

// Out-of-fold nuisance predictions for every row.
struct CrossFitNuisances {
  FoldAssignment folds;
  Vector g0;
  Vector g1;
  Vector m;
};

CrossFitNuisances cross_fit_aipw_nuisances(const RepresentationSet& set, const LearnerSpec& g_spec,
                                           const LearnerSpec& m_spec, const FoldAssignment& folds);

// Aggregates scores from already-fitted nuisances.
AteReport aipw_from_nuisances(const Vector& t, const Vector& y, const Vector& g1, const Vector& g0, const Vector& m,
                              double clip_eps, const FoldAssignment* folds = nullptr, double level = kDefaultLevel);

AteReport dml_aipw_ate(const RepresentationSet& set, const LearnerSpec& g_spec, const LearnerSpec& m_spec, int k,
                       double clip_eps, std::uint64_t seed, double level = kDefaultLevel);

struct CrossFitResiduals {
  FoldAssignment folds;
  Vector y_hat;  // l(z) = E[Y|Z]
  Vector m;      // m(z) = E[T|Z]
};

CrossFitResiduals cross_fit_plr_nuisances(const RepresentationSet& set, const LearnerSpec& l_spec,
                                          const LearnerSpec& m_spec, const FoldAssignment& folds);

// Residual-on-residual slope with the sandwich variance; pools sums over folds.
AteReport partialling_out_from_nuisances(const Vector& t, const Vector& y, const Vector& y_hat, const Vector& m,
                                         const FoldAssignment* folds = nullptr, double level = kDefaultLevel);

AteReport dml_partialling_out_ate(const RepresentationSet& set, const LearnerSpec& l_spec, const LearnerSpec& m_spec,
                                  int k, std::uint64_t seed, double level = kDefaultLevel);

}  // namespace repcause
