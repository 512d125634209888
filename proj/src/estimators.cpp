#include "repcause/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "repcause/parallel.hpp"
#include "repcause/stats.hpp"

namespace repcause {

namespace {

std::span<const double> span_of(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void finish_interval(AteReport& report) {
  const double z = stats::normal_critical(report.level);
  report.ci_low = report.estimate - z * report.std_error;
  report.ci_high = report.estimate + z * report.std_error;
  if (!(report.std_error > 0.0)) report.warnings.emplace_back("degenerate: zero standard error");
}

void check_aligned(const Vector& t, const Vector& y) {
  if (t.size() != y.size()) throw DimensionError("t and y lengths differ");
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (t[i] != 0.0 && t[i] != 1.0) throw ValidationError("treatment entries must be 0 or 1");
  }
}

std::uint64_t fold_seed(std::uint64_t base, int fold, int role) {
  return base + 1000003ULL * static_cast<std::uint64_t>(fold) + static_cast<std::uint64_t>(role);
}

void check_folds(const FoldAssignment& folds, Eigen::Index n) {
  if (static_cast<Eigen::Index>(folds.assignment.size()) != n) throw DimensionError("fold assignment length mismatch");
}

void check_arm_sizes(const Vector& t, int k) {
  const double treated = t.sum();
  const double control = static_cast<double>(t.size()) - treated;
  if (treated < 1.0) throw EmptyArm("treated arm is empty");
  if (control < 1.0) throw EmptyArm("control arm is empty");
  if (treated < 2.0 * k || control < 2.0 * k) {
    throw FoldTooSmall("each arm needs at least 2k = " + std::to_string(2 * k) + " observations");
  }
}

std::vector<double> per_fold_means(const Vector& values, const FoldAssignment& folds) {
  std::vector<double> sums(static_cast<std::size_t>(folds.k), 0.0);
  std::vector<double> counts(static_cast<std::size_t>(folds.k), 0.0);
  for (std::size_t i = 0; i < folds.assignment.size(); ++i) {
    sums[static_cast<std::size_t>(folds.assignment[i])] += values[static_cast<Eigen::Index>(i)];
    counts[static_cast<std::size_t>(folds.assignment[i])] += 1.0;
  }
  for (std::size_t f = 0; f < sums.size(); ++f) sums[f] /= counts[f];
  return sums;
}

}  // namespace

AteReport AteReport::at_level(double new_level) const {
  AteReport out = *this;
  out.level = new_level;
  const double z = stats::normal_critical(new_level);
  out.ci_low = estimate - z * std_error;
  out.ci_high = estimate + z * std_error;
  return out;
}

AteReport naive_ate(const Vector& t, const Vector& y, double level) {
  check_aligned(t, y);
  std::vector<double> treated, control;
  for (Eigen::Index i = 0; i < t.size(); ++i) (t[i] == 1.0 ? treated : control).push_back(y[i]);
  if (treated.empty()) throw EmptyArm("treated arm is empty");
  if (control.empty()) throw EmptyArm("control arm is empty");
  AteReport report;
  report.method = "naive";
  report.level = level;
  report.n_used = t.size();
  report.estimate = stats::mean(treated) - stats::mean(control);
  report.std_error = std::sqrt(stats::sample_variance(treated) / static_cast<double>(treated.size()) +
                               stats::sample_variance(control) / static_cast<double>(control.size()));
  finish_interval(report);
  return report;
}

AteReport oracle_ate(const Vector& t, const Vector& y, const Vector& label, double level) {
  check_aligned(t, y);
  if (label.size() != t.size()) throw DimensionError("label length differs from t");
  const Eigen::Index n = t.size();
  const bool label_varies = label.maxCoeff() != label.minCoeff();
  const Eigen::Index p = label_varies ? 3 : 2;
  Matrix x(n, p);
  x.col(0).setOnes();
  x.col(1) = t;
  if (label_varies) x.col(2) = label;

  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < p) throw CollinearityError("treatment is collinear with the intercept or the label");
  if (n <= p) throw CollinearityError("too few rows for the oracle regression");
  const Vector beta = qr.solve(y);
  const double sigma2 = (y - x * beta).squaredNorm() / static_cast<double>(n - p);
  const Matrix xtx_inv = (x.transpose() * x).inverse();

  AteReport report;
  report.method = "oracle";
  report.level = level;
  report.n_used = n;
  report.estimate = beta[1];
  report.std_error = std::sqrt(std::max(0.0, sigma2 * xtx_inv(1, 1)));
  if (!label_varies) report.warnings.emplace_back("label is constant; dropped from the oracle regression");
  finish_interval(report);
  return report;
}

AteReport s_learner_ate(const RepresentationSet& set, const LearnerSpec& spec, double level) {
  set.require_estimable();
  if (is_classifier(spec.kind)) throw InvalidSpec("S-learner needs a regression learner");
  const Eigen::Index n = set.n();
  Matrix x(n, set.d() + 1);
  x.col(0) = set.t();
  x.rightCols(set.d()) = set.z();
  const FittedLearner model = fit(spec, x, set.y());
  x.col(0).setOnes();
  const Vector g1 = model.predict(x);
  x.col(0).setZero();
  const Vector g0 = model.predict(x);
  const Vector contrast = g1 - g0;

  AteReport report;
  report.method = std::string("s-learner-") + to_string(spec.kind);
  report.level = level;
  report.n_used = n;
  report.estimate = contrast.mean();
  report.std_error = std::sqrt(stats::sample_variance(span_of(contrast)) / static_cast<double>(n));
  finish_interval(report);
  return report;
}

Vector evaluate_score(const Vector& t, const Vector& y, const Vector& g1, const Vector& g0, const Vector& m) {
  const Eigen::Index n = t.size();
  if (y.size() != n || g1.size() != n || g0.size() != n || m.size() != n) {
    throw DimensionError("score inputs must be aligned");
  }
  Vector score(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(m[i] > 0.0 && m[i] < 1.0)) throw ValidationError("propensity must lie strictly inside (0,1)");
    score[i] = g1[i] - g0[i] + t[i] * (y[i] - g1[i]) / m[i] - (1.0 - t[i]) * (y[i] - g0[i]) / (1.0 - m[i]);
  }
  return score;
}

Vector clip_propensity(const Vector& m, double clip_eps, Eigen::Index* clipped) {
  if (!(clip_eps > 0.0 && clip_eps < 0.5)) throw InvalidSpec("clip_eps must lie in (0, 0.5)");
  Vector out = m.cwiseMax(clip_eps).cwiseMin(1.0 - clip_eps);
  if (clipped) *clipped = (m.array() < clip_eps || m.array() > 1.0 - clip_eps).count();
  return out;
}

CrossFitNuisances cross_fit_aipw_nuisances(const RepresentationSet& set, const LearnerSpec& g_spec,
                                           const LearnerSpec& m_spec, const FoldAssignment& folds) {
  const Eigen::Index n = set.n();
  check_folds(folds, n);
  const Vector& t = set.t();
  const Vector& y = set.y();
  CrossFitNuisances out{folds, Vector(n), Vector(n), Vector(n)};

  parallel_for(folds.k, [&](int f) {
    const auto train = folds.out_of_fold(f);
    const auto test = folds.in_fold(f);
    std::vector<Eigen::Index> train0, train1;
    for (Eigen::Index r : train) (t[r] == 1.0 ? train1 : train0).push_back(r);
    if (train0.empty() || train1.empty()) throw FoldTooSmall("an arm is empty outside fold " + std::to_string(f));

    LearnerSpec g0_spec = g_spec, g1_spec = g_spec, prop_spec = m_spec;
    g0_spec.seed = fold_seed(g_spec.seed, f, 0);
    g1_spec.seed = fold_seed(g_spec.seed, f, 1);
    prop_spec.seed = fold_seed(m_spec.seed, f, 2);
    const FittedLearner g0 = fit(g0_spec, set.z()(train0, Eigen::all), y(train0));
    const FittedLearner g1 = fit(g1_spec, set.z()(train1, Eigen::all), y(train1));
    const FittedLearner m = fit(prop_spec, set.z()(train, Eigen::all), t(train));

    const Matrix z_test = set.z()(test, Eigen::all);
    const Vector p0 = g0.predict(z_test), p1 = g1.predict(z_test), pm = m.predict(z_test);
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      out.g0[test[i]] = p0[ii];
      out.g1[test[i]] = p1[ii];
      out.m[test[i]] = pm[ii];
    }
  });
  return out;
}

AteReport aipw_from_nuisances(const Vector& t, const Vector& y, const Vector& g1, const Vector& g0, const Vector& m,
                              double clip_eps, const FoldAssignment* folds, double level) {
  check_aligned(t, y);
  Eigen::Index clipped = 0;
  const Vector m_clipped = clip_propensity(m, clip_eps, &clipped);
  const Vector score = evaluate_score(t, y, g1, g0, m_clipped);
  const auto n = static_cast<double>(t.size());

  AteReport report;
  report.method = "dml-aipw";
  report.level = level;
  report.n_used = t.size();
  report.estimate = score.mean();
  report.std_error = std::sqrt(stats::sample_variance(span_of(score)) / n);
  if (folds) {
    check_folds(*folds, t.size());
    report.folds = folds->k;
    report.per_fold_estimates = per_fold_means(score, *folds);
  }
  if (static_cast<double>(clipped) > kOverlapWarningShare * n) {
    report.warnings.push_back("OverlapWarning: " + std::to_string(clipped) + " of " + std::to_string(t.size()) +
                              " propensities clipped");
  }
  finish_interval(report);
  return report;
}

AteReport dml_aipw_ate(const RepresentationSet& set, const LearnerSpec& g_spec, const LearnerSpec& m_spec, int k,
                       double clip_eps, std::uint64_t seed, double level) {
  set.require_estimable();
  if (is_classifier(g_spec.kind)) throw InvalidSpec("outcome model g must be a regression learner");
  if (!(clip_eps > 0.0 && clip_eps < 0.5)) throw InvalidSpec("clip_eps must lie in (0, 0.5)");
  check_arm_sizes(set.t(), k);
  const FoldAssignment folds = make_folds(set.n(), k, seed);
  const CrossFitNuisances nuis = cross_fit_aipw_nuisances(set, g_spec, m_spec, folds);
  AteReport report = aipw_from_nuisances(set.t(), set.y(), nuis.g1, nuis.g0, nuis.m, clip_eps, &folds, level);
  report.method = std::string("dml-aipw(") + to_string(g_spec.kind) + "," + to_string(m_spec.kind) + ")";
  return report;
}

CrossFitResiduals cross_fit_plr_nuisances(const RepresentationSet& set, const LearnerSpec& l_spec,
                                          const LearnerSpec& m_spec, const FoldAssignment& folds) {
  const Eigen::Index n = set.n();
  check_folds(folds, n);
  CrossFitResiduals out{folds, Vector(n), Vector(n)};
  parallel_for(folds.k, [&](int f) {
    const auto train = folds.out_of_fold(f);
    const auto test = folds.in_fold(f);
    LearnerSpec ls = l_spec, ms = m_spec;
    ls.seed = fold_seed(l_spec.seed, f, 0);
    ms.seed = fold_seed(m_spec.seed, f, 2);
    const Matrix z_train = set.z()(train, Eigen::all);
    const FittedLearner l = fit(ls, z_train, set.y()(train));
    const FittedLearner m = fit(ms, z_train, set.t()(train));
    const Matrix z_test = set.z()(test, Eigen::all);
    const Vector pl = l.predict(z_test), pm = m.predict(z_test);
    for (std::size_t i = 0; i < test.size(); ++i) {
      out.y_hat[test[i]] = pl[static_cast<Eigen::Index>(i)];
      out.m[test[i]] = pm[static_cast<Eigen::Index>(i)];
    }
  });
  return out;
}

AteReport partialling_out_from_nuisances(const Vector& t, const Vector& y, const Vector& y_hat, const Vector& m,
                                         const FoldAssignment* folds, double level) {
  check_aligned(t, y);
  const Eigen::Index n = t.size();
  if (y_hat.size() != n || m.size() != n) throw DimensionError("nuisance predictions must be aligned");
  const Vector t_res = t - m;
  const Vector y_res = y - y_hat;
  const double denom = t_res.squaredNorm();
  if (denom < 1e-10) throw DegenerateResidualization("sum of squared treatment residuals below 1e-10");
  const double theta = t_res.dot(y_res) / denom;
  const Vector influence = t_res.cwiseProduct(y_res - theta * t_res);
  const double sigma2 = static_cast<double>(n) * influence.squaredNorm() / (denom * denom);

  AteReport report;
  report.method = "dml-plr";
  report.level = level;
  report.n_used = n;
  report.estimate = theta;
  report.std_error = std::sqrt(sigma2 / static_cast<double>(n));
  if (folds) {
    check_folds(*folds, n);
    report.folds = folds->k;
    std::vector<double> num(static_cast<std::size_t>(folds->k), 0.0), den(num.size(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto f = static_cast<std::size_t>(folds->assignment[static_cast<std::size_t>(i)]);
      num[f] += t_res[i] * y_res[i];
      den[f] += t_res[i] * t_res[i];
    }
    for (std::size_t f = 0; f < num.size(); ++f) report.per_fold_estimates.push_back(den[f] > 0.0 ? num[f] / den[f] : 0.0);
  }
  finish_interval(report);
  return report;
}

AteReport dml_partialling_out_ate(const RepresentationSet& set, const LearnerSpec& l_spec, const LearnerSpec& m_spec,
                                  int k, std::uint64_t seed, double level) {
  set.require_estimable();
  if (is_classifier(l_spec.kind)) throw InvalidSpec("outcome model l must be a regression learner");
  check_arm_sizes(set.t(), k);
  const FoldAssignment folds = make_folds(set.n(), k, seed);
  const CrossFitResiduals nuis = cross_fit_plr_nuisances(set, l_spec, m_spec, folds);
  AteReport report = partialling_out_from_nuisances(set.t(), set.y(), nuis.y_hat, nuis.m, &folds, level);
  report.method = std::string("dml-plr(") + to_string(l_spec.kind) + "," + to_string(m_spec.kind) + ")";
  return report;
}

}  // namespace repcause
