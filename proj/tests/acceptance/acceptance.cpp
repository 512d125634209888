// Acceptance checks with pinned tolerances. Prints one PASS/FAIL line per
// criterion and exits non-zero if any fails. Optional arguments select
// criteria by id, e.g. `acceptance_tests AC3 AC7`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "repcause/experiments.hpp"
#include "repcause/intrinsic_dim.hpp"
#include "repcause/knn.hpp"
#include "repcause/network.hpp"

using namespace repcause;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

// Label-confounding design: n = 2000 draws on a 3-manifold in R^64.
ManifoldSpec label_design(bool rotate = false) {
  ManifoldSpec m;
  m.n = 2000;
  m.d_ambient = 64;
  m.d_manifold = 3;
  m.frequency = 3.0;
  m.label_sharpness = 500.0;
  m.label_coordinates = 1;
  m.map_seed = 11;
  m.rotate = rotate;
  return m;
}

const EstimatorSummary& summary_of(const CoverageResult& r, const std::string& name) {
  for (const EstimatorSummary& s : r.summaries) {
    if (s.estimator == name) return s;
  }
  throw std::runtime_error("no summary for " + name);
}

std::string describe(const EstimatorSummary& s) {
  return s.estimator + " bias=" + fmt(s.mean_bias, 3) + " cov=" + fmt(s.coverage, 3);
}

Outcome ac1() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<EstimatorConfig> est{parse_estimator("naive"), parse_estimator("dml-aipw:ols:logistic")};
  const CoverageResult r = run_coverage_experiment(label_generator(label_design(), ConfoundingSpec{}), est, 200, 1000);
  const double secs = seconds_since(start);
  const EstimatorSummary& naive = summary_of(r, "naive");
  const EstimatorSummary& dml = summary_of(r, "dml-aipw:ols:logistic");
  const bool pass = std::abs(dml.mean_bias) < 0.05 && dml.coverage >= 0.90 && dml.coverage <= 0.99 &&
                    naive.mean_bias < -0.5 && naive.coverage < 0.2 && secs < 300.0;
  return {pass, describe(dml) + "; " + describe(naive) + "; " + fmt(secs, 3) + " s"};
}

Outcome ac2() {
  const std::vector<EstimatorConfig> est{parse_estimator("dml-aipw:ols:logistic"),
                                         parse_estimator("dml-aipw:lasso:logistic-l1")};
  const CoverageResult r =
      run_coverage_experiment(label_generator(label_design(true), ConfoundingSpec{}), est, 200, 1000);
  const EstimatorSummary& ols = summary_of(r, "dml-aipw:ols:logistic");
  const EstimatorSummary& lasso = summary_of(r, "dml-aipw:lasso:logistic-l1");
  return {lasso.coverage < 0.7 && ols.coverage >= 0.90, describe(lasso) + "; " + describe(ols)};
}

std::set<Eigen::Index> support(const Vector& coef) {
  std::set<Eigen::Index> s;
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    if (std::abs(coef[j]) > kNonzeroThreshold) s.insert(j);
  }
  return s;
}

Outcome ac3() {
  ManifoldSpec m = label_design();
  m.sample_seed = 77;
  const ManifoldSample sample = gen_synthetic_manifold(m);
  const SimulatedData data = gen_label_confounding(sample.z, sample.label, ConfoundingSpec{}, 78);
  LearnerSpec ols, logistic;
  logistic.kind = LearnerKind::logistic_l2;
  const AteReport base = dml_aipw_ate(data.set, ols, logistic, 2, kDefaultClipEps, 5);
  const auto raw_support = support(fit_lasso(data.set.z(), data.set.y(), PenaltyOptions{}, 5).linear().coef);
  double worst = 0.0;
  int differs = 0;
  for (std::uint64_t q = 0; q < 10; ++q) {
    const RepresentationSet moved = apply(data.set, sample_orthogonal(64, 300 + q));
    worst = std::max(worst, std::abs(dml_aipw_ate(moved, ols, logistic, 2, kDefaultClipEps, 5).estimate - base.estimate));
    const auto moved_support = support(fit_lasso(moved.z(), moved.y(), PenaltyOptions{}, 5).linear().coef);
    differs += moved_support != raw_support ? 1 : 0;
  }
  return {worst <= 1e-5 && differs >= 8, "max |delta estimate|=" + fmt(worst, 3) + "; lasso support differs for " +
                                             std::to_string(differs) + "/10 (raw support size " +
                                             std::to_string(raw_support.size()) + ")"};
}

Outcome ac4() {
  double at0 = 0.0, at5 = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(100 + s);
    const Matrix z = gaussian(500, 50, seed);
    const Vector y = 3.0 * z.col(0) - 2.0 * z.col(1) + 1.5 * z.col(2) + 0.1 * gaussian(500, 1, seed + 1000).col(0);
    const auto curve = sparsity_rotation_curve(RepresentationSet(z, std::nullopt, y), 5, PenaltyOptions{}, seed + 500);
    at0 += curve.front().nonzero;
    at5 += curve.back().nonzero;
  }
  at0 /= seeds;
  at5 /= seeds;
  return {at5 >= 3.0 * at0, "mean nonzero r=0: " + fmt(at0) + ", r=5: " + fmt(at5) + ", factor " + fmt(at5 / at0, 3)};
}

Outcome ac5() {
  const Generator gen = label_generator(label_design(), ConfoundingSpec{});
  const int reps = 200;
  std::vector<double> wrong_m(reps), wrong_g(reps);
  for (int r = 0; r < reps; ++r) {
    const SimulatedData d = gen(5000 + static_cast<std::uint64_t>(r));
    const Eigen::Index n = d.set.n();
    const Vector half = Vector::Constant(n, 0.5), zero = Vector::Zero(n);
    wrong_m[static_cast<std::size_t>(r)] =
        evaluate_score(d.set.t(), d.set.y(), d.true_g1, d.true_g0, half).mean() - d.true_ate;
    wrong_g[static_cast<std::size_t>(r)] =
        evaluate_score(d.set.t(), d.set.y(), zero, zero, d.true_m).mean() - d.true_ate;
  }
  auto check = [&](const std::vector<double>& bias, const char* label, std::string& detail) {
    const double mean = stats::mean(bias);
    const double mc = std::sqrt(stats::sample_variance(bias) / reps);
    detail += std::string(label) + " bias=" + fmt(mean, 3) + " (4 MC-SE=" + fmt(4.0 * mc, 3) + ") ";
    return std::abs(mean) < 4.0 * mc;
  };
  std::string detail;
  const bool a = check(wrong_m, "true g, m=0.5:", detail);
  const bool b = check(wrong_g, "true m, g=0:", detail);
  return {a && b, detail};
}

Outcome ac6() {
  const Generator gen = label_generator(label_design(), ConfoundingSpec{});
  const NormalityResult dml = run_normality_experiment(gen, parse_estimator("dml-aipw:ols:logistic"), 200, 2000);
  const NormalityResult naive = run_normality_experiment(gen, parse_estimator("naive"), 200, 2000);
  return {dml.ks.p_value > 0.01 && naive.ks.p_value < 0.01,
          "DML KS D=" + fmt(dml.ks.statistic, 3) + " p=" + fmt(dml.ks.p_value, 3) + "; naive KS p=" +
              fmt(naive.ks.p_value, 3)};
}

Outcome ac7() {
  bool pass = true;
  std::string detail;
  for (Eigen::Index dm : {1, 2, 5}) {
    ManifoldSpec m;
    m.n = 2000;
    m.d_ambient = 50;
    m.d_manifold = dm;
    m.map_seed = 40 + static_cast<std::uint64_t>(dm);
    m.sample_seed = 50 + static_cast<std::uint64_t>(dm);
    const ManifoldSample s = gen_synthetic_manifold(m);
    const Matrix qz = apply(s.z, sample_orthogonal(50, 60 + static_cast<std::uint64_t>(dm)));
    const double values[3] = {id_mle(s.z, 5).value, id_ess(s.z, 25).value, id_lpca(s.z, 50).value};
    const double rotated[3] = {id_mle(qz, 5).value, id_ess(qz, 25).value, id_lpca(qz, 50).value};
    detail += "d_M=" + std::to_string(dm) + ": ";
    for (int k = 0; k < 3; ++k) {
      pass = pass && std::abs(values[k] - static_cast<double>(dm)) <= 1.0 && std::abs(values[k] - rotated[k]) <= 1e-8;
      detail += fmt(values[k], 3) + (k < 2 ? "/" : "; ");
    }
  }
  return {pass, "mle/ess/lpca " + detail};
}

Outcome ac8() {
  const auto start = std::chrono::steady_clock::now();
  ManifoldSpec m;
  m.n = 3000;
  m.d_ambient = 64;
  m.d_manifold = 3;
  m.frequency = 3.0;
  m.map_seed = 21;
  ConfoundingSpec c;
  c.kind = ConfoundingKind::complex;
  c.coefficient_seed = 22;
  const Generator gen = complex_generator(m, c, AutoencoderOptions{}, 3000);

  // Learner defaults throughout: MLP 4x50, 100 trees.
  const std::vector<EstimatorConfig> est{parse_estimator("dml-aipw:mlp:logistic"),
                                         parse_estimator("dml-aipw:forest:forest-clf"), parse_estimator("s-learner:mlp")};
  const CoverageResult r = run_coverage_experiment(gen, est, 100, 7000);
  const double secs = seconds_since(start);
  const EstimatorSummary& dml = r.summaries[0];
  const EstimatorSummary& forest = r.summaries[1];
  const EstimatorSummary& s_learner = r.summaries[2];
  const bool pass = dml.coverage >= 0.85 && std::abs(dml.mean_bias) < 0.1 && forest.coverage < 0.7 &&
                    s_learner.coverage < 0.7 && secs < 1800.0;
  return {pass, describe(dml) + "; " + describe(forest) + "; " + describe(s_learner) + "; " + fmt(secs, 3) + " s"};
}

Outcome ac9() {
  RateConfig config;
  config.hcm = random_hcm_spec(2, 2, 2, 2.0, 9);
  config.d_manifold = 2;
  config.ambient_dims = {10, 100};
  config.n_grid = {500, 1000, 2000, 4000};
  config.reps = 3;
  config.mlp.kind = LearnerKind::mlp_reg;
  config.mlp.mlp.epochs = 500;
  config.mlp.mlp.patience = 30;
  const RateResult r = run_rate_experiment(config, 9);
  bool monotone = true;
  std::string detail;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    detail += "d=" + std::to_string(r.points[i].d) + ",n=" + std::to_string(r.points[i].n) + ":" +
              fmt(r.points[i].test_mse, 3) + " ";
    if (i > 0 && r.points[i].d == r.points[i - 1].d) {
      monotone = monotone && r.points[i].test_mse <= 1.1 * r.points[i - 1].test_mse;
    }
  }
  const double ratio = r.points[7].test_mse / r.points[3].test_mse;
  const bool decreasing = r.slopes[0].slope < 0.0 && r.slopes[1].slope < 0.0;
  return {monotone && decreasing && ratio >= 0.5 && ratio <= 2.0, detail + "terminal ratio " + fmt(ratio, 3)};
}

// Bias is the Monte Carlo mean over repetitions, compared with the mean
// reported standard error.
Outcome ac10() {
  ConfoundingSpec c;
  c.kind = ConfoundingKind::hcm_product;
  const char* names[] = {"naive",
                         "s-learner:ols",
                         "s-learner:mlp",
                         "s-learner:forest",
                         "dml-aipw:ols:logistic",
                         "dml-aipw:lasso:logistic-l1",
                         "dml-aipw:mlp:mlp-clf",
                         "dml-aipw:forest:forest-clf",
                         "dml-plr:ols:logistic",
                         "dml-plr:mlp:mlp-clf",
                         "dml-plr:forest:forest-clf"};
  std::vector<EstimatorConfig> est;
  for (const char* name : names) {
    EstimatorConfig e = parse_estimator(name);
    for (LearnerSpec* l : {&e.g, &e.m}) {
      l->mlp.depth = 2;
      l->mlp.width = 32;
      l->forest.trees = 50;
    }
    est.push_back(e);
  }
  const CoverageResult r = run_coverage_experiment(product_generator(2000, 64, c), est, 5, 31);
  bool pass = true;
  std::string detail;
  for (const EstimatorSummary& s : r.summaries) {
    const double z = std::abs(s.mean_bias) / s.mean_std_error;
    pass = pass && z > 4.0;
    detail += s.estimator + " |bias|/SE=" + fmt(z, 3) + "; ";
  }
  return {pass, detail};
}

Outcome ac11() {
  std::string detail;
  bool pass = true;

  // Lasso against soft thresholding on an orthonormal, centred design.
  {
    const Eigen::Index n = 200, d = 6;
    Matrix g = gaussian(n, d, 1);
    g.rowwise() -= g.colwise().mean();
    Eigen::HouseholderQR<Matrix> qr(g);
    const Matrix x = Matrix(qr.householderQ() * Matrix::Identity(n, d)) * std::sqrt(static_cast<double>(n));
    Vector beta(d);
    beta << 1.0, -0.5, 0.2, 0.0, 0.05, -2.0;
    const Vector y = x * beta + 0.3 * gaussian(n, 1, 2).col(0);
    double worst = 0.0;
    for (double lambda : {0.01, 0.1, 0.3}) {
      PenaltyOptions p;
      p.lambda = lambda;
      const Vector coef = fit_lasso(x, y, p, 0).linear().coef;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double v = x.col(j).dot((y.array() - y.mean()).matrix()) / static_cast<double>(n);
        const double expected = v > lambda ? v - lambda : (v < -lambda ? v + lambda : 0.0);
        worst = std::max(worst, std::abs(coef[j] - expected));
      }
    }
    pass = pass && worst <= 1e-6;
    detail += "lasso " + fmt(worst, 2) + "; ";
  }

  // OLS against the normal equations with an intercept column.
  {
    const Matrix x = gaussian(300, 8, 3);
    const Vector y = x * Vector::LinSpaced(8, -2.0, 2.0) + gaussian(300, 1, 4).col(0);
    Matrix x1(300, 9);
    x1.col(0).setOnes();
    x1.rightCols(8) = x;
    const Vector normal = (x1.transpose() * x1).ldlt().solve(x1.transpose() * y);
    const LinearModel m = fit_ols(x, y).linear();
    const double worst = std::max(std::abs(m.intercept - normal[0]), (m.coef - normal.tail(8)).cwiseAbs().maxCoeff());
    pass = pass && worst <= 1e-8;
    detail += "ols " + fmt(worst, 2) + "; ";
  }

  // Backpropagation against central differences.
  {
    double worst = 0.0;
    for (Loss loss : {Loss::squared, Loss::logistic}) {
      const Activation out = loss == Loss::logistic ? Activation::sigmoid : Activation::identity;
      Network net({4, 6, 6, 1}, {Activation::relu, Activation::relu, out}, 5);
      const Matrix x = gaussian(9, 4, 6);
      Matrix target = gaussian(9, 1, 7);
      if (loss == Loss::logistic) target = (target.array() > 0.0).cast<double>();
      const Vector theta = net.flat_parameters();
      Network::Gradient grad;
      net.loss_and_gradient(x, target, loss, grad);
      const Vector analytic = Network::flatten(grad);
      for (Eigen::Index k = 0; k < theta.size(); ++k) {
        Vector plus = theta, minus = theta;
        plus[k] += 1e-6;
        minus[k] -= 1e-6;
        net.set_flat_parameters(plus);
        const double fp = net.loss(x, target, loss);
        net.set_flat_parameters(minus);
        const double fm = net.loss(x, target, loss);
        const double numeric = (fp - fm) / 2e-6;
        worst = std::max(worst, std::abs(numeric - analytic[k]) / std::max(1.0, std::abs(numeric)));
      }
      net.set_flat_parameters(theta);
    }
    pass = pass && worst <= 1e-4;
    detail += "mlp gradient " + fmt(worst, 2) + "; ";
  }

  // kNN against a quadratic scan.
  {
    const Matrix z = gaussian(100, 6, 8);
    const KnnResult r = knn(z, 10);
    bool exact = true;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      std::vector<std::pair<double, Eigen::Index>> all;
      for (Eigen::Index j = 0; j < z.rows(); ++j) {
        if (j != i) all.emplace_back((z.row(i) - z.row(j)).norm(), j);
      }
      std::sort(all.begin(), all.end());
      for (int c = 0; c < 10; ++c) {
        exact = exact && r.indices(i, c) == all[static_cast<std::size_t>(c)].second &&
                r.distances(i, c) == all[static_cast<std::size_t>(c)].first;
      }
    }
    pass = pass && exact;
    detail += std::string("knn ") + (exact ? "exact" : "mismatch");
  }
  return {pass, detail};
}

struct Criterion {
  const char* id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"AC1", "label-confounding recovery", ac1},
      {"AC2", "non-invariant learners fail under rotation", ac2},
      {"AC3", "exact ILT invariance of linear DML", ac3},
      {"AC4", "sparsity-rotation curve", ac4},
      {"AC5", "double robustness", ac5},
      {"AC6", "asymptotic normality", ac6},
      {"AC7", "intrinsic dimension recovery", ac7},
      {"AC8", "complex confounding", ac8},
      {"AC9", "rate depends on intrinsic dimension", ac9},
      {"AC10", "product-confounding stress", ac10},
      {"AC11", "numerical oracles", ac11},
  };
  std::set<std::string> selected(argv + 1, argv + argc);
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << c.id << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << c.title << ": " << o.detail << " ["
              << fmt(seconds_since(start), 3) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
