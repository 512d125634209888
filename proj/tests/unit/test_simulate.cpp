#include <doctest.h>

#include <cmath>
#include <random>

#include "repcause/experiments.hpp"
#include "repcause/intrinsic_dim.hpp"
#include "repcause/parallel.hpp"
#include "test_util.hpp"

using namespace repcause;

namespace {

// Second HCM interpreter: recursion over the HcmSpec tree, reading the combiner
// coefficients from the materialized nodes in post-order.
double interpret(const HcmSpec& spec, const HcmFunction& f, const Eigen::RowVectorXd& x, int& next) {
  if (spec.is_leaf()) {
    ++next;
    return x[spec.coordinate];
  }
  std::vector<double> args;
  for (const HcmSpec& c : spec.children) args.push_back(interpret(c, f, x, next));
  const HcmNode& node = f.nodes()[static_cast<std::size_t>(next++)];
  if (spec.additive) {
    double sum = 0.0;
    for (double a : args) sum += a;
    return sum;
  }
  const std::size_t p = args.size();
  double out = node.offset;
  for (std::size_t i = 0; i < p; ++i) out += node.linear[static_cast<Eigen::Index>(i)] * args[i];
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      out += node.quadratic(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * args[i] * args[j];
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out += node.amplitude[ii] * std::sin(node.frequency[ii] * args[i] + node.phase[ii]);
  }
  return out;
}

ManifoldSpec label_design(std::uint64_t map_seed) {
  ManifoldSpec m;
  m.n = 2000;
  m.d_ambient = 64;
  m.d_manifold = 3;
  m.frequency = 3.0;
  m.label_sharpness = 500.0;
  m.map_seed = map_seed;
  return m;
}

// Mean of the AIPW score at the true nuisances and its Monte Carlo error.
std::pair<double, double> truth_score(const SimulatedData& data) {
  const Vector score =
      evaluate_score(data.set.t(), data.set.y(), data.true_g1, data.true_g0, data.true_m);
  const double n = static_cast<double>(score.size());
  const double mean = score.mean();
  const double sd = std::sqrt((score.array() - mean).square().sum() / (n - 1.0));
  return {mean, sd / std::sqrt(n)};
}

}  // namespace

TEST_CASE("label confounding without positive labels is a randomized study") {
  const Matrix z = test::gaussian(4000, 3, 1);
  const SimulatedData data = gen_label_confounding(z, Vector::Zero(4000), ConfoundingSpec{}, 2);
  CHECK(data.true_m.isConstant(0.3));
  const AteReport naive = naive_ate(data.set.t(), data.set.y());
  CHECK(std::abs(naive.estimate - 2.0) < 3.0 * naive.std_error);
  CHECK_THROWS_AS(gen_label_confounding(z, std::nullopt, ConfoundingSpec{}, 2), MissingLabel);
}

TEST_CASE("label confounding biases the naive estimate downward") {
  ManifoldSpec m = label_design(11);
  m.n = 5000;
  const ManifoldSample sample = gen_synthetic_manifold(m);
  const SimulatedData data = gen_label_confounding(sample.z, sample.label, ConfoundingSpec{}, 3);
  const AteReport naive = naive_ate(data.set.t(), data.set.y());
  CHECK(naive.estimate < 2.0 - 4.0 * naive.std_error);
  const AteReport oracle = oracle_ate(data.set.t(), data.set.y(), data.set.label());
  CHECK(std::abs(oracle.estimate - 2.0) < 3.0 * oracle.std_error);
  const auto [mean, mc] = truth_score(data);
  CHECK(std::abs(mean - 2.0) < 4.0 * mc);
  CHECK(data.set.label() == sample.label);
}

TEST_CASE("confounding spec validation") {
  ConfoundingSpec spec;
  spec.p_treat_low = 0.8;
  CHECK_THROWS_AS(spec.validate(), InvalidSpec);
  spec = ConfoundingSpec{};
  spec.outcome_noise_sd = 0.0;
  CHECK_THROWS_AS(spec.validate(), InvalidSpec);
  CHECK(parse_confounding_kind("complex") == ConfoundingKind::complex);
  CHECK_THROWS_AS(parse_confounding_kind("probit"), InvalidSpec);
}

TEST_CASE("synthetic manifold") {
  ManifoldSpec cube;
  cube.n = 500;
  cube.d_ambient = 4;
  cube.d_manifold = 4;
  cube.identity_map = true;
  const ManifoldSample s = gen_synthetic_manifold(cube);
  CHECK(s.z == s.latent);
  CHECK(s.z.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(s.label == (s.latent.col(0).array() > 0.0).cast<double>().matrix());

  ManifoldSpec plane;
  plane.n = 2000;
  plane.d_ambient = 50;
  plane.d_manifold = 2;
  plane.map_seed = 3;
  const ManifoldSample p = gen_synthetic_manifold(plane);
  const double raw = id_mle(p.z).value;
  CHECK(raw >= 1.6);
  CHECK(raw <= 2.6);
  plane.rotate = true;
  const ManifoldSample rotated = gen_synthetic_manifold(plane);
  CHECK(rotated.latent == p.latent);
  CHECK(std::abs(id_mle(rotated.z).value - raw) <= 1e-8);

  ManifoldSpec bad;
  bad.d_manifold = 64;
  CHECK_THROWS_AS(bad.validate(), InvalidSpec);
  bad = ManifoldSpec{};
  bad.label_sharpness = 10.0;
  bad.label_coordinates = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidSpec);
}

TEST_CASE("label coordinates carry only the label feature") {
  ManifoldSpec m = label_design(5);
  m.n = 300;
  const ManifoldSample s = gen_synthetic_manifold(m);
  const Vector step = (500.0 * s.latent.col(0).array()).tanh().matrix();
  for (Eigen::Index a = 0; a < m.label_coordinates; ++a) {
    CHECK(s.z.col(a).cwiseAbs().isApprox(step.cwiseAbs()));
  }
  CHECK(!s.z.col(m.label_coordinates).cwiseAbs().isApprox(step.cwiseAbs()));
}

TEST_CASE("HCM of level 0 and additive level 1") {
  const HcmFunction leaf(HcmSpec::leaf(2), 1);
  Eigen::RowVectorXd x(4);
  x << 0.1, -0.4, 0.7, 2.0;
  CHECK(leaf.evaluate_point(x) == 0.7);
  CHECK(leaf.level() == 0);

  const HcmFunction sum(HcmSpec::node({HcmSpec::leaf(0), HcmSpec::leaf(3)}, 2.0, true), 1);
  CHECK(sum.evaluate_point(x) == 0.1 + 2.0);
  CHECK(sum.level() == 1);
  CHECK(sum.constraint_set() == std::set<std::pair<double, int>>{{2.0, 2}});
}

TEST_CASE("random level-2 HCM matches a recursive interpreter") {
  const HcmSpec spec = random_hcm_spec(2, 3, 5, 2.0, 17);
  CHECK(spec.level() == 2);
  const HcmFunction f(spec, 23);
  const Matrix points = test::uniform(100, 5, 29, -2.0, 2.0);
  const Vector fast = f.evaluate(points);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int next = 0;
    const double slow = interpret(spec, f, points.row(i), next);
    CHECK(std::abs(fast[i] - slow) <= 1e-12 * std::max(1.0, std::abs(slow)));
  }
}

TEST_CASE("HCM constraint set and worst-case pair") {
  HcmSpec rough = HcmSpec::node({HcmSpec::leaf(0), HcmSpec::leaf(1), HcmSpec::leaf(2)}, 1.0);
  HcmSpec root = HcmSpec::node({rough, HcmSpec::leaf(3)}, 4.0);
  const HcmFunction f(root, 2);
  CHECK(f.constraint_set() == std::set<std::pair<double, int>>{{1.0, 3}, {4.0, 2}});
  CHECK(f.worst_case_pair() == std::pair<double, int>{1.0, 3});
  CHECK(f.input_dim() == 4);

  HcmSpec broken = HcmSpec::node({}, 2.0);
  CHECK_THROWS_AS(HcmFunction(broken, 1), InvalidSpec);
  HcmSpec flat = HcmSpec::node({HcmSpec::leaf(0)}, 0.0);
  CHECK_THROWS_AS(HcmFunction(flat, 1), InvalidSpec);
  Eigen::RowVectorXd short_x(2);
  short_x << 1.0, 2.0;
  CHECK_THROWS_AS(f.evaluate_point(short_x), DimensionError);
}

TEST_CASE("product confounding") {
  ConfoundingSpec spec;
  spec.kind = ConfoundingKind::hcm_product;
  const Matrix reps = test::gaussian(4000, 1, 5);
  const SimulatedData data = gen_hcm_product_confounding(reps, spec, 6);
  CHECK(data.true_m.minCoeff() > 0.01);
  CHECK(data.true_m.maxCoeff() < 0.99);
  const auto [mean, mc] = truth_score(data);
  CHECK(std::abs(mean - 2.0) < 4.0 * mc);

  // With d = 1 the product is a single tanh feature; linear nuisances on it are correct.
  const Vector s = product_signal(reps, spec.product_sharpness);
  const RepresentationSet on_feature(s, data.set.t(), data.set.y());
  LearnerSpec ols;
  const AteReport r = dml_aipw_ate(on_feature, ols, ols, 2, 0.01, 7);
  CHECK(std::abs(r.estimate - 2.0) < 3.0 * r.std_error);

  const Matrix wide = test::gaussian(2000, 64, 8);
  const SimulatedData d64 = gen_hcm_product_confounding(wide, spec, 9);
  CHECK(d64.true_m.minCoeff() > 0.01);
  CHECK(d64.true_m.maxCoeff() < 0.99);
}

TEST_CASE("complex confounding") {
  ManifoldSpec m = label_design(2);
  m.n = 1000;
  m.label_sharpness = 0.0;
  m.d_ambient = 20;
  const ManifoldSample sample = gen_synthetic_manifold(m);
  AutoencoderOptions ae;
  ae.hidden = {32};
  ae.epochs = 30;
  ConfoundingSpec spec;
  spec.kind = ConfoundingKind::complex;
  spec.coefficient_seed = 4;

  const ComplexConfounder confounder(sample.z, spec, ae);
  const SimulatedData data = confounder.generate(sample.z, 5);
  REQUIRE(data.outcome_coef.size() == 5);
  CHECK((data.outcome_coef.array() <= 0.0).all());
  CHECK(data.propensity_coef.size() == 5);
  const Matrix e = confounder.encodings(sample.z);
  CHECK(data.true_m.isApprox((e * data.propensity_coef).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); })));
  CHECK(data.true_g0.isApprox(e * data.outcome_coef));
  CHECK(std::abs(e.col(0).mean()) < 1e-10);
  const auto [mean, mc] = truth_score(data);
  CHECK(std::abs(mean - 2.0) < 4.0 * mc);
  CHECK(confounder.generate(sample.z, 5).set == data.set);

  spec.zero_outcome_coef = true;
  const SimulatedData flat = ComplexConfounder(sample.z, spec, ae).generate(sample.z, 6);
  CHECK(flat.outcome_coef.isZero());
  const AteReport naive = naive_ate(flat.set.t(), flat.set.y());
  CHECK(std::abs(naive.estimate - 2.0) < 3.0 * naive.std_error);
}

TEST_CASE("poor encodings are flagged") {
  const Matrix noise = test::gaussian(400, 30, 3);
  AutoencoderOptions ae;
  ae.hidden = {8};
  ae.epochs = 5;
  ConfoundingSpec spec;
  spec.kind = ConfoundingKind::complex;
  spec.latent_dim = 1;
  const SimulatedData data = gen_complex_confounding(noise, spec, 1, ae);
  bool flagged = false;
  for (const auto& w : data.warnings) flagged = flagged || w.find("PoorEncodingWarning") != std::string::npos;
  CHECK(flagged);
}

TEST_CASE("estimator parsing") {
  const EstimatorConfig c = parse_estimator("dml-aipw:mlp:forest-clf");
  CHECK(c.kind == EstimatorKind::dml_aipw);
  CHECK(c.g.kind == LearnerKind::mlp_reg);
  CHECK(c.m.kind == LearnerKind::forest_clf);
  CHECK(c.folds == 2);
  CHECK(parse_estimator("s-learner:ols").kind == EstimatorKind::s_learner);
  CHECK_THROWS_AS(parse_estimator("dml-aipw:ols"), InvalidSpec);
  CHECK_THROWS_AS(parse_estimator("naive:ols"), InvalidSpec);
  CHECK_THROWS_AS(parse_estimator("t-learner:ols"), InvalidSpec);
}

TEST_CASE("coverage of oracle and naive on label confounding") {
  const Generator gen = label_generator(label_design(11), ConfoundingSpec{});
  const std::vector<EstimatorConfig> est{parse_estimator("naive"), parse_estimator("oracle")};
  const CoverageResult r = run_coverage_experiment(gen, est, 200, 100);
  REQUIRE(r.rows.size() == 400);
  CHECK(r.rows[0].rep == 0);
  CHECK(r.rows[1].estimator == "oracle");
  CHECK(r.rows[399].rep == 199);
  CHECK(r.summaries[0].coverage < 0.2);
  CHECK(r.summaries[0].mean_bias < -0.5);
  CHECK(r.summaries[1].coverage >= 0.90);
  CHECK(r.summaries[1].coverage <= 0.99);
  CHECK(r.summaries[1].reps == 200);
  CHECK_THROWS_AS(run_coverage_experiment(gen, est, 1, 100), InvalidSpec);
}

TEST_CASE("experiments are deterministic and thread-count independent") {
  ManifoldSpec m = label_design(3);
  m.n = 400;
  m.d_ambient = 16;
  const Generator gen = label_generator(m, ConfoundingSpec{});
  const std::vector<EstimatorConfig> est{parse_estimator("naive"), parse_estimator("dml-aipw:ols:logistic"),
                                         parse_estimator("dml-plr:ols:logistic")};
  const CoverageResult serial = run_coverage_experiment_serial(gen, est, 6, 42);
  ScopedThreads threads(3);
  const CoverageResult parallel = run_coverage_experiment(gen, est, 6, 42);
  REQUIRE(serial.rows.size() == parallel.rows.size());
  for (std::size_t i = 0; i < serial.rows.size(); ++i) {
    CHECK(serial.rows[i].rep == parallel.rows[i].rep);
    CHECK(serial.rows[i].estimator == parallel.rows[i].estimator);
    CHECK(serial.rows[i].report.estimate == parallel.rows[i].report.estimate);
    CHECK(serial.rows[i].report.std_error == parallel.rows[i].report.std_error);
  }
  CHECK(gen(5).set == gen(5).set);
  CHECK(!(gen(5).set == gen(6).set));
}

TEST_CASE("normality experiment") {
  const Generator gen = label_generator(label_design(11), ConfoundingSpec{});
  const NormalityResult naive = run_normality_experiment(gen, parse_estimator("naive"), 50, 7);
  CHECK(naive.standardized.size() == 50);
  CHECK(naive.ks.p_value < 0.01);
  const NormalityResult oracle = run_normality_experiment(gen, parse_estimator("oracle"), 200, 7);
  CHECK(oracle.ks.p_value > 0.01);
  CHECK_THROWS_AS(run_normality_experiment(gen, parse_estimator("naive"), 49, 7), InvalidSpec);
}

TEST_CASE("KS machinery is calibrated on exact normal draws") {
  int passed = 0;
  for (int run = 0; run < 100; ++run) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(run));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> sample(200);
    for (double& v : sample) v = normal(rng);
    passed += stats::ks_test_standard_normal(sample).p_value > 0.01 ? 1 : 0;
  }
  CHECK(passed >= 95);
}

TEST_CASE("rate experiment plumbing") {
  RateConfig config;
  config.hcm = random_hcm_spec(1, 2, 2, 2.0, 1);
  config.ambient_dims = {6, 12};
  config.n_grid = {100, 200};
  config.test_n = 500;
  config.mlp.kind = LearnerKind::mlp_reg;
  config.mlp.mlp.depth = 1;
  config.mlp.mlp.width = 8;
  config.mlp.mlp.epochs = 5;
  const RateResult r = run_rate_experiment(config, 3);
  REQUIRE(r.points.size() == 4);
  CHECK(r.points[0].d == 6);
  CHECK(r.points[1].n == 200);
  CHECK(r.points[2].d == 12);
  REQUIRE(r.slopes.size() == 2);
  CHECK(r.worst_case_pair == std::pair<double, int>{2.0, 2});
  for (const RatePoint& p : r.points) CHECK(std::isfinite(p.test_mse));

  ScopedThreads threads(2);
  const RateResult again = run_rate_experiment(config, 3);
  for (std::size_t i = 0; i < r.points.size(); ++i) CHECK(again.points[i].test_mse == r.points[i].test_mse);

  RateConfig bad = config;
  bad.n_grid = {200, 100};
  CHECK_THROWS_AS(run_rate_experiment(bad, 3), InvalidSpec);
  bad = config;
  bad.hcm = HcmSpec::leaf(5);
  CHECK_THROWS_AS(run_rate_experiment(bad, 3), InvalidSpec);
  bad = config;
  bad.mlp.kind = LearnerKind::ols;
  CHECK_THROWS_AS(run_rate_experiment(bad, 3), InvalidSpec);
}

TEST_CASE("the rate learner fits a constant target") {
  // HCM trees cannot express a constant, so the regressor is checked directly.
  const Matrix x = test::uniform(500, 10, 4);
  LearnerSpec spec;
  spec.kind = LearnerKind::mlp_reg;
  spec.mlp.depth = 2;
  spec.mlp.width = 16;
  spec.mlp.epochs = 20;
  const FittedLearner model = fit(spec, x, Vector::Constant(500, 1.5));
  const Vector pred = model.predict(test::uniform(1000, 10, 5));
  CHECK((pred.array() - 1.5).square().mean() < 1e-4);
}
