#include "repcause/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "repcause/manifold.hpp"
#include "repcause/parallel.hpp"

namespace repcause {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

LearnerSpec learner_from(const std::string& name) {
  LearnerSpec spec;
  spec.kind = parse_learner_kind(name);
  return spec;
}

std::vector<RepetitionRow> run_rep(const Generator& generator, const std::vector<EstimatorConfig>& estimators, int rep,
                                   std::uint64_t seed) {
  const std::uint64_t rep_seed = seed + static_cast<std::uint64_t>(rep);
  const SimulatedData data = generator(rep_seed);
  std::vector<RepetitionRow> rows;
  for (const EstimatorConfig& config : estimators) {
    RepetitionRow row;
    row.rep = rep;
    row.estimator = config.name;
    row.report = run_estimator(config, data, rep_seed);
    row.truth = data.true_ate;
    row.covered = row.report.covers(data.true_ate);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<EstimatorSummary> summarize(const std::vector<RepetitionRow>& rows,
                                        const std::vector<EstimatorConfig>& estimators) {
  std::vector<EstimatorSummary> out;
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    std::vector<double> estimates;
    EstimatorSummary s;
    s.estimator = estimators[e].name;
    double bias = 0.0, covered = 0.0, width = 0.0, se = 0.0;
    for (std::size_t r = e; r < rows.size(); r += estimators.size()) {
      const RepetitionRow& row = rows[r];
      estimates.push_back(row.report.estimate);
      bias += row.report.estimate - row.truth;
      covered += row.covered ? 1.0 : 0.0;
      width += row.report.ci_high - row.report.ci_low;
      se += row.report.std_error;
    }
    const auto reps = static_cast<double>(estimates.size());
    s.reps = static_cast<int>(estimates.size());
    s.mean_estimate = stats::mean(estimates);
    s.mean_bias = bias / reps;
    s.bias_mc_se = estimates.size() > 1 ? std::sqrt(stats::sample_variance(estimates) / reps) : 0.0;
    s.coverage = covered / reps;
    s.mean_ci_width = width / reps;
    s.mean_std_error = se / reps;
    out.push_back(s);
  }
  return out;
}

void check_reps(int reps, int minimum) {
  if (reps < minimum) throw InvalidSpec("experiment needs at least " + std::to_string(minimum) + " repetitions");
}

}  // namespace

namespace {

constexpr std::uint64_t kOutcomeStream = 0x2545f4914f6cdd1dULL;

}  // namespace

Generator label_generator(const ManifoldSpec& manifold, const ConfoundingSpec& confounding) {
  auto embedding = std::make_shared<const SmoothEmbedding>(manifold);
  return [embedding, manifold, confounding](std::uint64_t seed) {
    ManifoldSpec spec = manifold;
    spec.sample_seed = seed;
    const ManifoldSample sample = sample_manifold(*embedding, spec);
    return gen_label_confounding(sample.z, sample.label, confounding, seed ^ kOutcomeStream);
  };
}

Generator complex_generator(const ManifoldSpec& manifold, const ConfoundingSpec& confounding,
                            const AutoencoderOptions& autoencoder, Eigen::Index base_n) {
  auto embedding = std::make_shared<const SmoothEmbedding>(manifold);
  ManifoldSpec base = manifold;
  base.n = base_n;
  base.sample_seed = manifold.map_seed ^ kOutcomeStream;
  const ManifoldSample pool = sample_manifold(*embedding, base);
  auto confounder = std::make_shared<const ComplexConfounder>(pool.z, confounding, autoencoder);
  return [embedding, confounder, manifold](std::uint64_t seed) {
    ManifoldSpec spec = manifold;
    spec.sample_seed = seed;
    const ManifoldSample sample = sample_manifold(*embedding, spec);
    return confounder->generate(sample.z, seed ^ kOutcomeStream);
  };
}

Generator product_generator(Eigen::Index n, Eigen::Index d, const ConfoundingSpec& confounding) {
  if (n < 2 || d < 1) throw InvalidSpec("product generator needs n >= 2 and d >= 1");
  return [n, d, confounding](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix reps(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) reps(i, j) = normal(rng);
    }
    return gen_hcm_product_confounding(reps, confounding, seed ^ kOutcomeStream);
  };
}

EstimatorConfig parse_estimator(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw InvalidSpec("empty estimator description");
  EstimatorConfig config;
  config.name = text;
  const std::string& head = parts[0];
  auto expect = [&](std::size_t count) {
    if (parts.size() != count) throw InvalidSpec("estimator '" + text + "' has the wrong number of ':' fields");
  };
  if (head == "naive") {
    expect(1);
    config.kind = EstimatorKind::naive;
  } else if (head == "oracle") {
    expect(1);
    config.kind = EstimatorKind::oracle;
  } else if (head == "s-learner") {
    expect(2);
    config.kind = EstimatorKind::s_learner;
    config.g = learner_from(parts[1]);
  } else if (head == "dml-aipw" || head == "dml-plr") {
    expect(3);
    config.kind = head == "dml-aipw" ? EstimatorKind::dml_aipw : EstimatorKind::dml_plr;
    config.g = learner_from(parts[1]);
    config.m = learner_from(parts[2]);
  } else {
    throw InvalidSpec("unknown estimator '" + head + "'");
  }
  return config;
}

AteReport run_estimator(const EstimatorConfig& config, const SimulatedData& data, std::uint64_t seed) {
  const RepresentationSet& set = data.set;
  LearnerSpec g = config.g, m = config.m;
  g.seed += seed;
  m.seed += seed;
  AteReport report;
  switch (config.kind) {
    case EstimatorKind::naive: report = naive_ate(set.t(), set.y(), config.level); break;
    case EstimatorKind::oracle: report = oracle_ate(set.t(), set.y(), set.label(), config.level); break;
    case EstimatorKind::s_learner: report = s_learner_ate(set, g, config.level); break;
    case EstimatorKind::dml_aipw:
      report = dml_aipw_ate(set, g, m, config.folds, config.clip_eps, seed, config.level);
      break;
    case EstimatorKind::dml_plr: report = dml_partialling_out_ate(set, g, m, config.folds, seed, config.level); break;
  }
  report.method = config.name;
  return report;
}

CoverageResult run_coverage_experiment(const Generator& generator, const std::vector<EstimatorConfig>& estimators,
                                       int reps, std::uint64_t seed) {
  check_reps(reps, 2);
  std::vector<std::vector<RepetitionRow>> per_rep(static_cast<std::size_t>(reps));
  parallel_for(reps, [&](int r) { per_rep[static_cast<std::size_t>(r)] = run_rep(generator, estimators, r, seed); });
  CoverageResult out;
  for (auto& rows : per_rep) std::move(rows.begin(), rows.end(), std::back_inserter(out.rows));
  out.summaries = summarize(out.rows, estimators);
  return out;
}

CoverageResult run_coverage_experiment_serial(const Generator& generator,
                                              const std::vector<EstimatorConfig>& estimators, int reps,
                                              std::uint64_t seed) {
  check_reps(reps, 2);
  CoverageResult out;
  for (int r = 0; r < reps; ++r) {
    auto rows = run_rep(generator, estimators, r, seed);
    std::move(rows.begin(), rows.end(), std::back_inserter(out.rows));
  }
  out.summaries = summarize(out.rows, estimators);
  return out;
}

NormalityResult run_normality_experiment(const Generator& generator, const EstimatorConfig& estimator, int reps,
                                         std::uint64_t seed) {
  check_reps(reps, 50);
  const CoverageResult coverage = run_coverage_experiment(generator, {estimator}, reps, seed);
  NormalityResult out;
  for (const RepetitionRow& row : coverage.rows) {
    if (!(row.report.std_error > 0.0)) throw NumericsError("standardization needs a positive standard error");
    out.standardized.push_back((row.report.estimate - row.truth) / row.report.std_error);
  }
  out.ks = stats::ks_test_standard_normal(out.standardized);
  return out;
}

RateResult run_rate_experiment(const RateConfig& config, std::uint64_t seed) {
  if (config.mlp.kind != LearnerKind::mlp_reg) throw InvalidSpec("rate experiment needs an MLP regressor");
  if (config.n_grid.empty() || config.ambient_dims.empty()) throw InvalidSpec("rate experiment needs n and d grids");
  if (!std::is_sorted(config.n_grid.begin(), config.n_grid.end())) throw InvalidSpec("n_grid must be ascending");
  if (config.reps < 1 || config.test_n < 1) throw InvalidSpec("rate experiment needs reps >= 1 and test_n >= 1");
  if (config.hcm.max_coordinate() >= config.d_manifold) {
    throw InvalidSpec("HCM uses a coordinate beyond the manifold dimension");
  }
  const HcmFunction target(config.hcm, seed);
  const Eigen::Index n_max = config.n_grid.back();
  const auto n_d = config.ambient_dims.size();
  const auto n_n = config.n_grid.size();
  const auto reps = static_cast<std::size_t>(config.reps);
  std::vector<double> mse(n_d * n_n * reps, 0.0);

  parallel_for(static_cast<int>(mse.size()), [&](int task) {
    const auto idx = static_cast<std::size_t>(task);
    const std::size_t r = idx % reps;
    const std::size_t ni = (idx / reps) % n_n;
    const std::size_t di = idx / (reps * n_n);

    ManifoldSpec ms;
    ms.d_ambient = config.ambient_dims[di];
    ms.d_manifold = config.d_manifold;
    ms.curvature = config.curvature;
    ms.map_seed = seed + 7919 * static_cast<std::uint64_t>(ms.d_ambient);
    const SmoothEmbedding embedding(ms);

    // Training sets are nested prefixes of one pool per (d, rep).
    ms.n = n_max;
    ms.sample_seed = seed + 1000003ULL * (r + 1) + static_cast<std::uint64_t>(ms.d_ambient);
    const ManifoldSample pool = sample_manifold(embedding, ms);
    ms.n = config.test_n;
    ms.sample_seed = seed + 1000003ULL * (r + 1) + 500009ULL + static_cast<std::uint64_t>(ms.d_ambient);
    const ManifoldSample test = sample_manifold(embedding, ms);

    const Eigen::Index n = config.n_grid[ni];
    Vector y = target.evaluate(Matrix(pool.latent.topRows(n)));
    std::mt19937_64 rng(ms.sample_seed ^ 0x5bd1e995ULL);
    std::normal_distribution<double> noise(0.0, config.noise_sd > 0.0 ? config.noise_sd : 1.0);
    if (config.noise_sd > 0.0) {
      for (Eigen::Index i = 0; i < n_max; ++i) {
        const double e = noise(rng);
        if (i < n) y[i] += e;
      }
    }
    LearnerSpec spec = config.mlp;
    spec.seed += seed + r;
    const FittedLearner model = fit(spec, pool.z.topRows(n), y);
    const Vector truth = target.evaluate(test.latent);
    mse[idx] = (model.predict(test.z) - truth).squaredNorm() / static_cast<double>(config.test_n);
  });

  RateResult out;
  out.worst_case_pair = target.worst_case_pair();
  for (std::size_t di = 0; di < n_d; ++di) {
    std::vector<double> log_n, log_mse;
    for (std::size_t ni = 0; ni < n_n; ++ni) {
      double total = 0.0;
      for (std::size_t r = 0; r < reps; ++r) total += mse[(di * n_n + ni) * reps + r];
      const RatePoint p{config.ambient_dims[di], config.n_grid[ni], total / static_cast<double>(reps)};
      out.points.push_back(p);
      log_n.push_back(std::log(static_cast<double>(p.n)));
      log_mse.push_back(std::log(std::max(p.test_mse, 1e-300)));
    }
    RateSlope slope{config.ambient_dims[di], 0.0};
    if (n_n >= 2) slope.slope = stats::least_squares_line(log_n, log_mse).slope;
    out.slopes.push_back(slope);
  }
  return out;
}

}  // namespace repcause
