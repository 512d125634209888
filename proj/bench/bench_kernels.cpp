// Serial reference paths against their OpenMP counterparts. The thread
// count comes from REPCAUSE_THREADS, else the OpenMP maximum.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <cstdlib>
#include <random>

#include "repcause/experiments.hpp"
#include "repcause/forest.hpp"
#include "repcause/knn.hpp"
#include "repcause/parallel.hpp"

using namespace repcause;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

void BM_KnnSerial(benchmark::State& state) {
  const Matrix z = gaussian(state.range(0), 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(knn_serial(z, 25));
}

void BM_KnnParallel(benchmark::State& state) {
  const Matrix z = gaussian(state.range(0), 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(knn(z, 25));
}

void BM_ForestSerial(benchmark::State& state) {
  const Matrix x = gaussian(2000, 64, 2);
  const Vector y = x.col(0).array().sin().matrix() + 0.1 * gaussian(2000, 1, 3).col(0);
  ForestOptions options;
  options.trees = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(grow_forest_serial(x, y, SplitCriterion::variance, options, 4));
}

void BM_ForestParallel(benchmark::State& state) {
  const Matrix x = gaussian(2000, 64, 2);
  const Vector y = x.col(0).array().sin().matrix() + 0.1 * gaussian(2000, 1, 3).col(0);
  ForestOptions options;
  options.trees = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(grow_forest(x, y, SplitCriterion::variance, options, 4));
}

Generator coverage_generator() {
  ManifoldSpec m;
  m.n = 2000;
  m.frequency = 3.0;
  m.label_sharpness = 500.0;
  m.map_seed = 11;
  return label_generator(m, ConfoundingSpec{});
}

const std::vector<EstimatorConfig>& coverage_estimators() {
  static const std::vector<EstimatorConfig> est{parse_estimator("naive"), parse_estimator("dml-aipw:ols:logistic")};
  return est;
}

void BM_CoverageSerial(benchmark::State& state) {
  const Generator gen = coverage_generator();
  const auto reps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_coverage_experiment_serial(gen, coverage_estimators(), reps, 1));
}

void BM_CoverageParallel(benchmark::State& state) {
  const Generator gen = coverage_generator();
  const auto reps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_coverage_experiment(gen, coverage_estimators(), reps, 1));
}

void BM_SparsityCurveSerial(benchmark::State& state) {
  const Matrix z = gaussian(500, 50, 5);
  const Vector y = 3.0 * z.col(0) - 2.0 * z.col(1) + 1.5 * z.col(2);
  const RepresentationSet set(z, std::nullopt, y);
  PenaltyOptions penalty;
  penalty.lambda = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(sparsity_rotation_curve_serial(set, 5, penalty, 6));
}

void BM_SparsityCurveParallel(benchmark::State& state) {
  const Matrix z = gaussian(500, 50, 5);
  const Vector y = 3.0 * z.col(0) - 2.0 * z.col(1) + 1.5 * z.col(2);
  const RepresentationSet set(z, std::nullopt, y);
  PenaltyOptions penalty;
  penalty.lambda = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(sparsity_rotation_curve(set, 5, penalty, 6));
}

}  // namespace

BENCHMARK(BM_KnnSerial)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnParallel)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestSerial)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestParallel)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoverageSerial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoverageParallel)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SparsityCurveSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SparsityCurveParallel)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  const int threads = std::getenv("REPCAUSE_THREADS") ? resolve_threads(0) : omp_get_max_threads();
  set_num_threads(threads);
  benchmark::AddCustomContext("repcause_threads", std::to_string(threads));
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
