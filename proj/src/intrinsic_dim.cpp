#include "repcause/intrinsic_dim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "repcause/errors.hpp"
#include "repcause/knn.hpp"
#include "repcause/parallel.hpp"
#include "repcause/stats.hpp"

namespace repcause {

const char* to_string(IdMethod method) {
  switch (method) {
    case IdMethod::mle: return "mle";
    case IdMethod::ess: return "ess";
    case IdMethod::lpca: return "lpca";
  }
  return "?";
}

IdMethod parse_id_method(const std::string& name) {
  if (name == "mle") return IdMethod::mle;
  if (name == "ess") return IdMethod::ess;
  if (name == "lpca") return IdMethod::lpca;
  throw InvalidSpec("unknown intrinsic-dimension method '" + name + "'");
}

namespace {

double clamp_to_ambient(double value, Eigen::Index d) {
  return std::clamp(value, 1.0, static_cast<double>(d));
}

// Rows of z for point i followed by its neighbours.
Eigen::MatrixXd neighbourhood(const Eigen::MatrixXd& z, const KnnResult& nn, Eigen::Index i, bool include_self) {
  const Eigen::Index k = nn.indices.cols();
  Eigen::MatrixXd pts(k + (include_self ? 1 : 0), z.cols());
  Eigen::Index row = 0;
  if (include_self) pts.row(row++) = z.row(i);
  for (Eigen::Index c = 0; c < k; ++c) pts.row(row++) = z.row(nn.indices(i, c));
  return pts;
}

}  // namespace

IdEstimate id_mle(const Eigen::MatrixXd& z, int k, bool harmonic) {
  if (k < 2) throw InvalidSpec("MLE needs k >= 2");
  const KnnResult nn = knn(z, k);
  IdEstimate est{IdMethod::mle, k, 0.0, {}, nn.warnings};
  est.per_point_values.resize(static_cast<std::size_t>(z.rows()));
  // Per point, S = sum_j ln(T_k / T_j). (k - 2) / S is unbiased for the
  // local dimension; (k - 1) / S overshoots by (k - 1) / (k - 2).
  const double unbiased = static_cast<double>(std::max(k - 2, 1));
  double mean_log_ratio = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double tk = nn.distances(i, k - 1);
    double sum = 0.0;
    for (int j = 0; j < k - 1; ++j) sum += std::log(tk / nn.distances(i, j));
    mean_log_ratio += sum / static_cast<double>(k - 1);
    // All k distances equal gives an infinite local dimension.
    est.per_point_values[static_cast<std::size_t>(i)] =
        sum > 0.0 ? unbiased / sum : std::numeric_limits<double>::infinity();
  }
  mean_log_ratio /= static_cast<double>(z.rows());
  double value = 0.0;
  if (harmonic) {
    // Inverse of the pooled mean log ratio.
    value = mean_log_ratio > 0.0 ? 1.0 / mean_log_ratio : std::numeric_limits<double>::infinity();
  } else {
    value = stats::mean(est.per_point_values);
  }
  est.value = clamp_to_ambient(value, z.cols());
  return est;
}

double ess_reference(int m) {
  if (m < 1) throw InvalidSpec("reference dimension must be >= 1");
  if (m == 1) return 0.0;
  const double a = std::lgamma(0.5 * m);
  return std::exp(2.0 * a - std::lgamma(0.5 * (m - 1)) - std::lgamma(0.5 * (m + 1)));
}

double ess_statistic(const Eigen::MatrixXd& points) {
  const Eigen::MatrixXd centred = points.rowwise() - points.colwise().mean();
  const Eigen::MatrixXd gram = centred * centred.transpose();
  double area = 0.0, norms = 0.0;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < gram.rows(); ++j) {
      const double nn = gram(i, i) * gram(j, j);
      norms += std::sqrt(nn);
      area += std::sqrt(std::max(0.0, nn - gram(i, j) * gram(i, j)));
    }
  }
  if (!(norms > 0.0)) return -1.0;
  return area / norms;
}

double ess_invert(double statistic, int max_dim) {
  if (statistic <= 0.0) return 1.0;
  double previous = ess_reference(1);
  for (int m = 2; m <= max_dim; ++m) {
    const double current = ess_reference(m);
    if (statistic <= current) return (m - 1) + (statistic - previous) / (current - previous);
    previous = current;
  }
  return max_dim;
}

IdEstimate id_ess(const Eigen::MatrixXd& z, int k) {
  if (k < 2) throw InvalidSpec("ESS needs k >= 2");
  const KnnResult nn = knn(z, k);
  const int max_dim = std::min(k - 1, 64);
  std::vector<double> local(static_cast<std::size_t>(z.rows()), -1.0);
  parallel_for(static_cast<int>(z.rows()), [&](int i) {
    const double s = ess_statistic(neighbourhood(z, nn, i, true));
    if (s >= 0.0) local[static_cast<std::size_t>(i)] = ess_invert(s, max_dim);
  });
  IdEstimate est{IdMethod::ess, k, 0.0, {}, nn.warnings};
  for (double v : local) {
    if (v >= 0.0) est.per_point_values.push_back(v);
  }
  const auto skipped = local.size() - est.per_point_values.size();
  if (skipped > 0) est.warnings.push_back(std::to_string(skipped) + " neighbourhoods of rank 0 skipped");
  if (est.per_point_values.empty()) throw NumericsError("every ESS neighbourhood is degenerate");
  est.value = clamp_to_ambient(stats::median(est.per_point_values), z.cols());
  return est;
}

IdEstimate id_lpca(const Eigen::MatrixXd& z, int k, double alpha) {
  if (k < 2) throw InvalidSpec("lPCA needs k >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidSpec("alpha must lie in (0, 1)");
  const KnnResult nn = knn(z, k);
  std::vector<double> local(static_cast<std::size_t>(z.rows()), 0.0);
  parallel_for(static_cast<int>(z.rows()), [&](int i) {
    const Eigen::MatrixXd pts = neighbourhood(z, nn, i, false);
    const Eigen::MatrixXd centred = pts.rowwise() - pts.colwise().mean();
    // The Gram matrix shares the non-zero spectrum of the covariance and is k x k.
    const Eigen::MatrixXd gram = centred * centred.transpose() / static_cast<double>(k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double top = ev.maxCoeff();
    if (top > 0.0) local[static_cast<std::size_t>(i)] = static_cast<double>((ev.array() > alpha * top).count());
  });
  IdEstimate est{IdMethod::lpca, k, 0.0, {}, nn.warnings};
  for (double v : local) {
    if (v > 0.0) est.per_point_values.push_back(v);
  }
  const auto skipped = local.size() - est.per_point_values.size();
  if (skipped > 0) est.warnings.push_back(std::to_string(skipped) + " zero-covariance neighbourhoods excluded");
  if (est.per_point_values.empty()) throw NumericsError("every lPCA neighbourhood has zero covariance");
  est.value = clamp_to_ambient(stats::median(est.per_point_values), z.cols());
  return est;
}

}  // namespace repcause
