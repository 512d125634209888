// Linear nuisance learners: OLS, lasso, L2 logistic (IRLS) and L1 logistic.
#include <algorithm>
#include <cmath>
#include <limits>

#include "repcause/learners.hpp"

namespace repcause {

namespace {

constexpr double kCoefChangeTol = 1e-8;
constexpr int kMaxSweeps = 10000;

void require_finite(const Matrix& x, const Vector& y) {
  if (!x.allFinite() || !y.allFinite()) throw NumericsError("non-finite value in learner input");
  if (x.rows() != y.size()) throw DimensionError("feature rows and target length differ");
}

double soft_threshold(double v, double lambda) {
  if (v > lambda) return v - lambda;
  if (v < -lambda) return v + lambda;
  return 0.0;
}

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

struct Standardizer {
  Vector mean;
  Vector scale;  // population sd; 0 marks a constant column

  static Standardizer fit(const Matrix& x) {
    Standardizer s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - s.mean[j]).square().sum() / n;
      s.scale[j] = var > 1e-24 * std::max(1.0, s.mean[j] * s.mean[j]) ? std::sqrt(var) : 0.0;
    }
    return s;
  }

  Matrix apply(const Matrix& x) const {
    Matrix out = x.rowwise() - mean.transpose();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (scale[j] > 0.0) {
        out.col(j) /= scale[j];
      } else {
        out.col(j).setZero();
      }
    }
    return out;
  }

  // Maps standardized (intercept, slopes) back to the raw feature scale.
  LinearModel to_raw(double intercept, const Vector& beta, bool logistic) const {
    LinearModel model;
    model.logistic = logistic;
    model.coef = Vector::Zero(beta.size());
    model.intercept = intercept;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      if (scale[j] > 0.0 && beta[j] != 0.0) {
        model.coef[j] = beta[j] / scale[j];
        model.intercept -= model.coef[j] * mean[j];
      }
    }
    return model;
  }
};

struct CdResult {
  int sweeps = 0;
  bool converged = false;
};

// Cyclic coordinate descent on 1/2 th'G th - c'th + lambda * sum_{penalized} |th_j|.
// `gtheta` caches G*theta and is kept consistent with theta.
// Solves the stationarity equations on the current support with the current
// signs. Accepted only when the signs hold and every inactive coordinate
// satisfies its KKT condition, so the fixed point is unchanged.
bool polish_support(const Matrix& gram, const Vector& linear, const std::vector<char>& penalized, double lambda,
                    Vector& theta, Vector& gtheta) {
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (gram(j, j) > 0.0 && (theta[j] != 0.0 || !penalized[static_cast<std::size_t>(j)])) active.push_back(j);
  }
  if (active.empty()) return false;
  const Matrix g_aa = gram(active, active);
  Vector rhs = linear(active);
  for (std::size_t a = 0; a < active.size(); ++a) {
    const Eigen::Index j = active[a];
    if (penalized[static_cast<std::size_t>(j)]) rhs[static_cast<Eigen::Index>(a)] -= lambda * (theta[j] > 0.0 ? 1.0 : -1.0);
  }
  const Eigen::LDLT<Matrix> ldlt(g_aa);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-10 * ldlt.vectorD().maxCoeff()) {
    return false;
  }
  const Vector solved = ldlt.solve(rhs);
  Vector candidate = Vector::Zero(theta.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const Eigen::Index j = active[a];
    const double v = solved[static_cast<Eigen::Index>(a)];
    if (penalized[static_cast<std::size_t>(j)] && (v == 0.0 || (v > 0.0) != (theta[j] > 0.0))) return false;
    candidate[j] = v;
  }
  const Vector g_candidate = gram * candidate;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (candidate[j] != 0.0 || gram(j, j) <= 0.0) continue;
    if (std::abs(linear[j] - g_candidate[j]) > lambda) return false;
  }
  theta = candidate;
  gtheta = g_candidate;
  return true;
}

CdResult coordinate_descent(const Matrix& gram, const Vector& linear, const std::vector<char>& penalized,
                            double lambda, Vector& theta, Vector& gtheta) {
  CdResult result;
  const Eigen::Index p = theta.size();
  for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
    if (sweep % 10 == 0) polish_support(gram, linear, penalized, lambda, theta, gtheta);
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double gjj = gram(j, j);
      if (gjj <= 0.0) continue;
      const double rho = linear[j] - gtheta[j] + gjj * theta[j];
      const double updated = penalized[static_cast<std::size_t>(j)] ? soft_threshold(rho, lambda) / gjj : rho / gjj;
      const double delta = updated - theta[j];
      if (delta != 0.0) {
        theta[j] = updated;
        gtheta.noalias() += delta * gram.col(j);
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    result.sweeps = sweep;
    if (max_change < kCoefChangeTol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

void check_penalty(const PenaltyOptions& penalty, Eigen::Index n) {
  if (penalty.lambda && *penalty.lambda < 0.0) throw InvalidSpec("lambda must be >= 0");
  if (!penalty.lambda) {
    if (penalty.explicit_grid && penalty.lambda_grid.empty()) throw InvalidSpec("empty lambda grid");
    for (double l : penalty.lambda_grid) {
      if (!(l >= 0.0)) throw InvalidSpec("lambda grid entries must be >= 0");
    }
    if (penalty.lambda_grid.empty() && (penalty.grid_size < 1 || !(penalty.grid_ratio > 0.0))) {
      throw InvalidSpec("default lambda path needs grid_size >= 1 and grid_ratio > 0");
    }
    if (penalty.cv_folds < 2 || penalty.cv_folds > n) throw InvalidSpec("cv_folds must lie in [2, n]");
  }
}

std::vector<double> descending(std::vector<double> grid) {
  std::sort(grid.begin(), grid.end(), std::greater<>());
  return grid;
}

// ---------------------------------------------------------------------------
// Lasso on a standardized design.

struct LassoProblem {
  Standardizer standardizer;
  double y_mean = 0.0;
  Matrix gram;
  Vector linear;

  LassoProblem(const Matrix& x, const Vector& y) : standardizer(Standardizer::fit(x)) {
    const Matrix xs = standardizer.apply(x);
    const double n = static_cast<double>(x.rows());
    y_mean = y.mean();
    gram = Matrix::Zero(x.cols(), x.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(xs.transpose(), 1.0 / n);
    gram = gram.selfadjointView<Eigen::Lower>();
    linear = xs.transpose() * (y.array() - y_mean).matrix() / n;
  }

  double lambda_max() const { return linear.cwiseAbs().maxCoeff(); }
};

std::vector<double> resolve_grid(const PenaltyOptions& penalty, double lambda_max) {
  if (!penalty.lambda_grid.empty()) return descending(penalty.lambda_grid);
  return lambda_path(lambda_max, penalty.grid_size, penalty.grid_ratio);
}

}  // namespace

std::vector<double> lambda_path(double lambda_max, int grid_size, double grid_ratio) {
  if (grid_size < 1) throw InvalidSpec("grid_size must be >= 1");
  std::vector<double> grid;
  if (grid_size == 1 || lambda_max <= 0.0) {
    grid.push_back(std::max(lambda_max, 0.0));
    return grid;
  }
  const double lo = std::log(lambda_max * grid_ratio);
  const double hi = std::log(lambda_max);
  for (int i = 0; i < grid_size; ++i) {
    grid.push_back(std::exp(hi + (lo - hi) * i / (grid_size - 1)));
  }
  return grid;
}

double lasso_lambda_max(const Matrix& x, const Vector& y) { return LassoProblem(x, y).lambda_max(); }

FittedLearner fit_ols(const Matrix& x, const Vector& y) {
  require_finite(x, y);
  if (x.rows() < 1) throw InvalidSpec("OLS needs at least one row");
  const Vector x_mean = x.colwise().mean().transpose();
  const double y_mean = y.mean();
  const Matrix xc = x.rowwise() - x_mean.transpose();
  const Vector yc = y.array() - y_mean;

  Eigen::ColPivHouseholderQR<Matrix> qr(xc);
  Vector beta;
  TrainingDiagnostics diag;
  if (qr.rank() == x.cols()) {
    beta = qr.solve(yc);
  } else {
    // Rank deficient: tiny ridge, scaled by the mean column energy so it
    // commutes with orthogonal feature maps.
    Matrix gram = xc.transpose() * xc;
    const double ridge = 1e-10 * std::max(1.0, gram.trace() / static_cast<double>(x.cols()));
    gram.diagonal().array() += ridge;
    beta = gram.ldlt().solve(xc.transpose() * yc);
    diag.converged = false;
  }
  LinearModel model{y_mean - x_mean.dot(beta), beta, false};
  diag.final_loss = (yc - xc * beta).squaredNorm() / static_cast<double>(x.rows());
  diag.iterations = 1;
  LearnerSpec spec;
  spec.kind = LearnerKind::ols;
  return FittedLearner(spec, std::move(model), diag, x.cols());
}

FittedLearner fit_lasso(const Matrix& x, const Vector& y, const PenaltyOptions& penalty, std::uint64_t seed) {
  require_finite(x, y);
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw InvalidSpec("lasso needs n >= 2");
  check_penalty(penalty, n);

  LassoProblem full(x, y);
  const std::vector<char> penalized(static_cast<std::size_t>(d), 1);
  double chosen = 0.0;
  std::vector<double> path;

  if (penalty.lambda) {
    chosen = *penalty.lambda;
    path = {chosen};
  } else {
    const std::vector<double> grid = resolve_grid(penalty, full.lambda_max());
    std::vector<double> cv_error(grid.size(), 0.0);
    const FoldAssignment folds = make_folds(n, penalty.cv_folds, seed);
    for (int f = 0; f < folds.k; ++f) {
      const auto train = folds.out_of_fold(f);
      const auto test = folds.in_fold(f);
      const LassoProblem sub(x(train, Eigen::all), y(train));
      const Matrix x_test = sub.standardizer.apply(x(test, Eigen::all));
      const Vector y_test = y(test);
      Vector theta = Vector::Zero(d);
      Vector gtheta = Vector::Zero(d);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        coordinate_descent(sub.gram, sub.linear, penalized, grid[g], theta, gtheta);
        const Vector pred = (x_test * theta).array() + sub.y_mean;
        cv_error[g] += (y_test - pred).squaredNorm();
      }
    }
    const auto best = std::min_element(cv_error.begin(), cv_error.end()) - cv_error.begin();
    chosen = grid[static_cast<std::size_t>(best)];
    path.assign(grid.begin(), grid.begin() + best + 1);
  }

  Vector theta = Vector::Zero(d);
  Vector gtheta = Vector::Zero(d);
  CdResult cd;
  for (double lambda : path) cd = coordinate_descent(full.gram, full.linear, penalized, lambda, theta, gtheta);

  TrainingDiagnostics diag;
  diag.iterations = cd.sweeps;
  diag.converged = cd.converged;
  diag.selected_lambda = chosen;
  diag.final_loss = 0.5 * theta.dot(full.gram * theta) - full.linear.dot(theta) + chosen * theta.lpNorm<1>();
  LearnerSpec spec;
  spec.kind = LearnerKind::lasso;
  spec.penalty = penalty;
  spec.seed = seed;
  return FittedLearner(spec, full.standardizer.to_raw(full.y_mean, theta, false), diag, d);
}

// ---------------------------------------------------------------------------
// L2 logistic regression by damped Newton (IRLS). The penalty covers the
// intercept as well, so a constant treatment column is shrunk toward 1/2.

FittedLearner fit_logistic(const Matrix& x, const Vector& t, double l2_lambda) {
  require_finite(x, t);
  if (x.rows() < 2) throw InvalidSpec("logistic regression needs n >= 2");
  if (!(l2_lambda >= 0.0)) throw InvalidSpec("l2 lambda must be >= 0");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols() + 1;
  Matrix xa(n, p);
  xa.col(0).setOnes();
  xa.rightCols(x.cols()) = x;

  auto objective = [&](const Vector& theta) {
    const Vector eta = xa * theta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += softplus(eta[i]) - t[i] * eta[i];
    return total + 0.5 * l2_lambda * theta.squaredNorm();
  };

  Vector theta = Vector::Zero(p);
  double current = objective(theta);
  TrainingDiagnostics diag;
  diag.converged = false;
  for (int iter = 1; iter <= 100; ++iter) {
    diag.iterations = iter;
    const Vector eta = xa * theta;
    Vector prob(n), weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = sigmoid(eta[i]);
      weight[i] = prob[i] * (1.0 - prob[i]);
    }
    const Vector grad = xa.transpose() * (prob - t) + l2_lambda * theta;
    if (grad.norm() / static_cast<double>(n) < 1e-8) {
      diag.converged = true;
      break;
    }
    Matrix hessian = Matrix::Zero(p, p);
    const Matrix weighted = weight.cwiseSqrt().asDiagonal() * xa;
    hessian.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
    hessian = hessian.selfadjointView<Eigen::Lower>();
    hessian.diagonal().array() += l2_lambda;

    Vector step;
    Eigen::LDLT<Matrix> ldlt(hessian);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().minCoeff() > 1e-12 * hessian.diagonal().maxCoeff()) {
      step = ldlt.solve(grad);
    } else {
      step = hessian.completeOrthogonalDecomposition().solve(grad);
    }

    double scale = 1.0;
    Vector candidate = theta - step;
    double next = objective(candidate);
    int halvings = 0;
    while (!(next <= current) && halvings < 40) {
      scale *= 0.5;
      candidate = theta - scale * step;
      next = objective(candidate);
      ++halvings;
    }
    if (!(next <= current)) break;  // no descent possible at machine precision
    const double change = (candidate - theta).cwiseAbs().maxCoeff();
    theta = std::move(candidate);
    current = next;
    if (theta.tail(p - 1).norm() > 1e6 || std::abs(theta[0]) > 1e6) break;  // separation guard
    if (change < 1e-14) {
      diag.converged = true;
      break;
    }
  }
  if (l2_lambda == 0.0 && diag.converged) {
    // The gradient also vanishes along a separating direction; a perfect
    // in-sample fit means the coefficients are diverging, not converged.
    const Vector prob = (xa * theta).unaryExpr([](double v) { return sigmoid(v); });
    if ((prob - t).cwiseAbs().maxCoeff() < 1e-6) diag.converged = false;
  }
  diag.final_loss = current / static_cast<double>(n);
  LinearModel model{theta[0], theta.tail(p - 1), true};
  LearnerSpec spec;
  spec.kind = LearnerKind::logistic_l2;
  spec.l2_lambda = l2_lambda;
  return FittedLearner(spec, std::move(model), diag, x.cols());
}

// ---------------------------------------------------------------------------
// L1 logistic regression: proximal Newton. Each outer step solves the
// weighted-lasso quadratic model by soft-threshold coordinate steps, then
// backtracks on the true objective.

namespace {

struct L1LogisticProblem {
  Matrix xa;  // [1 | standardized x]
  Standardizer standardizer;

  L1LogisticProblem(const Matrix& x) : standardizer(Standardizer::fit(x)) {
    xa.resize(x.rows(), x.cols() + 1);
    xa.col(0).setOnes();
    xa.rightCols(x.cols()) = standardizer.apply(x);
  }

  double objective(const Vector& theta, const Vector& t, double lambda) const {
    const Vector eta = xa * theta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) total += softplus(eta[i]) - t[i] * eta[i];
    return total / static_cast<double>(eta.size()) + lambda * theta.tail(theta.size() - 1).lpNorm<1>();
  }

  double lambda_max(const Vector& t) const {
    const double tbar = t.mean();
    const Vector score = xa.rightCols(xa.cols() - 1).transpose() * (t.array() - tbar).matrix();
    return score.cwiseAbs().maxCoeff() / static_cast<double>(t.size());
  }

  CdResult solve(const Vector& t, double lambda, Vector& theta) const {
    const Eigen::Index n = xa.rows();
    const Eigen::Index p = xa.cols();
    std::vector<char> penalized(static_cast<std::size_t>(p), 1);
    penalized[0] = 0;
    double current = objective(theta, t, lambda);
    CdResult result;
    for (int outer = 1; outer <= 100; ++outer) {
      result.sweeps = outer;
      const Vector eta = xa * theta;
      Vector weight(n), work(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double prob = sigmoid(eta[i]);
        weight[i] = std::max(prob * (1.0 - prob), 1e-5);
        work[i] = eta[i] + (t[i] - prob) / weight[i];
      }
      const Matrix weighted = weight.cwiseSqrt().asDiagonal() * xa;
      Matrix gram = Matrix::Zero(p, p);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose(), 1.0 / static_cast<double>(n));
      gram = gram.selfadjointView<Eigen::Lower>();
      const Vector linear = xa.transpose() * weight.cwiseProduct(work) / static_cast<double>(n);

      Vector proposal = theta;
      Vector gtheta = gram * proposal;
      coordinate_descent(gram, linear, penalized, lambda, proposal, gtheta);
      const Vector direction = proposal - theta;
      double step = 1.0;
      double next = objective(theta + direction, t, lambda);
      while (!(next <= current) && step > 1e-10) {
        step *= 0.5;
        next = objective(theta + step * direction, t, lambda);
      }
      if (!(next <= current)) {
        result.converged = direction.cwiseAbs().maxCoeff() < 1e-6;
        break;
      }
      theta += step * direction;
      current = next;
      if ((step * direction).cwiseAbs().maxCoeff() < kCoefChangeTol) {
        result.converged = true;
        break;
      }
      if (theta.norm() > 1e6) break;
    }
    return result;
  }
};

double held_out_log_loss(const Matrix& xa, const Vector& theta, const Vector& t) {
  const Vector eta = xa * theta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) total += softplus(eta[i]) - t[i] * eta[i];
  return total;
}

Vector initial_logistic_theta(const Vector& t, Eigen::Index p) {
  Vector theta = Vector::Zero(p);
  const double rate = std::clamp(t.mean(), 1e-6, 1.0 - 1e-6);
  theta[0] = std::log(rate / (1.0 - rate));
  return theta;
}

}  // namespace

FittedLearner fit_logistic_l1(const Matrix& x, const Vector& t, const PenaltyOptions& penalty, std::uint64_t seed) {
  require_finite(x, t);
  const Eigen::Index n = x.rows();
  if (n < 2) throw InvalidSpec("logistic regression needs n >= 2");
  check_penalty(penalty, n);
  const L1LogisticProblem full(x);
  const Eigen::Index p = x.cols() + 1;

  double chosen = 0.0;
  std::vector<double> path;
  if (penalty.lambda) {
    chosen = *penalty.lambda;
    path = {chosen};
  } else {
    const std::vector<double> grid = resolve_grid(penalty, full.lambda_max(t));
    std::vector<double> cv_loss(grid.size(), 0.0);
    const FoldAssignment folds = make_folds(n, penalty.cv_folds, seed);
    for (int f = 0; f < folds.k; ++f) {
      const auto train = folds.out_of_fold(f);
      const auto test = folds.in_fold(f);
      const L1LogisticProblem sub(x(train, Eigen::all));
      const Vector t_train = t(train);
      Matrix xa_test(static_cast<Eigen::Index>(test.size()), p);
      xa_test.col(0).setOnes();
      xa_test.rightCols(p - 1) = sub.standardizer.apply(x(test, Eigen::all));
      Vector theta = initial_logistic_theta(t_train, p);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        sub.solve(t_train, grid[g], theta);
        cv_loss[g] += held_out_log_loss(xa_test, theta, t(test));
      }
    }
    const auto best = std::min_element(cv_loss.begin(), cv_loss.end()) - cv_loss.begin();
    chosen = grid[static_cast<std::size_t>(best)];
    path.assign(grid.begin(), grid.begin() + best + 1);
  }

  Vector theta = initial_logistic_theta(t, p);
  CdResult fit_result;
  for (double lambda : path) fit_result = full.solve(t, lambda, theta);

  TrainingDiagnostics diag;
  diag.iterations = fit_result.sweeps;
  diag.converged = fit_result.converged;
  diag.selected_lambda = chosen;
  diag.final_loss = full.objective(theta, t, chosen);
  LearnerSpec spec;
  spec.kind = LearnerKind::logistic_l1;
  spec.penalty = penalty;
  spec.seed = seed;
  return FittedLearner(spec, full.standardizer.to_raw(theta[0], theta.tail(p - 1), true), diag, x.cols());
}

}  // namespace repcause
