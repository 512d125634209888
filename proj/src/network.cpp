#include "repcause/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "repcause/errors.hpp"

namespace repcause {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void activate(MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::identity: break;
    case Activation::sigmoid: z = (1.0 + (-z.array()).exp()).inverse().matrix(); break;
  }
}

// d activation / d pre-activation, expressed through pre-activation z and output a.
MatrixXd activation_slope(const MatrixXd& z, const MatrixXd& a, Activation act) {
  switch (act) {
    case Activation::relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::identity: return MatrixXd::Ones(z.rows(), z.cols());
    case Activation::sigmoid: return (a.array() * (1.0 - a.array())).matrix();
  }
  return MatrixXd();
}

double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

}  // namespace

Network::Network(std::vector<int> sizes, std::vector<Activation> activations, std::uint64_t seed)
    : sizes_(std::move(sizes)), activations_(std::move(activations)) {
  if (sizes_.size() < 2) throw InvalidSpec("network needs at least an input and an output layer");
  if (activations_.size() != sizes_.size() - 1) throw InvalidSpec("one activation per layer required");
  for (int s : sizes_) {
    if (s < 1) throw InvalidSpec("every layer needs at least one unit");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double scale = std::sqrt(2.0 / sizes_[l]);  // He
    MatrixXd w(sizes_[l + 1], sizes_[l]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * normal(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(VectorXd::Zero(sizes_[l + 1]));
  }
}

MatrixXd Network::forward_prefix(const MatrixXd& x, std::size_t upto) const {
  MatrixXd a = x;
  for (std::size_t l = 0; l < upto; ++l) {
    MatrixXd z = a * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    activate(z, activations_[l]);
    a = std::move(z);
  }
  return a;
}

MatrixXd Network::forward_suffix(const MatrixXd& h, std::size_t from) const {
  MatrixXd a = h;
  for (std::size_t l = from; l < weights_.size(); ++l) {
    MatrixXd z = a * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    activate(z, activations_[l]);
    a = std::move(z);
  }
  return a;
}

MatrixXd Network::forward(const MatrixXd& x) const { return forward_prefix(x, weights_.size()); }

double Network::loss(const MatrixXd& x, const MatrixXd& target, Loss kind) const {
  MatrixXd a = forward_prefix(x, weights_.size() - 1);
  MatrixXd z = a * weights_.back().transpose();
  z.rowwise() += biases_.back().transpose();
  const double count = static_cast<double>(z.size());
  if (kind == Loss::logistic) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z.data()[i]) - target.data()[i] * z.data()[i];
    return total / count;
  }
  activate(z, activations_.back());
  return (z - target).squaredNorm() / count;
}

double Network::loss_and_gradient(const MatrixXd& x, const MatrixXd& target, Loss kind, Gradient& grad) const {
  const std::size_t layers = weights_.size();
  std::vector<MatrixXd> pre(layers);
  std::vector<MatrixXd> post(layers + 1);
  post[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    pre[l] = post[l] * weights_[l].transpose();
    pre[l].rowwise() += biases_[l].transpose();
    post[l + 1] = pre[l];
    activate(post[l + 1], activations_[l]);
  }

  const double count = static_cast<double>(target.size());
  double loss_value = 0.0;
  MatrixXd delta;
  if (kind == Loss::logistic) {
    if (activations_.back() != Activation::sigmoid) throw InvalidSpec("logistic loss needs a sigmoid output");
    const MatrixXd& z = pre.back();
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      loss_value += softplus(z.data()[i]) - target.data()[i] * z.data()[i];
    }
    loss_value /= count;
    delta = (post.back() - target) / count;
  } else {
    const MatrixXd residual = post.back() - target;
    loss_value = residual.squaredNorm() / count;
    delta = (2.0 / count) * residual.cwiseProduct(activation_slope(pre.back(), post.back(), activations_.back()));
  }

  grad.weights.resize(layers);
  grad.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l].noalias() = delta.transpose() * post[l];
    grad.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      MatrixXd back = delta * weights_[l];
      delta = back.cwiseProduct(activation_slope(pre[l - 1], post[l], activations_[l - 1]));
    }
  }
  return loss_value;
}

VectorXd Network::flat_parameters() const {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) total += weights_[l].size() + biases_[l].size();
  VectorXd theta(total);
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    theta.segment(pos, weights_[l].size()) = weights_[l].reshaped();
    pos += weights_[l].size();
    theta.segment(pos, biases_[l].size()) = biases_[l];
    pos += biases_[l].size();
  }
  return theta;
}

void Network::set_flat_parameters(const VectorXd& theta) {
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weights_[l].reshaped() = theta.segment(pos, weights_[l].size());
    pos += weights_[l].size();
    biases_[l] = theta.segment(pos, biases_[l].size());
    pos += biases_[l].size();
  }
  if (pos != theta.size()) throw DimensionError("parameter vector length mismatch");
}

VectorXd Network::flatten(const Gradient& grad) {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < grad.weights.size(); ++l) total += grad.weights[l].size() + grad.biases[l].size();
  VectorXd flat(total);
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < grad.weights.size(); ++l) {
    flat.segment(pos, grad.weights[l].size()) = grad.weights[l].reshaped();
    pos += grad.weights[l].size();
    flat.segment(pos, grad.biases[l].size()) = grad.biases[l];
    pos += grad.biases[l].size();
  }
  return flat;
}

AdamResult train_adam(Network& net, const MatrixXd& x, const MatrixXd& target, Loss kind,
                      const AdamOptions& options) {
  const Eigen::Index n = x.rows();
  if (n < 1) throw InvalidSpec("cannot train on an empty sample");
  if (target.rows() != n || target.cols() != net.n_outputs() || x.cols() != net.n_inputs()) {
    throw DimensionError("training data does not match network shape");
  }
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<Eigen::Index>(std::ceil(options.validation_fraction * static_cast<double>(n)));
  if (n < 10 || options.validation_fraction <= 0.0) n_val = 0;
  std::vector<Eigen::Index> train(order.begin(), order.end() - n_val);
  std::vector<Eigen::Index> val(order.end() - n_val, order.end());
  const MatrixXd x_val = x(val, Eigen::all);
  const MatrixXd y_val = target(val, Eigen::all);

  auto& weights = net.weights();
  auto& biases = net.biases();
  std::vector<MatrixXd> m_w, v_w;
  std::vector<VectorXd> m_b, v_b;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    m_w.push_back(MatrixXd::Zero(weights[l].rows(), weights[l].cols()));
    v_w.push_back(MatrixXd::Zero(weights[l].rows(), weights[l].cols()));
    m_b.push_back(VectorXd::Zero(biases[l].size()));
    v_b.push_back(VectorXd::Zero(biases[l].size()));
  }

  AdamResult result;
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_params = net.flat_parameters();
  int since_best = 0;
  long step = 0;
  const auto batch = static_cast<std::size_t>(std::max(1, options.batch_size));
  Network::Gradient grad;
  MatrixXd xb, yb;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const std::size_t stop = std::min(train.size(), start + batch);
      const std::vector<Eigen::Index> idx(train.begin() + static_cast<std::ptrdiff_t>(start),
                                          train.begin() + static_cast<std::ptrdiff_t>(stop));
      xb = x(idx, Eigen::all);
      yb = target(idx, Eigen::all);
      const double batch_loss = net.loss_and_gradient(xb, yb, kind, grad);
      if (!std::isfinite(batch_loss)) {
        throw NumericsError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      epoch_loss += batch_loss * static_cast<double>(stop - start);
      ++step;
      const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      const double lr = options.learning_rate * std::sqrt(c2) / c1;
      for (std::size_t l = 0; l < weights.size(); ++l) {
        m_w[l] = options.beta1 * m_w[l] + (1.0 - options.beta1) * grad.weights[l];
        v_w[l] = options.beta2 * v_w[l] + (1.0 - options.beta2) * grad.weights[l].cwiseAbs2();
        weights[l].array() -= lr * m_w[l].array() / (v_w[l].array().sqrt() + options.epsilon);
        m_b[l] = options.beta1 * m_b[l] + (1.0 - options.beta1) * grad.biases[l];
        v_b[l] = options.beta2 * v_b[l] + (1.0 - options.beta2) * grad.biases[l].cwiseAbs2();
        biases[l].array() -= lr * m_b[l].array() / (v_b[l].array().sqrt() + options.epsilon);
      }
    }
    result.final_train_loss = epoch_loss / static_cast<double>(train.size());
    result.epochs_run = epoch + 1;

    if (n_val == 0) continue;
    const double val_loss = net.loss(x_val, y_val, kind);
    if (!std::isfinite(val_loss)) {
      throw NumericsError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    if (val_loss < best - 1e-4 * std::abs(best) || !std::isfinite(best)) {
      best = val_loss;
      best_params = net.flat_parameters();
      since_best = 0;
    } else if (++since_best >= options.patience) {
      result.early_stopped = true;
      break;
    }
  }
  if (n_val > 0) {
    net.set_flat_parameters(best_params);
    result.best_validation_loss = best;
  }
  return result;
}

}  // namespace repcause
