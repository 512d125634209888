#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace repcause {

enum class Activation { relu, identity, sigmoid };

enum class Loss { squared, logistic };

// Fully-connected feed-forward network, samples in rows. Layer l maps
// sizes[l] -> sizes[l+1] with activations[l].
class Network {
 public:
  Network() = default;
  Network(std::vector<int> sizes, std::vector<Activation> activations, std::uint64_t seed);

  int n_inputs() const { return sizes_.front(); }
  int n_outputs() const { return sizes_.back(); }
  std::size_t n_layers() const { return weights_.size(); }
  const std::vector<int>& sizes() const { return sizes_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  // Output of layer `upto` (exclusive end), e.g. the bottleneck of an autoencoder.
  Eigen::MatrixXd forward_prefix(const Eigen::MatrixXd& x, std::size_t upto) const;
  Eigen::MatrixXd forward_suffix(const Eigen::MatrixXd& h, std::size_t from) const;

  double loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& target, Loss kind) const;

  struct Gradient {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
  };
  // Mean loss over samples and outputs; fills `grad` by backpropagation.
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& target, Loss kind,
                           Gradient& grad) const;

  Eigen::VectorXd flat_parameters() const;
  void set_flat_parameters(const Eigen::VectorXd& theta);
  static Eigen::VectorXd flatten(const Gradient& grad);

  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }

 private:
  std::vector<int> sizes_;
  std::vector<Activation> activations_;
  std::vector<Eigen::MatrixXd> weights_;  // out x in
  std::vector<Eigen::VectorXd> biases_;
};

struct AdamOptions {
  int epochs = 200;
  double learning_rate = 1e-3;
  int batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double validation_fraction = 0.1;
  int patience = 10;
  std::uint64_t seed = 0;
};

struct AdamResult {
  double final_train_loss = 0.0;
  double best_validation_loss = 0.0;
  int epochs_run = 0;
  bool early_stopped = false;
};

// Mini-batch Adam with early stopping on a held-out split; restores the
// best-validation parameters. Throws NumericsError on a non-finite loss.
AdamResult train_adam(Network& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& target, Loss kind,
                      const AdamOptions& options);

}  // namespace repcause
