#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nevo/dataset.hpp"
#include "nevo/mlp.hpp"

namespace nevo {

struct OptimizerConfig {
  double learning_rate = 0.01;
  int epochs = 100;
};

// Raised when the training loss goes non-finite; the message names the epoch.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(int epoch)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

double mse(const MlpNetwork& net, const Dataset& data);

// Full-batch gradient of the mean squared error, flattened in canonical
// order: layer by layer, each layer's weights row-major (per neuron, per
// input) followed by that layer's biases. Length equals parameter_count().
std::vector<double> gradient(const MlpNetwork& net, const Dataset& data);

struct FitResult {
  MlpNetwork network;
  // MSE at the start of each epoch, one entry per epoch run.
  std::vector<double> loss_curve;
};

// Plain full-batch gradient descent with a constant learning rate. Throws
// DivergenceError if the loss goes non-finite.
FitResult train_backprop(const MlpNetwork& net, const Dataset& data, const OptimizerConfig& opt);

}  // namespace nevo
