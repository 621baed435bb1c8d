#pragma once

#include <cstddef>
#include <vector>

#include "nevo/activation.hpp"
#include "nevo/dataset.hpp"
#include "nevo/rng.hpp"

namespace nevo {

// Dense layer with a per-neuron activation choice.
struct Layer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weights;  // row-major out_dim x in_dim
  std::vector<double> biases;   // out_dim
  std::vector<Activation> activations;  // out_dim

  double weight(std::size_t neuron, std::size_t input) const {
    return weights[neuron * in_dim + input];
  }
};

// Feedforward regression network. The last layer always has exactly one
// neuron with Identity activation so outputs are unbounded.
struct MlpNetwork {
  std::size_t input_dim = 0;
  std::vector<Layer> layers;

  std::size_t hidden_layer_count() const { return layers.empty() ? 0 : layers.size() - 1; }
  // Hidden plus output neurons; input features do not count.
  std::size_t neuron_count() const;
  std::size_t parameter_count() const;
};

// Throws std::invalid_argument if layer dimensions do not chain up or the
// output layer is not a single Identity neuron.
void validate(const MlpNetwork& net);

struct ArchitectureRanges {
  int depth_min = 1;  // hidden layer count
  int depth_max = 3;
  int width_min = 4;
  int width_max = 16;
  double weight_min = -1.0;
  double weight_max = 1.0;
  std::vector<Activation> pool{Activation::Tanh, Activation::ReLU, Activation::Sigmoid};
};

// Fixed draw order (depth, then widths, then per layer: per neuron weights,
// bias, activation) so a seed pins the network down exactly.
MlpNetwork random_mlp(std::size_t input_dim, const ArchitectureRanges& ranges, RandomStream& rng);

using Semantics = std::vector<double>;

double forward_row(const MlpNetwork& net, const double* x);
Semantics forward(const MlpNetwork& net, const Dataset& data);

// Per-layer activations over a whole dataset. Index 0 holds the raw input
// matrix; index l holds layer l's outputs. Mutation chains attach to these.
struct ActivationTable {
  std::size_t rows = 0;
  std::vector<std::size_t> widths;          // widths[0] == input_dim
  std::vector<std::vector<double>> values;  // values[l]: rows x widths[l], row-major

  const double* row(std::size_t layer, std::size_t r) const {
    return values[layer].data() + r * widths[layer];
  }
};

ActivationTable activation_table(const MlpNetwork& net, const Dataset& data);

}  // namespace nevo
