#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "nevo/activation.hpp"
#include "nevo/mlp.hpp"
#include "nevo/rng.hpp"

namespace nevo {

// Positive step size bounding the contribution of one perturbation block.
struct MutationStep {
  double value;
  explicit MutationStep(double v) : value(v) {
    if (!std::isfinite(v) || v <= 0.0)
      throw std::invalid_argument("mutation step must be positive and finite");
  }
};

// One neuron of a perturbation chain. Neuron i reads every activation of the
// parent's base layer i-1 (layer 0 being the standardized inputs) plus, from
// the second neuron on, the previous chain neuron. Chains never feed back
// into the base network.
struct ChainNeuron {
  std::vector<double> input_weights;
  double chain_weight = 0.0;
  bool has_chain_input = false;
  double bias = 0.0;
  Activation activation = Activation::Tanh;
};

// The random component one inflate adds: a chain of neurons alongside the
// parent's base layers, ending in a Tanh neuron scaled by output_weight. With
// output_weight drawn from [0, ms] the per-row contribution is bounded by ms
// in absolute value. Semantics over both splits are computed once, here, and
// never again.
struct PerturbationBlock {
  std::vector<ChainNeuron> chain;
  double output_weight = 0.0;
  Semantics cached_train;
  Semantics cached_test;

  std::size_t depth_span() const { return chain.size(); }
};

// Evaluates one chain against precomputed base activations. Exposed for the
// materialized (cache-free) evaluation path as well.
double chain_output_row(const PerturbationBlock& block, const ActivationTable& acts, std::size_t row);

// Builds a block against a parent's activation tables. The chain length is
// ceil(span_fraction * n) for a parent with n layers, attached to the first
// that many layers. Internal weights and biases are uniform in [-1, 1]; the
// last neuron is always Tanh; earlier neurons draw activations from pool.
PerturbationBlock build_perturbation(const ActivationTable& train_acts,
                                     const ActivationTable& test_acts, MutationStep ms,
                                     double span_fraction, const std::vector<Activation>& pool,
                                     RandomStream& rng);

}  // namespace nevo
