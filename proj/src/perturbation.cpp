#include "nevo/perturbation.hpp"

namespace nevo {

double chain_output_row(const PerturbationBlock& block, const ActivationTable& acts,
                        std::size_t row) {
  double prev = 0.0;
  for (std::size_t i = 0; i < block.chain.size(); ++i) {
    const ChainNeuron& neuron = block.chain[i];
    const double* base = acts.row(i, row);
    double z = neuron.bias;
    for (std::size_t j = 0; j < neuron.input_weights.size(); ++j)
      z += neuron.input_weights[j] * base[j];
    if (neuron.has_chain_input) z += neuron.chain_weight * prev;
    prev = activate(neuron.activation, z);
  }
  return prev;
}

PerturbationBlock build_perturbation(const ActivationTable& train_acts,
                                     const ActivationTable& test_acts, MutationStep ms,
                                     double span_fraction, const std::vector<Activation>& pool,
                                     RandomStream& rng) {
  if (!(span_fraction > 0.0) || span_fraction > 1.0)
    throw std::invalid_argument("build_perturbation: span fraction must be in (0, 1]");
  if (pool.empty()) throw std::invalid_argument("build_perturbation: empty activation pool");
  if (train_acts.widths.size() < 2)
    throw std::invalid_argument("build_perturbation: activation table has no layers");
  if (train_acts.widths != test_acts.widths)
    throw std::invalid_argument("build_perturbation: train/test table width mismatch");

  const std::size_t n_layers = train_acts.widths.size() - 1;
  const std::size_t span = static_cast<std::size_t>(
      std::ceil(span_fraction * static_cast<double>(n_layers)));

  PerturbationBlock block;
  block.chain.resize(span);
  for (std::size_t i = 0; i < span; ++i) {
    ChainNeuron& neuron = block.chain[i];
    neuron.input_weights.resize(train_acts.widths[i]);
    for (double& w : neuron.input_weights) w = rng.uniform(-1.0, 1.0);
    if (i > 0) {
      neuron.has_chain_input = true;
      neuron.chain_weight = rng.uniform(-1.0, 1.0);
    }
    neuron.bias = rng.uniform(-1.0, 1.0);
    neuron.activation =
        i + 1 == span ? Activation::Tanh : pool[rng.below(pool.size())];
  }
  block.output_weight = rng.uniform(0.0, ms.value);

  block.cached_train.resize(train_acts.rows);
  for (std::size_t r = 0; r < train_acts.rows; ++r)
    block.cached_train[r] = block.output_weight * chain_output_row(block, train_acts, r);
  block.cached_test.resize(test_acts.rows);
  for (std::size_t r = 0; r < test_acts.rows; ++r)
    block.cached_test[r] = block.output_weight * chain_output_row(block, test_acts, r);
  return block;
}

}  // namespace nevo
