#include "nevo/composite.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

namespace nevo {

namespace {

std::uint64_t next_lineage_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

}  // namespace

CompositeIndividual CompositeIndividual::from_base(MlpNetwork base,
                                                   std::shared_ptr<const Dataset> train,
                                                   std::shared_ptr<const Dataset> test) {
  validate(base);
  if (!train || !test) throw std::invalid_argument("from_base: null dataset");
  CompositeIndividual ind;
  ind.base_ = std::make_shared<const MlpNetwork>(std::move(base));
  ind.train_ = std::move(train);
  ind.test_ = std::move(test);
  ind.train_acts_ = std::make_shared<const ActivationTable>(activation_table(*ind.base_, *ind.train_));
  ind.test_acts_ = std::make_shared<const ActivationTable>(activation_table(*ind.base_, *ind.test_));
  ind.sum_train_ = ind.train_acts_->values.back();
  ind.sum_test_ = ind.test_acts_->values.back();
  ind.lineage_id_ = next_lineage_id();
  ind.refresh_fitness();
  return ind;
}

void CompositeIndividual::refresh_fitness() {
  train_rmse_ = rmse(sum_train_, train_->targets);
  test_rmse_ = rmse(sum_test_, test_->targets);
}

void CompositeIndividual::recount_cache_updates() {
  ++cache_updates_;
  if (cache_updates_ < 100) return;
  sum_train_ = train_acts_->values.back();
  sum_test_ = test_acts_->values.back();
  for (const auto& block : blocks_) {
    for (std::size_t r = 0; r < sum_train_.size(); ++r) sum_train_[r] += block->cached_train[r];
    for (std::size_t r = 0; r < sum_test_.size(); ++r) sum_test_[r] += block->cached_test[r];
  }
  cache_updates_ = 0;
}

std::size_t CompositeIndividual::node_count() const {
  std::size_t n = base_->neuron_count();
  for (const auto& block : blocks_) n += block->depth_span();
  return n;
}

FitnessPair CompositeIndividual::evaluate_incremental() const {
  return {rmse(sum_train_, train_->targets), rmse(sum_test_, test_->targets)};
}

CompositeIndividual inflate(const CompositeIndividual& parent,
                            std::shared_ptr<const PerturbationBlock> block) {
  if (!block) throw std::invalid_argument("inflate: null block");
  if (block->cached_train.size() != parent.sum_train_.size() ||
      block->cached_test.size() != parent.sum_test_.size())
    throw std::invalid_argument("inflate: block semantics length mismatch");

  CompositeIndividual child = parent;
  child.blocks_.push_back(std::move(block));
  const PerturbationBlock& b = *child.blocks_.back();
  for (std::size_t r = 0; r < child.sum_train_.size(); ++r) child.sum_train_[r] += b.cached_train[r];
  for (std::size_t r = 0; r < child.sum_test_.size(); ++r) child.sum_test_[r] += b.cached_test[r];
  child.recount_cache_updates();
  child.refresh_fitness();
  child.lineage_id_ = next_lineage_id();
  return child;
}

CompositeIndividual deflate(const CompositeIndividual& parent, std::size_t block_index) {
  if (parent.blocks_.empty()) throw std::logic_error("deflate: individual has no blocks");
  if (block_index >= parent.blocks_.size())
    throw std::logic_error("deflate: block index " + std::to_string(block_index) +
                           " out of range");

  CompositeIndividual child = parent;
  const std::shared_ptr<const PerturbationBlock> removed = child.blocks_[block_index];
  child.blocks_.erase(child.blocks_.begin() + static_cast<std::ptrdiff_t>(block_index));
  for (std::size_t r = 0; r < child.sum_train_.size(); ++r)
    child.sum_train_[r] -= removed->cached_train[r];
  for (std::size_t r = 0; r < child.sum_test_.size(); ++r)
    child.sum_test_[r] -= removed->cached_test[r];
  child.recount_cache_updates();
  child.refresh_fitness();
  child.lineage_id_ = next_lineage_id();
  return child;
}

double MaterializedComposite::forward_row(const double* x, std::size_t dim) const {
  if (dim != base.input_dim) throw std::invalid_argument("materialized forward: dim mismatch");
  // Base layer activations, kept per layer because chains tap them.
  std::vector<std::vector<double>> acts(base.layers.size() + 1);
  acts[0].assign(x, x + dim);
  for (std::size_t l = 0; l < base.layers.size(); ++l) {
    const Layer& layer = base.layers[l];
    acts[l + 1].assign(layer.out_dim, 0.0);
    for (std::size_t n = 0; n < layer.out_dim; ++n) {
      double z = layer.biases[n];
      const double* w = layer.weights.data() + n * layer.in_dim;
      for (std::size_t i = 0; i < layer.in_dim; ++i) z += w[i] * acts[l][i];
      acts[l + 1][n] = activate(layer.activations[n], z);
    }
  }
  double out = acts.back()[0];
  for (const Block& block : blocks) {
    double prev = 0.0;
    for (std::size_t i = 0; i < block.chain.size(); ++i) {
      const ChainNeuron& neuron = block.chain[i];
      double z = neuron.bias;
      for (std::size_t j = 0; j < neuron.input_weights.size(); ++j)
        z += neuron.input_weights[j] * acts[i][j];
      if (neuron.has_chain_input) z += neuron.chain_weight * prev;
      prev = activate(neuron.activation, z);
    }
    out += block.output_weight * prev;
  }
  return out;
}

Semantics MaterializedComposite::forward(const Dataset& data) const {
  Semantics out(data.rows);
  for (std::size_t r = 0; r < data.rows; ++r) out[r] = forward_row(data.row(r), data.cols);
  return out;
}

std::size_t MaterializedComposite::neuron_count() const {
  std::size_t n = base.neuron_count();
  for (const Block& b : blocks) n += b.chain.size();
  return n;
}

std::size_t MaterializedComposite::parameter_count() const {
  std::size_t n = base.parameter_count();
  for (const Block& b : blocks) {
    for (const ChainNeuron& neuron : b.chain)
      n += neuron.input_weights.size() + 1 + (neuron.has_chain_input ? 1 : 0);
    n += 1;  // output weight
  }
  return n;
}

MaterializedComposite materialize(const CompositeIndividual& ind) {
  MaterializedComposite mat;
  mat.base = ind.base();
  mat.blocks.reserve(ind.blocks().size());
  for (const auto& block : ind.blocks())
    mat.blocks.push_back({block->chain, block->output_weight});
  return mat;
}

CompositeIndividual from_materialized(const MaterializedComposite& mat,
                                      std::shared_ptr<const Dataset> train,
                                      std::shared_ptr<const Dataset> test) {
  CompositeIndividual ind = CompositeIndividual::from_base(mat.base, std::move(train), std::move(test));
  for (const MaterializedComposite::Block& src : mat.blocks) {
    auto block = std::make_shared<PerturbationBlock>();
    block->chain = src.chain;
    block->output_weight = src.output_weight;
    if (block->chain.size() + 1 > ind.train_activations().widths.size())
      throw std::invalid_argument("from_materialized: chain longer than base depth");
    for (std::size_t i = 0; i < block->chain.size(); ++i)
      if (block->chain[i].input_weights.size() != ind.train_activations().widths[i])
        throw std::invalid_argument("from_materialized: chain wiring width mismatch");
    block->cached_train.resize(ind.train_data().rows);
    for (std::size_t r = 0; r < ind.train_data().rows; ++r)
      block->cached_train[r] =
          block->output_weight * chain_output_row(*block, ind.train_activations(), r);
    block->cached_test.resize(ind.test_data().rows);
    for (std::size_t r = 0; r < ind.test_data().rows; ++r)
      block->cached_test[r] =
          block->output_weight * chain_output_row(*block, ind.test_activations(), r);
    ind = inflate(ind, std::move(block));
  }
  return ind;
}

}  // namespace nevo
