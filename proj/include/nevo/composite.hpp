#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nevo/dataset.hpp"
#include "nevo/mlp.hpp"
#include "nevo/perturbation.hpp"

namespace nevo {

struct FitnessPair {
  double train_rmse = 0.0;
  double test_rmse = 0.0;
};

// A base network plus an ordered list of perturbation blocks. Semantics of the
// whole composite are kept as running sums so fitness never needs a forward
// pass. Individuals are immutable: inflate and deflate return new objects that
// share the base, its activation tables, and all untouched blocks.
class CompositeIndividual {
 public:
  static CompositeIndividual from_base(MlpNetwork base, std::shared_ptr<const Dataset> train,
                                       std::shared_ptr<const Dataset> test);

  const MlpNetwork& base() const { return *base_; }
  const std::vector<std::shared_ptr<const PerturbationBlock>>& blocks() const { return blocks_; }
  const Semantics& train_semantics() const { return sum_train_; }
  const Semantics& test_semantics() const { return sum_test_; }
  const ActivationTable& train_activations() const { return *train_acts_; }
  const ActivationTable& test_activations() const { return *test_acts_; }
  const Dataset& train_data() const { return *train_; }
  const Dataset& test_data() const { return *test_; }
  std::shared_ptr<const Dataset> train_data_ptr() const { return train_; }
  std::shared_ptr<const Dataset> test_data_ptr() const { return test_; }

  double train_rmse() const { return train_rmse_; }
  double test_rmse() const { return test_rmse_; }
  std::uint64_t lineage_id() const { return lineage_id_; }

  // Base hidden+output neurons plus every block's chain length.
  std::size_t node_count() const;

  // Fitness from the cached sums alone; zero network forward passes.
  FitnessPair evaluate_incremental() const;

 private:
  CompositeIndividual() = default;
  void refresh_fitness();
  void recount_cache_updates();

  friend CompositeIndividual inflate(const CompositeIndividual& parent,
                                     std::shared_ptr<const PerturbationBlock> block);
  friend CompositeIndividual deflate(const CompositeIndividual& parent, std::size_t block_index);

  std::shared_ptr<const MlpNetwork> base_;
  std::shared_ptr<const ActivationTable> train_acts_;
  std::shared_ptr<const ActivationTable> test_acts_;
  std::shared_ptr<const Dataset> train_;
  std::shared_ptr<const Dataset> test_;
  std::vector<std::shared_ptr<const PerturbationBlock>> blocks_;
  Semantics sum_train_;
  Semantics sum_test_;
  double train_rmse_ = 0.0;
  double test_rmse_ = 0.0;
  std::uint64_t lineage_id_ = 0;
  // Add/subtract updates since the sums were last rebuilt from block caches.
  // Rebuilding every 100 updates keeps float drift around a few ulps.
  int cache_updates_ = 0;
};

// Appends a block and adds its cached semantics to the running sums.
CompositeIndividual inflate(const CompositeIndividual& parent,
                            std::shared_ptr<const PerturbationBlock> block);

// Removes the block at block_index and subtracts its cached semantics.
// Throws std::logic_error when there is no block to remove; callers decide
// the fallback policy.
CompositeIndividual deflate(const CompositeIndividual& parent, std::size_t block_index);

// Cache-free evaluable copy of a composite: the oracle for the incremental
// path and the object a-posteriori training tunes. Evaluates every neuron
// from raw inputs on each call.
struct MaterializedComposite {
  MlpNetwork base;
  struct Block {
    std::vector<ChainNeuron> chain;
    double output_weight = 0.0;
  };
  std::vector<Block> blocks;

  double forward_row(const double* x, std::size_t dim) const;
  Semantics forward(const Dataset& data) const;
  std::size_t neuron_count() const;  // matches the source's node_count
  std::size_t parameter_count() const;
};

MaterializedComposite materialize(const CompositeIndividual& ind);

// Rebuilds a fully cached individual from (possibly retuned) materialized
// weights. Block wiring must match the base's layer widths.
CompositeIndividual from_materialized(const MaterializedComposite& mat,
                                      std::shared_ptr<const Dataset> train,
                                      std::shared_ptr<const Dataset> test);

}  // namespace nevo
