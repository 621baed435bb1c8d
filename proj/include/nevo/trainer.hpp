#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "nevo/backprop.hpp"
#include "nevo/composite.hpp"
#include "nevo/records.hpp"
#include "nevo/rng.hpp"

namespace nevo {

// ---- training of materialized composites (used by a-posteriori tuning) ----

double composite_mse(const MaterializedComposite& mat, const Dataset& data);

// Gradient over every weight: base parameters in the usual canonical order,
// then per block (in list order) each chain neuron's input weights, chain
// weight where present, and bias, then the block's output weight.
std::vector<double> composite_gradient(const MaterializedComposite& mat, const Dataset& data);

struct CompositeFitResult {
  MaterializedComposite model;
  std::vector<double> loss_curve;
};

CompositeFitResult train_composite(const MaterializedComposite& mat, const Dataset& data,
                                   const OptimizerConfig& opt);

// ---- the three training entry points ----

enum class AprioriMode { None, Half, All };

struct MemberTraining {
  std::size_t member = 0;
  TrainingRecord record;
};

struct AprioriResult {
  std::vector<MlpNetwork> networks;
  std::vector<MemberTraining> records;  // one per member actually trained
};

// Backprop-trains base networks before they enter the population: all of
// them, a uniformly chosen floor(n/2) of them, or none. A member whose
// training diverges keeps its untrained weights and gets a warning record.
AprioriResult apriori_train(std::vector<MlpNetwork> networks, const Dataset& train,
                            AprioriMode mode, const OptimizerConfig& opt, RandomStream& rng);

struct AposterioriResult {
  CompositeIndividual tuned;
  TrainingRecord record;
  double test_rmse_before = 0.0;
  double test_rmse_after = 0.0;
};

// Materializes the individual, gradient-trains every weight on the train
// split, and rebuilds a fully cached individual from the tuned weights. The
// input is never modified; on divergence the original comes back with a
// warning in the record.
AposterioriResult aposteriori_train(const CompositeIndividual& best, const OptimizerConfig& opt);

// ---- size-matched plain network baseline ----

struct BaselineSpec {
  std::vector<std::size_t> hidden_widths;
  std::vector<Activation> pool{Activation::Tanh, Activation::ReLU, Activation::Sigmoid};
  double weight_min = -1.0;
  double weight_max = 1.0;
};

// One baseline hidden layer per base hidden layer, widths chosen so hidden
// plus output neurons equal the evolved individual's node count (remainder
// goes to the last hidden layer).
BaselineSpec derive_baseline_spec(const CompositeIndividual& evolved);

struct BaselineResult {
  MlpNetwork network;
  TrainingRecord record;
  double train_rmse = 0.0;
  double test_rmse = 0.0;
};

BaselineResult baseline_nn(const BaselineSpec& spec, const Dataset& train, const Dataset& test,
                           const OptimizerConfig& opt, RandomStream& rng);

}  // namespace nevo
