#include "nevo/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nevo {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

// Scratch for one row of composite forward/backward. The composite is a DAG:
// base layers feed both the base output path and every chain, so base
// activation deltas accumulate contributions from above and from chains.
struct CompositeWorkspace {
  // index 0 holds the input row; index l holds base layer l activations
  std::vector<std::vector<double>> act;
  std::vector<std::vector<double>> pre;        // pre[l] for base layer l (1-based like act)
  std::vector<std::vector<double>> act_delta;  // post-activation deltas per table layer
  std::vector<std::vector<double>> chain_pre;  // per block
  std::vector<std::vector<double>> chain_act;

  void resize(const MaterializedComposite& mat, std::size_t input_dim) {
    const std::size_t L = mat.base.layers.size();
    act.resize(L + 1);
    pre.resize(L + 1);
    act_delta.resize(L + 1);
    act[0].resize(input_dim);
    act_delta[0].resize(input_dim);
    for (std::size_t l = 0; l < L; ++l) {
      act[l + 1].resize(mat.base.layers[l].out_dim);
      pre[l + 1].resize(mat.base.layers[l].out_dim);
      act_delta[l + 1].resize(mat.base.layers[l].out_dim);
    }
    chain_pre.resize(mat.blocks.size());
    chain_act.resize(mat.blocks.size());
    for (std::size_t b = 0; b < mat.blocks.size(); ++b) {
      chain_pre[b].resize(mat.blocks[b].chain.size());
      chain_act[b].resize(mat.blocks[b].chain.size());
    }
  }
};

double composite_loss_and_gradient(const MaterializedComposite& mat, const Dataset& data,
                                   CompositeWorkspace& ws, std::vector<double>* grad) {
  const double inv_rows = 1.0 / static_cast<double>(data.rows);
  if (grad) grad->assign(mat.parameter_count(), 0.0);

  // Flat layout: base layers (weights then biases each), then per block each
  // chain neuron's input weights, chain weight, bias, then the output weight.
  std::vector<std::size_t> base_off(mat.base.layers.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l < mat.base.layers.size(); ++l) {
    base_off[l] = off;
    off += mat.base.layers[l].out_dim * mat.base.layers[l].in_dim + mat.base.layers[l].out_dim;
  }
  std::vector<std::size_t> block_off(mat.blocks.size());
  for (std::size_t b = 0; b < mat.blocks.size(); ++b) {
    block_off[b] = off;
    for (const ChainNeuron& n : mat.blocks[b].chain)
      off += n.input_weights.size() + (n.has_chain_input ? 1 : 0) + 1;
    off += 1;
  }

  const std::size_t L = mat.base.layers.size();
  double loss = 0.0;
  for (std::size_t r = 0; r < data.rows; ++r) {
    const double* x = data.row(r);
    std::copy(x, x + data.cols, ws.act[0].begin());
    for (std::size_t l = 0; l < L; ++l) {
      const Layer& layer = mat.base.layers[l];
      for (std::size_t n = 0; n < layer.out_dim; ++n) {
        double z = layer.biases[n];
        const double* w = layer.weights.data() + n * layer.in_dim;
        for (std::size_t i = 0; i < layer.in_dim; ++i) z += w[i] * ws.act[l][i];
        ws.pre[l + 1][n] = z;
        ws.act[l + 1][n] = activate(layer.activations[n], z);
      }
    }
    double pred = ws.act[L][0];
    for (std::size_t b = 0; b < mat.blocks.size(); ++b) {
      const auto& chain = mat.blocks[b].chain;
      double prev = 0.0;
      for (std::size_t i = 0; i < chain.size(); ++i) {
        const ChainNeuron& neuron = chain[i];
        double z = neuron.bias;
        for (std::size_t j = 0; j < neuron.input_weights.size(); ++j)
          z += neuron.input_weights[j] * ws.act[i][j];
        if (neuron.has_chain_input) z += neuron.chain_weight * prev;
        ws.chain_pre[b][i] = z;
        prev = activate(neuron.activation, z);
        ws.chain_act[b][i] = prev;
      }
      pred += mat.blocks[b].output_weight * prev;
    }

    const double err = pred - data.targets[r];
    loss += err * err * inv_rows;
    if (!grad) continue;

    const double dout = 2.0 * err * inv_rows;
    for (auto& v : ws.act_delta)
      std::fill(v.begin(), v.end(), 0.0);

    // Chains first: they deposit deltas onto the base activations they read.
    for (std::size_t b = 0; b < mat.blocks.size(); ++b) {
      const auto& chain = mat.blocks[b].chain;
      std::size_t boff = block_off[b];
      // Locate the output weight slot (last slot of the block).
      std::size_t wout_slot = boff;
      for (const ChainNeuron& n : chain)
        wout_slot += n.input_weights.size() + (n.has_chain_input ? 1 : 0) + 1;
      (*grad)[wout_slot] += dout * ws.chain_act[b].back();

      double dc = dout * mat.blocks[b].output_weight;  // delta on last chain activation
      // Walk neurons backwards; recompute each neuron's slot start on the way.
      for (std::size_t i = chain.size(); i-- > 0;) {
        std::size_t slot = boff;
        for (std::size_t j = 0; j < i; ++j)
          slot += chain[j].input_weights.size() + (chain[j].has_chain_input ? 1 : 0) + 1;
        const ChainNeuron& neuron = chain[i];
        const double dpre = dc * activate_derivative(neuron.activation, ws.chain_pre[b][i]);
        for (std::size_t j = 0; j < neuron.input_weights.size(); ++j) {
          (*grad)[slot + j] += dpre * ws.act[i][j];
          ws.act_delta[i][j] += dpre * neuron.input_weights[j];
        }
        std::size_t extra = slot + neuron.input_weights.size();
        if (neuron.has_chain_input) {
          (*grad)[extra] += dpre * (i > 0 ? ws.chain_act[b][i - 1] : 0.0);
          ++extra;
        }
        (*grad)[extra] += dpre;
        dc = neuron.has_chain_input ? dpre * neuron.chain_weight : 0.0;
      }
    }

    // Base output neuron delta, then standard backprop with the chain
    // deposits folded in at each layer.
    ws.act_delta[L][0] += dout;
    for (std::size_t l = L; l-- > 0;) {
      const Layer& layer = mat.base.layers[l];
      double* gw = grad->data() + base_off[l];
      double* gb = gw + layer.out_dim * layer.in_dim;
      for (std::size_t n = 0; n < layer.out_dim; ++n) {
        const double d =
            ws.act_delta[l + 1][n] * activate_derivative(layer.activations[n], ws.pre[l + 1][n]);
        if (d == 0.0) continue;
        const double* w = layer.weights.data() + n * layer.in_dim;
        double* g = gw + n * layer.in_dim;
        for (std::size_t i = 0; i < layer.in_dim; ++i) {
          g[i] += d * ws.act[l][i];
          ws.act_delta[l][i] += d * w[i];
        }
        gb[n] += d;
      }
    }
  }
  return loss;
}

void composite_apply_step(MaterializedComposite& mat, const std::vector<double>& grad, double lr) {
  std::size_t off = 0;
  for (Layer& layer : mat.base.layers) {
    for (double& w : layer.weights) w -= lr * grad[off++];
    for (double& b : layer.biases) b -= lr * grad[off++];
  }
  for (MaterializedComposite::Block& block : mat.blocks) {
    for (ChainNeuron& n : block.chain) {
      for (double& w : n.input_weights) w -= lr * grad[off++];
      if (n.has_chain_input) n.chain_weight -= lr * grad[off++];
      n.bias -= lr * grad[off++];
    }
    block.output_weight -= lr * grad[off++];
  }
}

void check_composite_data(const MaterializedComposite& mat, const Dataset& data) {
  if (data.rows == 0) throw std::invalid_argument("composite training: empty dataset");
  if (data.cols != mat.base.input_dim)
    throw std::invalid_argument("composite training: input dim mismatch");
}

}  // namespace

double composite_mse(const MaterializedComposite& mat, const Dataset& data) {
  check_composite_data(mat, data);
  CompositeWorkspace ws;
  ws.resize(mat, data.cols);
  return composite_loss_and_gradient(mat, data, ws, nullptr);
}

std::vector<double> composite_gradient(const MaterializedComposite& mat, const Dataset& data) {
  check_composite_data(mat, data);
  CompositeWorkspace ws;
  ws.resize(mat, data.cols);
  std::vector<double> grad;
  composite_loss_and_gradient(mat, data, ws, &grad);
  return grad;
}

CompositeFitResult train_composite(const MaterializedComposite& mat, const Dataset& data,
                                   const OptimizerConfig& opt) {
  check_composite_data(mat, data);
  if (opt.epochs < 0) throw std::invalid_argument("train_composite: negative epoch count");
  if (!(opt.learning_rate > 0.0))
    throw std::invalid_argument("train_composite: learning rate must be positive");

  CompositeFitResult result;
  result.model = mat;
  CompositeWorkspace ws;
  ws.resize(mat, data.cols);
  std::vector<double> grad;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const double loss = composite_loss_and_gradient(result.model, data, ws, &grad);
    if (!std::isfinite(loss)) throw DivergenceError(epoch);
    result.loss_curve.push_back(loss);
    composite_apply_step(result.model, grad, opt.learning_rate);
  }
  if (opt.epochs > 0 &&
      !std::isfinite(composite_loss_and_gradient(result.model, data, ws, nullptr)))
    throw DivergenceError(opt.epochs);
  return result;
}

AprioriResult apriori_train(std::vector<MlpNetwork> networks, const Dataset& train,
                            AprioriMode mode, const OptimizerConfig& opt, RandomStream& rng) {
  AprioriResult result;
  result.networks = std::move(networks);
  if (mode == AprioriMode::None) return result;

  std::vector<std::size_t> selected(result.networks.size());
  std::iota(selected.begin(), selected.end(), 0);
  if (mode == AprioriMode::Half) {
    rng.shuffle(selected);
    selected.resize(result.networks.size() / 2);
    std::sort(selected.begin(), selected.end());
  }

  for (std::size_t idx : selected) {
    MemberTraining entry;
    entry.member = idx;
    const auto t0 = clock_type::now();
    try {
      FitResult fit = train_backprop(result.networks[idx], train, opt);
      result.networks[idx] = std::move(fit.network);
      entry.record.loss_curve = std::move(fit.loss_curve);
    } catch (const DivergenceError& e) {
      entry.record.warnings.push_back(std::string(e.what()) + "; member kept untrained");
    }
    entry.record.epochs_run = static_cast<int>(entry.record.loss_curve.size());
    entry.record.wall_time_s = seconds_since(t0);
    result.records.push_back(std::move(entry));
  }
  return result;
}

AposterioriResult aposteriori_train(const CompositeIndividual& best, const OptimizerConfig& opt) {
  AposterioriResult result{best, TrainingRecord{}, best.test_rmse(), best.test_rmse()};
  const MaterializedComposite mat = materialize(best);
  const auto t0 = clock_type::now();
  try {
    CompositeFitResult fit = train_composite(mat, best.train_data(), opt);
    result.tuned = from_materialized(fit.model, best.train_data_ptr(), best.test_data_ptr());
    result.record.loss_curve = std::move(fit.loss_curve);
    result.test_rmse_after = result.tuned.test_rmse();
  } catch (const DivergenceError& e) {
    result.record.warnings.push_back(std::string(e.what()) + "; keeping the untuned individual");
  }
  result.record.epochs_run = static_cast<int>(result.record.loss_curve.size());
  result.record.wall_time_s = seconds_since(t0);
  return result;
}

BaselineSpec derive_baseline_spec(const CompositeIndividual& evolved) {
  const std::size_t hidden_layers = evolved.base().hidden_layer_count();
  const std::size_t total_hidden = evolved.node_count() - 1;
  BaselineSpec spec;
  spec.hidden_widths.assign(hidden_layers, total_hidden / hidden_layers);
  spec.hidden_widths.back() += total_hidden % hidden_layers;
  return spec;
}

BaselineResult baseline_nn(const BaselineSpec& spec, const Dataset& train, const Dataset& test,
                           const OptimizerConfig& opt, RandomStream& rng) {
  if (spec.hidden_widths.empty()) throw std::invalid_argument("baseline_nn: no hidden layers");
  for (std::size_t w : spec.hidden_widths)
    if (w == 0) throw std::invalid_argument("baseline_nn: zero-width hidden layer");
  if (spec.pool.empty()) throw std::invalid_argument("baseline_nn: empty activation pool");
  if (train.cols != test.cols) throw std::invalid_argument("baseline_nn: split width mismatch");

  MlpNetwork net;
  net.input_dim = train.cols;
  std::size_t prev = train.cols;
  for (std::size_t w : spec.hidden_widths) {
    Layer layer;
    layer.in_dim = prev;
    layer.out_dim = w;
    layer.weights.resize(w * prev);
    layer.biases.resize(w);
    layer.activations.resize(w);
    for (std::size_t n = 0; n < w; ++n) {
      for (std::size_t i = 0; i < prev; ++i)
        layer.weights[n * prev + i] = rng.uniform(spec.weight_min, spec.weight_max);
      layer.biases[n] = rng.uniform(spec.weight_min, spec.weight_max);
      layer.activations[n] = spec.pool[rng.below(spec.pool.size())];
    }
    net.layers.push_back(std::move(layer));
    prev = w;
  }
  Layer out;
  out.in_dim = prev;
  out.out_dim = 1;
  out.weights.resize(prev);
  for (double& w : out.weights) w = rng.uniform(spec.weight_min, spec.weight_max);
  out.biases.assign(1, rng.uniform(spec.weight_min, spec.weight_max));
  out.activations.assign(1, Activation::Identity);
  net.layers.push_back(std::move(out));

  BaselineResult result;
  const auto t0 = clock_type::now();
  try {
    FitResult fit = train_backprop(net, train, opt);
    result.network = std::move(fit.network);
    result.record.loss_curve = std::move(fit.loss_curve);
  } catch (const DivergenceError& e) {
    result.network = std::move(net);
    result.record.warnings.push_back(std::string(e.what()) + "; reporting the untrained network");
  }
  result.record.epochs_run = static_cast<int>(result.record.loss_curve.size());
  result.record.wall_time_s = seconds_since(t0);
  result.train_rmse = rmse(forward(result.network, train), train.targets);
  result.test_rmse = rmse(forward(result.network, test), test.targets);
  return result;
}

}  // namespace nevo
