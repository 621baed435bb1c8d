#include "nevo/backprop.hpp"

#include <cmath>

namespace nevo {

namespace {

// One pass over the data computing the MSE and, when grad is non-null, its
// full-batch gradient in canonical order. Scratch buffers live in the caller
// so epochs do not reallocate.
struct Workspace {
  std::vector<std::vector<double>> pre;  // per layer, pre-activations of one row
  std::vector<std::vector<double>> act;  // per layer, activations of one row
  std::vector<double> delta;
  std::vector<double> delta_prev;

  void resize(const MlpNetwork& net) {
    pre.resize(net.layers.size());
    act.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      pre[l].resize(net.layers[l].out_dim);
      act[l].resize(net.layers[l].out_dim);
    }
  }
};

double loss_and_gradient(const MlpNetwork& net, const Dataset& data, Workspace& ws,
                         std::vector<double>* grad) {
  const double inv_rows = 1.0 / static_cast<double>(data.rows);
  if (grad) grad->assign(net.parameter_count(), 0.0);

  // Offsets of each layer's weight block in the flat gradient.
  std::vector<std::size_t> offsets(net.layers.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    offsets[l] = off;
    off += net.layers[l].out_dim * net.layers[l].in_dim + net.layers[l].out_dim;
  }

  double loss = 0.0;
  for (std::size_t r = 0; r < data.rows; ++r) {
    const double* input = data.row(r);
    const double* cur = input;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const Layer& layer = net.layers[l];
      for (std::size_t n = 0; n < layer.out_dim; ++n) {
        double z = layer.biases[n];
        const double* w = layer.weights.data() + n * layer.in_dim;
        for (std::size_t i = 0; i < layer.in_dim; ++i) z += w[i] * cur[i];
        ws.pre[l][n] = z;
        ws.act[l][n] = activate(layer.activations[n], z);
      }
      cur = ws.act[l].data();
    }

    const double err = ws.act.back()[0] - data.targets[r];
    loss += err * err * inv_rows;
    if (!grad) continue;

    ws.delta.assign(1, 2.0 * err * inv_rows);
    for (std::size_t li = net.layers.size(); li-- > 0;) {
      const Layer& layer = net.layers[li];
      const double* below = li == 0 ? input : ws.act[li - 1].data();
      ws.delta_prev.assign(layer.in_dim, 0.0);
      double* gw = grad->data() + offsets[li];
      double* gb = gw + layer.out_dim * layer.in_dim;
      for (std::size_t n = 0; n < layer.out_dim; ++n) {
        const double d = ws.delta[n] * activate_derivative(layer.activations[n], ws.pre[li][n]);
        if (d == 0.0) continue;
        const double* w = layer.weights.data() + n * layer.in_dim;
        double* g = gw + n * layer.in_dim;
        for (std::size_t i = 0; i < layer.in_dim; ++i) {
          g[i] += d * below[i];
          ws.delta_prev[i] += d * w[i];
        }
        gb[n] += d;
      }
      ws.delta.swap(ws.delta_prev);
    }
  }
  return loss;
}

void apply_step(MlpNetwork& net, const std::vector<double>& grad, double lr) {
  std::size_t off = 0;
  for (Layer& layer : net.layers) {
    for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights[i] -= lr * grad[off + i];
    off += layer.weights.size();
    for (std::size_t n = 0; n < layer.out_dim; ++n) layer.biases[n] -= lr * grad[off + n];
    off += layer.out_dim;
  }
}

void check_data(const MlpNetwork& net, const Dataset& data) {
  validate(net);
  if (data.rows == 0) throw std::invalid_argument("backprop: empty dataset");
  if (data.cols != net.input_dim) throw std::invalid_argument("backprop: input dim mismatch");
}

}  // namespace

double mse(const MlpNetwork& net, const Dataset& data) {
  check_data(net, data);
  Workspace ws;
  ws.resize(net);
  return loss_and_gradient(net, data, ws, nullptr);
}

std::vector<double> gradient(const MlpNetwork& net, const Dataset& data) {
  check_data(net, data);
  Workspace ws;
  ws.resize(net);
  std::vector<double> grad;
  loss_and_gradient(net, data, ws, &grad);
  return grad;
}

FitResult train_backprop(const MlpNetwork& net, const Dataset& data, const OptimizerConfig& opt) {
  check_data(net, data);
  if (opt.epochs < 0) throw std::invalid_argument("train_backprop: negative epoch count");
  if (!(opt.learning_rate > 0.0)) throw std::invalid_argument("train_backprop: learning rate must be positive");

  FitResult result;
  result.network = net;
  result.loss_curve.reserve(static_cast<std::size_t>(opt.epochs));
  Workspace ws;
  ws.resize(net);
  std::vector<double> grad;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const double loss = loss_and_gradient(result.network, data, ws, &grad);
    if (!std::isfinite(loss)) throw DivergenceError(epoch);
    result.loss_curve.push_back(loss);
    apply_step(result.network, grad, opt.learning_rate);
  }
  if (opt.epochs > 0 && !std::isfinite(loss_and_gradient(result.network, data, ws, nullptr)))
    throw DivergenceError(opt.epochs);
  return result;
}

}  // namespace nevo
