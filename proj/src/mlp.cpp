#include "nevo/mlp.hpp"

#include <stdexcept>
#include <string>

namespace nevo {

std::size_t MlpNetwork::neuron_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.out_dim;
  return n;
}

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.out_dim * l.in_dim + l.out_dim;
  return n;
}

void validate(const MlpNetwork& net) {
  if (net.input_dim == 0) throw std::invalid_argument("network: zero input dimension");
  if (net.layers.empty()) throw std::invalid_argument("network: no layers");
  std::size_t prev = net.input_dim;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    if (layer.in_dim != prev)
      throw std::invalid_argument("network: layer " + std::to_string(l) + " input dim mismatch");
    if (layer.out_dim == 0) throw std::invalid_argument("network: empty layer");
    if (layer.weights.size() != layer.out_dim * layer.in_dim ||
        layer.biases.size() != layer.out_dim || layer.activations.size() != layer.out_dim)
      throw std::invalid_argument("network: layer " + std::to_string(l) + " storage mismatch");
    prev = layer.out_dim;
  }
  const Layer& out = net.layers.back();
  if (out.out_dim != 1 || out.activations[0] != Activation::Identity)
    throw std::invalid_argument("network: output layer must be one Identity neuron");
}

MlpNetwork random_mlp(std::size_t input_dim, const ArchitectureRanges& ranges, RandomStream& rng) {
  if (input_dim == 0) throw std::invalid_argument("random_mlp: zero input dimension");
  if (ranges.depth_min < 1 || ranges.depth_max < ranges.depth_min)
    throw std::invalid_argument("random_mlp: bad depth range");
  if (ranges.width_min < 1 || ranges.width_max < ranges.width_min)
    throw std::invalid_argument("random_mlp: bad width range");
  if (ranges.pool.empty()) throw std::invalid_argument("random_mlp: empty activation pool");

  const int depth = rng.uniform_int(ranges.depth_min, ranges.depth_max);
  std::vector<std::size_t> widths(static_cast<std::size_t>(depth));
  for (auto& w : widths) w = static_cast<std::size_t>(rng.uniform_int(ranges.width_min, ranges.width_max));

  MlpNetwork net;
  net.input_dim = input_dim;
  std::size_t prev = input_dim;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    Layer layer;
    layer.in_dim = prev;
    layer.out_dim = widths[l];
    layer.weights.resize(layer.out_dim * layer.in_dim);
    layer.biases.resize(layer.out_dim);
    layer.activations.resize(layer.out_dim);
    for (std::size_t n = 0; n < layer.out_dim; ++n) {
      for (std::size_t i = 0; i < layer.in_dim; ++i)
        layer.weights[n * layer.in_dim + i] = rng.uniform(ranges.weight_min, ranges.weight_max);
      layer.biases[n] = rng.uniform(ranges.weight_min, ranges.weight_max);
      layer.activations[n] = ranges.pool[rng.below(ranges.pool.size())];
    }
    net.layers.push_back(std::move(layer));
    prev = widths[l];
  }

  Layer out;
  out.in_dim = prev;
  out.out_dim = 1;
  out.weights.resize(prev);
  for (std::size_t i = 0; i < prev; ++i) out.weights[i] = rng.uniform(ranges.weight_min, ranges.weight_max);
  out.biases.assign(1, rng.uniform(ranges.weight_min, ranges.weight_max));
  out.activations.assign(1, Activation::Identity);
  net.layers.push_back(std::move(out));
  return net;
}

double forward_row(const MlpNetwork& net, const double* x) {
  std::vector<double> cur(x, x + net.input_dim);
  std::vector<double> nxt;
  for (const Layer& layer : net.layers) {
    nxt.assign(layer.out_dim, 0.0);
    for (std::size_t n = 0; n < layer.out_dim; ++n) {
      double z = layer.biases[n];
      const double* w = layer.weights.data() + n * layer.in_dim;
      for (std::size_t i = 0; i < layer.in_dim; ++i) z += w[i] * cur[i];
      nxt[n] = activate(layer.activations[n], z);
    }
    cur.swap(nxt);
  }
  return cur[0];
}

Semantics forward(const MlpNetwork& net, const Dataset& data) {
  validate(net);
  if (data.cols != net.input_dim) throw std::invalid_argument("forward: input dim mismatch");
  Semantics out(data.rows);
  std::vector<double> cur, nxt;
  for (std::size_t r = 0; r < data.rows; ++r) {
    const double* x = data.row(r);
    cur.assign(x, x + data.cols);
    for (const Layer& layer : net.layers) {
      nxt.assign(layer.out_dim, 0.0);
      for (std::size_t n = 0; n < layer.out_dim; ++n) {
        double z = layer.biases[n];
        const double* w = layer.weights.data() + n * layer.in_dim;
        for (std::size_t i = 0; i < layer.in_dim; ++i) z += w[i] * cur[i];
        nxt[n] = activate(layer.activations[n], z);
      }
      cur.swap(nxt);
    }
    out[r] = cur[0];
  }
  return out;
}

ActivationTable activation_table(const MlpNetwork& net, const Dataset& data) {
  validate(net);
  if (data.cols != net.input_dim) throw std::invalid_argument("activation_table: input dim mismatch");
  ActivationTable table;
  table.rows = data.rows;
  table.widths.push_back(net.input_dim);
  for (const Layer& l : net.layers) table.widths.push_back(l.out_dim);
  table.values.resize(table.widths.size());
  table.values[0] = data.features;
  for (std::size_t l = 0; l < net.layers.size(); ++l)
    table.values[l + 1].assign(data.rows * net.layers[l].out_dim, 0.0);

  for (std::size_t r = 0; r < data.rows; ++r) {
    const double* cur = table.row(0, r);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const Layer& layer = net.layers[l];
      double* out = table.values[l + 1].data() + r * layer.out_dim;
      for (std::size_t n = 0; n < layer.out_dim; ++n) {
        double z = layer.biases[n];
        const double* w = layer.weights.data() + n * layer.in_dim;
        for (std::size_t i = 0; i < layer.in_dim; ++i) z += w[i] * cur[i];
        out[n] = activate(layer.activations[n], z);
      }
      cur = out;
    }
  }
  return table;
}

}  // namespace nevo
