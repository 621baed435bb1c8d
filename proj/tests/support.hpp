#pragma once

// Shared helpers for the unit and acceptance suites: deterministic synthetic
// datasets and independent oracles the library implementations are checked
// against.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <memory>

#include "nevo/backprop.hpp"
#include "nevo/composite.hpp"
#include "nevo/dataset.hpp"
#include "nevo/mlp.hpp"
#include "nevo/perturbation.hpp"
#include "nevo/rng.hpp"

namespace testsupport {

// Smooth nonlinear regression task over mixed-scale features. Deterministic in
// (rows, cols, seed) so expected values can be frozen against it.
inline nevo::Dataset make_synthetic(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                    double noise = 0.05) {
  nevo::RandomStream rng(nevo::mix_seed(seed, rows, cols));
  nevo::Dataset d;
  d.rows = rows;
  d.cols = cols;
  d.features.resize(rows * cols);
  d.targets.resize(rows);
  std::vector<double> scale(cols), shift(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    scale[c] = std::pow(10.0, static_cast<double>(c % 4) - 1.0);  // 0.1 .. 100
    shift[c] = rng.uniform(-2.0, 2.0) * scale[c];
  }
  for (std::size_t r = 0; r < rows; ++r) {
    double* x = d.row(r);
    for (std::size_t c = 0; c < cols; ++c) x[c] = shift[c] + scale[c] * rng.uniform(-1.0, 1.0);
    // Target depends on normalized copies of a few columns so every width works.
    const double z0 = (x[0] - shift[0]) / scale[0];
    const double z1 = (x[1 % cols] - shift[1 % cols]) / scale[1 % cols];
    const double z2 = (x[2 % cols] - shift[2 % cols]) / scale[2 % cols];
    const double z3 = (x[3 % cols] - shift[3 % cols]) / scale[3 % cols];
    d.targets[r] = 8.0 * std::sin(2.0 * z0) + 4.0 * z1 * z2 + 3.0 * z3 * z3 +
                   noise * rng.uniform(-1.0, 1.0);
  }
  return d;
}

// Standardized train/test pair cut from one synthetic pool, the shape most
// library calls expect.
struct TaskData {
  std::shared_ptr<const nevo::Dataset> train;
  std::shared_ptr<const nevo::Dataset> test;
};

inline TaskData make_task(std::size_t train_rows, std::size_t test_rows, std::size_t cols,
                          std::uint64_t seed) {
  const nevo::Dataset pool = make_synthetic(train_rows + test_rows, cols, seed);
  nevo::Dataset train, test;
  train.cols = test.cols = cols;
  train.rows = train_rows;
  test.rows = test_rows;
  train.features.assign(pool.features.begin(), pool.features.begin() + train_rows * cols);
  train.targets.assign(pool.targets.begin(), pool.targets.begin() + train_rows);
  test.features.assign(pool.features.begin() + train_rows * cols, pool.features.end());
  test.targets.assign(pool.targets.begin() + train_rows, pool.targets.end());
  const nevo::FeatureStats stats = nevo::feature_stats(train);
  return {std::make_shared<const nevo::Dataset>(nevo::apply_standardization(train, stats)),
          std::make_shared<const nevo::Dataset>(nevo::apply_standardization(test, stats))};
}

// Random composite with k inflates applied, for oracle comparisons.
inline nevo::CompositeIndividual make_composite(const TaskData& task, std::uint64_t seed,
                                                std::size_t k, double ms = 2.0,
                                                double span_fraction = 1.0) {
  nevo::RandomStream rng(seed);
  const nevo::ArchitectureRanges ranges;
  nevo::CompositeIndividual ind = nevo::CompositeIndividual::from_base(
      nevo::random_mlp(task.train->cols, ranges, rng), task.train, task.test);
  for (std::size_t i = 0; i < k; ++i) {
    auto block = std::make_shared<nevo::PerturbationBlock>(
        nevo::build_perturbation(ind.train_activations(), ind.test_activations(),
                                 nevo::MutationStep(ms), span_fraction, ranges.pool, rng));
    ind = nevo::inflate(ind, std::move(block));
  }
  return ind;
}

// Flat parameter vector in the same canonical order the gradient uses:
// layer by layer, weights row-major then biases.
inline std::vector<double> flatten_parameters(const nevo::MlpNetwork& net) {
  std::vector<double> flat;
  flat.reserve(net.parameter_count());
  for (const nevo::Layer& l : net.layers) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.biases.begin(), l.biases.end());
  }
  return flat;
}

inline void unflatten_parameters(nevo::MlpNetwork& net, const std::vector<double>& flat) {
  std::size_t off = 0;
  for (nevo::Layer& l : net.layers) {
    std::copy(flat.begin() + off, flat.begin() + off + l.weights.size(), l.weights.begin());
    off += l.weights.size();
    std::copy(flat.begin() + off, flat.begin() + off + l.biases.size(), l.biases.begin());
    off += l.biases.size();
  }
}

// Central finite differences of the MSE, the oracle for the analytic gradient.
inline std::vector<double> fd_gradient(const nevo::MlpNetwork& net, const nevo::Dataset& data,
                                       double eps = 1e-5) {
  std::vector<double> flat = flatten_parameters(net);
  std::vector<double> grad(flat.size());
  nevo::MlpNetwork work = net;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + eps;
    unflatten_parameters(work, flat);
    const double up = nevo::mse(work, data);
    flat[i] = saved - eps;
    unflatten_parameters(work, flat);
    const double down = nevo::mse(work, data);
    flat[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  unflatten_parameters(work, flat);
  return grad;
}

// Forward oracle written independently of the library loops: one neuron at a
// time via std::inner_product on temporary per-layer vectors.
inline double forward_row_oracle(const nevo::MlpNetwork& net, const double* x) {
  std::vector<double> below(x, x + net.input_dim);
  for (const nevo::Layer& layer : net.layers) {
    std::vector<double> above;
    for (std::size_t n = 0; n < layer.out_dim; ++n) {
      std::vector<double> w(layer.weights.begin() + n * layer.in_dim,
                            layer.weights.begin() + (n + 1) * layer.in_dim);
      const double z =
          std::inner_product(w.begin(), w.end(), below.begin(), layer.biases[n]);
      above.push_back(nevo::activate(layer.activations[n], z));
    }
    below = above;
  }
  return below[0];
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Central differences are a valid gradient oracle only away from ReLU kinks:
// if some pre-activation sits within the FD step of zero, the two-sided
// evaluation straddles the kink and the estimate is off by design, not by a
// gradient bug. Returns the smallest |pre-activation| over all ReLU neurons
// and rows, so callers can skip networks that sit too close to a kink.
inline double min_relu_margin(const nevo::MlpNetwork& net, const nevo::Dataset& data) {
  double margin = std::numeric_limits<double>::infinity();
  std::vector<double> cur, nxt;
  for (std::size_t r = 0; r < data.rows; ++r) {
    const double* x = data.row(r);
    cur.assign(x, x + data.cols);
    for (const nevo::Layer& layer : net.layers) {
      nxt.assign(layer.out_dim, 0.0);
      for (std::size_t n = 0; n < layer.out_dim; ++n) {
        double z = layer.biases[n];
        for (std::size_t i = 0; i < layer.in_dim; ++i) z += layer.weights[n * layer.in_dim + i] * cur[i];
        if (layer.activations[n] == nevo::Activation::ReLU)
          margin = std::min(margin, std::abs(z));
        nxt[n] = nevo::activate(layer.activations[n], z);
      }
      cur.swap(nxt);
    }
  }
  return margin;
}

// Gradient agreement measured the same way in the unit and acceptance suites:
// per entry the error budget is max(abs_tol, rel_tol * |fd|), i.e. relative
// where the oracle is meaningfully nonzero and absolute near zero. The two
// regimes join continuously; a hard handover at some magnitude would demand
// far more absolute precision just above the boundary than just below it,
// which central differences cannot deliver at this loss scale. Returns the
// worst ratio of error to budget; <= 1 means every entry is within tolerance.
inline double worst_gradient_ratio(const std::vector<double>& analytic,
                                   const std::vector<double>& fd, double rel_tol = 1e-4,
                                   double abs_tol = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double err = std::abs(analytic[i] - fd[i]);
    worst = std::max(worst, err / std::max(abs_tol, rel_tol * std::abs(fd[i])));
  }
  return worst;
}

}  // namespace testsupport
