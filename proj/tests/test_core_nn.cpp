#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nevo/backprop.hpp"
#include "nevo/dataset.hpp"
#include "nevo/mlp.hpp"
#include "support.hpp"

using namespace nevo;
using namespace testsupport;

TEST_CASE("activations and derivatives match their closed forms") {
  const double zs[] = {-3.0, -0.7, 0.0, 0.3, 2.5};
  for (double z : zs) {
    CHECK(activate(Activation::Tanh, z) == doctest::Approx(std::tanh(z)).epsilon(1e-12));
    CHECK(activate_derivative(Activation::Tanh, z) ==
          doctest::Approx(1.0 - std::tanh(z) * std::tanh(z)).epsilon(1e-12));
    const double s = 1.0 / (1.0 + std::exp(-z));
    CHECK(activate(Activation::Sigmoid, z) == doctest::Approx(s).epsilon(1e-12));
    CHECK(activate_derivative(Activation::Sigmoid, z) ==
          doctest::Approx(s * (1.0 - s)).epsilon(1e-12));
    CHECK(activate(Activation::ReLU, z) == (z > 0.0 ? z : 0.0));
    CHECK(activate_derivative(Activation::ReLU, z) == (z > 0.0 ? 1.0 : 0.0));
    CHECK(activate(Activation::Identity, z) == z);
    CHECK(activate_derivative(Activation::Identity, z) == 1.0);
  }
  CHECK(activate_derivative(Activation::Sigmoid, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("tanh stays within [-1, 1] over a million random inputs") {
  RandomStream rng(99);
  for (int i = 0; i < 1'000'000; ++i) {
    const double v = activate(Activation::Tanh, rng.uniform(-50.0, 50.0));
    REQUIRE(v >= -1.0);
    REQUIRE(v <= 1.0);
  }
}

TEST_CASE("random networks respect the configured ranges") {
  ArchitectureRanges ranges;
  RandomStream rng(7);
  for (int i = 0; i < 200; ++i) {
    const MlpNetwork net = random_mlp(6, ranges, rng);
    validate(net);
    const std::size_t hidden = net.hidden_layer_count();
    CHECK(hidden >= 1);
    CHECK(hidden <= 3);
    for (std::size_t l = 0; l < hidden; ++l) {
      CHECK(net.layers[l].out_dim >= 4);
      CHECK(net.layers[l].out_dim <= 16);
      for (Activation a : net.layers[l].activations)
        CHECK((a == Activation::Tanh || a == Activation::ReLU || a == Activation::Sigmoid));
    }
    for (const Layer& layer : net.layers) {
      for (double w : layer.weights) {
        CHECK(w >= -1.0);
        CHECK(w <= 1.0);
      }
      for (double b : layer.biases) {
        CHECK(b >= -1.0);
        CHECK(b <= 1.0);
      }
    }
    CHECK(net.layers.back().out_dim == 1);
    CHECK(net.layers.back().activations[0] == Activation::Identity);
  }
}

TEST_CASE("sampled depths are close to uniform over the depth range") {
  ArchitectureRanges ranges;
  RandomStream rng(1234);
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 1000; ++i) {
    const MlpNetwork net = random_mlp(4, ranges, rng);
    ++counts[net.hidden_layer_count()];
  }
  for (int d = 1; d <= 3; ++d) {
    const double freq = counts[d] / 1000.0;
    CHECK(freq >= 0.28);
    CHECK(freq <= 0.39);
  }
}

TEST_CASE("forward agrees with an independent scalar oracle") {
  RandomStream rng(42);
  const Dataset data = make_synthetic(50, 6, 3);
  for (int i = 0; i < 30; ++i) {
    const MlpNetwork net = random_mlp(6, ArchitectureRanges{}, rng);
    const Semantics out = forward(net, data);
    REQUIRE(out.size() == data.rows);
    for (std::size_t r = 0; r < data.rows; ++r)
      CHECK(out[r] == doctest::Approx(forward_row_oracle(net, data.row(r))).epsilon(1e-12));
  }
}

TEST_CASE("forward is deterministic") {
  RandomStream rng(5);
  const MlpNetwork net = random_mlp(4, ArchitectureRanges{}, rng);
  const Dataset data = make_synthetic(40, 4, 11);
  const Semantics a = forward(net, data);
  const Semantics b = forward(net, data);
  CHECK(a == b);
}

TEST_CASE("activation tables hold every layer and end at the network output") {
  RandomStream rng(21);
  const Dataset data = make_synthetic(30, 5, 8);
  for (int i = 0; i < 10; ++i) {
    const MlpNetwork net = random_mlp(5, ArchitectureRanges{}, rng);
    const ActivationTable table = activation_table(net, data);
    REQUIRE(table.widths.size() == net.layers.size() + 1);
    CHECK(table.widths[0] == net.input_dim);
    CHECK(table.widths.back() == 1);
    const Semantics out = forward(net, data);
    for (std::size_t r = 0; r < data.rows; ++r) {
      CHECK(table.row(0, r)[0] == data.row(r)[0]);
      CHECK(table.row(table.widths.size() - 1, r)[0] == doctest::Approx(out[r]).epsilon(1e-12));
    }
  }
}

TEST_CASE("network validation rejects broken shapes") {
  RandomStream rng(1);
  MlpNetwork net = random_mlp(3, ArchitectureRanges{}, rng);
  MlpNetwork bad = net;
  bad.layers[0].in_dim = 99;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = net;
  bad.layers.back().activations[0] = Activation::Tanh;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = net;
  bad.layers.back().out_dim = 2;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("rmse matches hand-computed values and rejects bad input") {
  CHECK(rmse({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  // Residuals 3 and 4: sqrt((9 + 16) / 2).
  CHECK(rmse({3.0, 4.0}, {0.0, 0.0}) == doctest::Approx(3.5355339059327378).epsilon(1e-12));
  // A constant offset of 5 gives rmse 5 regardless of length.
  CHECK(rmse({6.0, 7.0, 8.0, 9.0}, {1.0, 2.0, 3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(rmse({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(rmse({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("standardization uses train statistics only and leaves targets raw") {
  // One pool split by rows, so both halves share a distribution.
  const Dataset pool = make_synthetic(260, 4, 17);
  Dataset train, test;
  train.cols = test.cols = pool.cols;
  train.rows = 200;
  test.rows = 60;
  train.features.assign(pool.features.begin(), pool.features.begin() + 200 * 4);
  train.targets.assign(pool.targets.begin(), pool.targets.begin() + 200);
  test.features.assign(pool.features.begin() + 200 * 4, pool.features.end());
  test.targets.assign(pool.targets.begin() + 200, pool.targets.end());
  // Make one feature constant to exercise the zero-variance guard.
  for (std::size_t r = 0; r < train.rows; ++r) train.row(r)[2] = 7.5;
  for (std::size_t r = 0; r < test.rows; ++r) test.row(r)[2] = 7.5;

  const FeatureStats stats = feature_stats(train);
  const Dataset strain = apply_standardization(train, stats);
  const Dataset stest = apply_standardization(test, stats);

  for (std::size_t c = 0; c < strain.cols; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t r = 0; r < strain.rows; ++r) mean += strain.row(r)[c];
    mean /= static_cast<double>(strain.rows);
    for (std::size_t r = 0; r < strain.rows; ++r) {
      const double d = strain.row(r)[c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(strain.rows);
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    if (c == 2)
      CHECK(var == doctest::Approx(0.0).epsilon(1e-12));  // constant feature maps to zero
    else
      CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(strain.targets == train.targets);
  CHECK(stest.targets == test.targets);
  // The held-out split is transformed with train statistics, so its mean is
  // close to but not exactly zero.
  double test_mean0 = 0.0;
  for (std::size_t r = 0; r < stest.rows; ++r) test_mean0 += stest.row(r)[0];
  test_mean0 /= static_cast<double>(stest.rows);
  CHECK(std::abs(test_mean0) > 1e-12);
  CHECK(std::abs(test_mean0) < 0.5);
}

TEST_CASE("analytic gradient agrees with central finite differences") {
  const Dataset raw = make_synthetic(25, 5, 29);
  const Dataset data = apply_standardization(raw, feature_stats(raw));
  ArchitectureRanges smooth;
  smooth.pool = {Activation::Tanh, Activation::Sigmoid};
  RandomStream rng(31);
  for (int i = 0; i < 20; ++i) {
    const MlpNetwork net = random_mlp(5, smooth, rng);
    CHECK(worst_gradient_ratio(gradient(net, data), fd_gradient(net, data)) <= 1.0);
  }
  // Same check with the full pool. Networks whose ReLU pre-activations sit
  // within the FD step of a kink are redrawn; see min_relu_margin.
  RandomStream rng2(77);
  int checked = 0;
  while (checked < 20) {
    const MlpNetwork net = random_mlp(5, ArchitectureRanges{}, rng2);
    if (min_relu_margin(net, data) < 1e-3) continue;
    CHECK(worst_gradient_ratio(gradient(net, data), fd_gradient(net, data)) <= 1.0);
    ++checked;
  }
}

TEST_CASE("zero training epochs return the network unchanged") {
  RandomStream rng(3);
  const MlpNetwork net = random_mlp(4, ArchitectureRanges{}, rng);
  const Dataset data = make_synthetic(30, 4, 5);
  const FitResult r = train_backprop(net, data, OptimizerConfig{0.01, 0});
  CHECK(r.loss_curve.empty());
  REQUIRE(r.network.layers.size() == net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(r.network.layers[l].weights == net.layers[l].weights);
    CHECK(r.network.layers[l].biases == net.layers[l].biases);
  }
}

TEST_CASE("gradient descent solves a representable linear task to near zero") {
  // y = 2x + 1 over 20 points; with Identity hidden units the exact fit is
  // representable, so the loss should approach the least-squares optimum of 0.
  Dataset data;
  data.rows = 20;
  data.cols = 1;
  for (int i = 0; i < 20; ++i) {
    const double x = -1.0 + 2.0 * i / 19.0;
    data.features.push_back(x);
    data.targets.push_back(2.0 * x + 1.0);
  }
  ArchitectureRanges linear;
  linear.pool = {Activation::Identity};
  linear.depth_min = linear.depth_max = 1;
  linear.width_min = linear.width_max = 4;
  RandomStream rng(13);
  const MlpNetwork net = random_mlp(1, linear, rng);
  const FitResult r = train_backprop(net, data, OptimizerConfig{0.05, 500});
  CHECK(mse(r.network, data) <= 1e-6);
  REQUIRE(r.loss_curve.size() == 500);
  CHECK(r.loss_curve.back() < r.loss_curve.front());
}

TEST_CASE("one tiny gradient step never increases the loss") {
  const Dataset raw = make_synthetic(40, 4, 51);
  const Dataset data = apply_standardization(raw, feature_stats(raw));
  RandomStream rng(53);
  for (int i = 0; i < 50; ++i) {
    const MlpNetwork net = random_mlp(4, ArchitectureRanges{}, rng);
    const double before = mse(net, data);
    const FitResult r = train_backprop(net, data, OptimizerConfig{1e-4, 1});
    CHECK(mse(r.network, data) <= before + 1e-12);
  }
}

TEST_CASE("diverging training reports the failing epoch") {
  // A huge learning rate on an unnormalized wide-scale task blows up fast.
  Dataset data = make_synthetic(30, 4, 61, 0.0);
  for (std::size_t r = 0; r < data.rows; ++r) data.targets[r] *= 1e6;
  RandomStream rng(63);
  const MlpNetwork net = random_mlp(4, ArchitectureRanges{}, rng);
  try {
    train_backprop(net, data, OptimizerConfig{1e12, 50});
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 0);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("training records one loss value per epoch") {
  const Dataset raw = make_synthetic(30, 3, 71);
  const Dataset data = apply_standardization(raw, feature_stats(raw));
  RandomStream rng(73);
  const MlpNetwork net = random_mlp(3, ArchitectureRanges{}, rng);
  const FitResult r = train_backprop(net, data, OptimizerConfig{0.01, 37});
  CHECK(r.loss_curve.size() == 37);
  for (double v : r.loss_curve) CHECK(std::isfinite(v));
}
