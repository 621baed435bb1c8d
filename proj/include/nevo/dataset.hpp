#pragma once

#include <cstddef>
#include <vector>

namespace nevo {

// Regression dataset, features row-major. Targets are kept raw throughout;
// only features are ever standardized.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> features;  // rows x cols
  std::vector<double> targets;   // rows

  const double* row(std::size_t i) const { return features.data() + i * cols; }
  double* row(std::size_t i) { return features.data() + i * cols; }
};

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population stddev; constant features get 1.0
};

// Statistics of the train split only. Applying them to a held-out split keeps
// the split untouched by the training data's scale.
FeatureStats feature_stats(const Dataset& train);
Dataset apply_standardization(const Dataset& d, const FeatureStats& stats);

// Root mean squared error. Throws std::invalid_argument on empty or
// mismatched inputs.
double rmse(const std::vector<double>& predictions, const std::vector<double>& targets);

}  // namespace nevo
