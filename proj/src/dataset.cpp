#include "nevo/dataset.hpp"

#include <cmath>
#include <stdexcept>

namespace nevo {

FeatureStats feature_stats(const Dataset& train) {
  if (train.rows == 0) throw std::invalid_argument("feature_stats: empty dataset");
  FeatureStats stats;
  stats.mean.assign(train.cols, 0.0);
  stats.stddev.assign(train.cols, 0.0);
  for (std::size_t r = 0; r < train.rows; ++r) {
    const double* x = train.row(r);
    for (std::size_t c = 0; c < train.cols; ++c) stats.mean[c] += x[c];
  }
  for (std::size_t c = 0; c < train.cols; ++c) stats.mean[c] /= static_cast<double>(train.rows);
  for (std::size_t r = 0; r < train.rows; ++r) {
    const double* x = train.row(r);
    for (std::size_t c = 0; c < train.cols; ++c) {
      const double d = x[c] - stats.mean[c];
      stats.stddev[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < train.cols; ++c) {
    stats.stddev[c] = std::sqrt(stats.stddev[c] / static_cast<double>(train.rows));
    if (stats.stddev[c] == 0.0) stats.stddev[c] = 1.0;
  }
  return stats;
}

Dataset apply_standardization(const Dataset& d, const FeatureStats& stats) {
  if (stats.mean.size() != d.cols || stats.stddev.size() != d.cols)
    throw std::invalid_argument("apply_standardization: stats width mismatch");
  Dataset out = d;
  for (std::size_t r = 0; r < out.rows; ++r) {
    double* x = out.row(r);
    for (std::size_t c = 0; c < out.cols; ++c) x[c] = (x[c] - stats.mean[c]) / stats.stddev[c];
  }
  return out;
}

double rmse(const std::vector<double>& predictions, const std::vector<double>& targets) {
  if (predictions.empty()) throw std::invalid_argument("rmse: empty input");
  if (predictions.size() != targets.size())
    throw std::invalid_argument("rmse: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predictions.size()));
}

}  // namespace nevo
