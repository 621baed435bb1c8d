#include "nevo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace nevo {
namespace {

// Average-rank assignment over absolute differences. Tied values share the
// mean of the 1-based positions they occupy, so ranks are half-integers.
std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

// Null distribution of the doubled positive rank sum, as assignment counts
// indexed by doubled sum. Doubling keeps half-integer midranks integral.
std::vector<std::uint64_t> doubled_sum_counts(const std::vector<double>& ranks) {
  std::vector<std::size_t> doubled(ranks.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    doubled[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
    total += doubled[i];
  }
  std::vector<std::uint64_t> counts(total + 1, 0);
  counts[0] = 1;
  for (const std::size_t d : doubled)
    for (std::size_t t = total - d + 1; t-- > 0;) counts[t + d] += counts[t];
  return counts;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("wilcoxon_signed_rank: sample lengths differ");
  if (a.size() < 6) throw std::invalid_argument("wilcoxon_signed_rank: needs at least 6 pairs");

  std::vector<double> abs_diff;
  std::vector<bool> is_positive;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d == 0.0) continue;
    abs_diff.push_back(std::abs(d));
    is_positive.push_back(d > 0.0);
  }

  WilcoxonResult res;
  res.n_used = abs_diff.size();
  if (res.n_used == 0) {
    res.degenerate = true;
    return res;
  }

  const std::vector<double> ranks = midranks(abs_diff);
  const double rank_total = std::accumulate(ranks.begin(), ranks.end(), 0.0);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i)
    if (is_positive[i]) w_plus += ranks[i];
  const double w_minus = rank_total - w_plus;
  res.statistic = std::min(w_plus, w_minus);

  const double n = static_cast<double>(res.n_used);
  if (res.n_used <= 15) {
    // Exact two-sided tail: assignments at or below the observed smaller sum
    // plus the mirrored upper tail, over all 2^n sign assignments.
    res.exact = true;
    const std::vector<std::uint64_t> counts = doubled_sum_counts(ranks);
    const std::size_t total2 = counts.size() - 1;
    const auto w2 = static_cast<std::size_t>(std::llround(2.0 * res.statistic));
    std::uint64_t tail = 0;
    for (std::size_t t = 0; t <= w2; ++t) tail += counts[t];
    for (std::size_t t = total2 - w2; t <= total2; ++t) tail += counts[t];
    const double assignments = std::ldexp(1.0, static_cast<int>(res.n_used));
    res.p_value = std::min(1.0, static_cast<double>(tail) / assignments);
  } else {
    double tie_term = 0.0;
    std::vector<double> sorted = abs_diff;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
    const double mean = n * (n + 1.0) / 4.0;
    const double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (res.statistic - mean + 0.5) / std::sqrt(variance);
    res.p_value = std::min(1.0, 2.0 * normal_cdf(z));
  }
  return res;
}

}  // namespace nevo
