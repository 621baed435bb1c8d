#pragma once

#include <cstddef>
#include <vector>

namespace nevo {

// Two-sided Wilcoxon signed-rank comparison of paired samples.
struct WilcoxonResult {
  double statistic = 0.0;   // smaller of the positive/negative rank sums
  double p_value = 1.0;
  std::size_t n_used = 0;   // pairs remaining after zero differences are dropped
  bool exact = false;       // exact sign-flip distribution vs normal approximation
  bool degenerate = false;  // every paired difference was zero
};

// Requires equal lengths of at least 6 pairs. Zero differences are dropped,
// tied absolute differences share their average rank. Uses the exact sign-flip
// distribution when at most 15 pairs remain, otherwise a tie-corrected normal
// approximation with continuity correction.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace nevo
