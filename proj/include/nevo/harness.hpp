#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nevo/dataset.hpp"
#include "nevo/evolution.hpp"
#include "nevo/records.hpp"

namespace nevo {

// Dataset file problems: missing file, ragged rows, non-numeric or non-finite
// cells, too few rows or columns. Messages name the offending 1-based line.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads a comma-separated numeric file. The last column is the target, a
// single leading header line is detected by its non-numeric cells and
// skipped, blank lines are ignored.
Dataset load_dataset(const std::string& path);

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending row indices
  std::vector<std::size_t> test;
};

// Repeated random train/test partitions. Split i is derived from
// (master_seed, i) alone, so every algorithm given the same pair sees the
// same rows. Train size is round(train_fraction * n), kept within
// [1, n-1] so neither side is empty.
std::vector<SplitIndices> monte_carlo_splits(const Dataset& data, std::size_t runs,
                                             double train_fraction, std::uint64_t master_seed);

// New dataset holding the selected rows in the given order.
Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& indices);

enum class Ablation { MainComparison, AprT, ApoT, Probabilities, SpanFraction };

std::string ablation_name(Ablation a);          // file-name token: main, aprt, ...
Ablation ablation_from_name(const std::string& name);

struct ExperimentSpec {
  std::string dataset_path;
  std::size_t runs = 30;
  double train_fraction = 0.8;
  EvolutionConfig cfg;  // cfg.seed doubles as the experiment master seed
  Ablation ablation = Ablation::MainComparison;
  std::string output_dir;
  std::size_t jobs = 0;  // worker threads; 0 means all available cores
};

struct ExperimentSummary {
  std::size_t runs_completed = 0;
  std::size_t runs_failed = 0;
  std::vector<std::string> files_written;  // paths relative to output_dir
  std::vector<std::string> failures;       // one message per failed run
};

// Executes the selected ablation: one sub-experiment per method variant, each
// doing split, train-stats standardization, evolution (plus the size-matched
// backprop baseline in the main comparison, plus final-solution tuning in the
// apot ablation) over every run. Writes per-method generation and final
// tables, a pairwise signed-rank table, a timing summary, and per-run model
// dumps. A failed run is recorded and the rest continue.
ExperimentSummary run_experiment(const ExperimentSpec& spec);

// Method label used for the size-matched backprop baseline's rows.
inline const char* baseline_method_name() { return "baseline-nn"; }

// Flat key=value experiment manifest: one pair per line, # comments and blank
// lines skipped. Later duplicates win. Throws std::invalid_argument on lines
// without '=' or with an empty key, naming the line.
std::vector<std::pair<std::string, std::string>> read_flat_config(const std::string& path);

struct TimingStat {
  std::size_t count = 0;  // 0 flags an empty statistic
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 when count < 2
};

struct TimingReport {
  TimingStat total_run;            // summed generation times per (method, run)
  TimingStat per_generation;       // generation rows, generation >= 1
  TimingStat per_offspring_eval;   // mean mutation-evaluation times, generation >= 1
  TimingStat baseline_epoch;       // baseline rows' per-epoch train times
};

// Summarizes mixed per-generation records; rows whose method is
// baseline_method_name() feed the baseline per-epoch statistic.
TimingReport timing_report(const std::vector<RunRecord>& records);

std::string format_timing_report(const TimingReport& report);

}  // namespace nevo
