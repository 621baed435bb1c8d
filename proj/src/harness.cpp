#include "nevo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "nevo/stats.hpp"
#include "nevo/trainer.hpp"

namespace nevo {
namespace {

// Domain tags keep the split, per-run evolution, and baseline-init streams
// apart even though they all descend from one master seed.
constexpr std::uint64_t kSplitDomain = 0x53504C4954;     // "SPLIT"
constexpr std::uint64_t kEvolutionDomain = 0x45564F;     // "EVO"
constexpr std::uint64_t kBaselineDomain = 0x42415345;    // "BASE"

std::string trim(const std::string& s) {
  std::size_t lo = 0, hi = s.size();
  while (lo < hi && (s[lo] == ' ' || s[lo] == '\t' || s[lo] == '\r')) ++lo;
  while (hi > lo && (s[hi - 1] == ' ' || s[hi - 1] == '\t' || s[hi - 1] == '\r')) --hi;
  return s.substr(lo, hi - lo);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

bool parse_cell(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (*first == '+') ++first;  // from_chars takes '-' but not '+'
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IngestionError("cannot open dataset file: " + path);

  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected_cells = 0;
  bool header_candidate = true;
  while (std::getline(file, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_cells(line);

    std::vector<double> values(cells.size());
    bool all_numeric = true;
    std::size_t bad_cell = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_cell(cells[c], values[c])) {
        all_numeric = false;
        bad_cell = c;
        break;
      }
    }
    if (header_candidate) {
      header_candidate = false;
      if (!all_numeric) continue;  // single header line, skipped
    }
    if (!all_numeric)
      throw IngestionError("row " + std::to_string(line_no) + ": cannot parse cell '" +
                           cells[bad_cell] + "' as a number");
    for (std::size_t c = 0; c < values.size(); ++c)
      if (!std::isfinite(values[c]))
        throw IngestionError("row " + std::to_string(line_no) + ": non-finite value in column " +
                             std::to_string(c + 1));

    if (expected_cells == 0) {
      if (cells.size() < 2)
        throw IngestionError("row " + std::to_string(line_no) +
                             ": needs at least one feature column plus the target");
      expected_cells = cells.size();
    } else if (cells.size() != expected_cells) {
      throw IngestionError("row " + std::to_string(line_no) + " has " +
                           std::to_string(cells.size()) + " columns, expected " +
                           std::to_string(expected_cells));
    }
    data.features.insert(data.features.end(), values.begin(), values.end() - 1);
    data.targets.push_back(values.back());
    ++data.rows;
  }
  if (data.rows < 2)
    throw IngestionError("dataset has " + std::to_string(data.rows) + " rows, needs at least 2");
  data.cols = expected_cells - 1;
  return data;
}

std::vector<SplitIndices> monte_carlo_splits(const Dataset& data, std::size_t runs,
                                             double train_fraction, std::uint64_t master_seed) {
  if (runs < 1) throw std::invalid_argument("monte_carlo_splits: runs must be at least 1");
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
    throw std::invalid_argument("monte_carlo_splits: train_fraction must lie in (0, 1)");

  const std::size_t n = data.rows;
  auto train_size =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  train_size = std::clamp<std::size_t>(train_size, 1, n - 1);

  std::vector<SplitIndices> splits(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    RandomStream rng(mix_seed(master_seed, kSplitDomain, i));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    splits[i].train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_size));
    splits[i].test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_size), order.end());
    std::sort(splits[i].train.begin(), splits[i].train.end());
    std::sort(splits[i].test.begin(), splits[i].test.end());
  }
  return splits;
}

Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.rows = indices.size();
  out.cols = data.cols;
  out.features.reserve(out.rows * out.cols);
  out.targets.reserve(out.rows);
  for (const std::size_t r : indices) {
    const double* row = data.row(r);
    out.features.insert(out.features.end(), row, row + data.cols);
    out.targets.push_back(data.targets[r]);
  }
  return out;
}

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::MainComparison: return "main";
    case Ablation::AprT: return "aprt";
    case Ablation::ApoT: return "apot";
    case Ablation::Probabilities: return "prob";
    case Ablation::SpanFraction: return "span";
  }
  throw std::logic_error("ablation_name: unknown ablation");
}

Ablation ablation_from_name(const std::string& name) {
  if (name == "main") return Ablation::MainComparison;
  if (name == "aprt") return Ablation::AprT;
  if (name == "apot") return Ablation::ApoT;
  if (name == "prob") return Ablation::Probabilities;
  if (name == "span") return Ablation::SpanFraction;
  throw std::invalid_argument("unknown ablation '" + name + "'");
}

namespace {

struct SubExperiment {
  std::string method;
  EvolutionConfig cfg;
  bool with_baseline = false;
};

std::vector<SubExperiment> plan_sub_experiments(const ExperimentSpec& spec) {
  std::vector<SubExperiment> subs;
  switch (spec.ablation) {
    case Ablation::MainComparison:
      subs.push_back({"nevo-gspt", spec.cfg, true});
      break;
    case Ablation::AprT:
      for (const auto& [label, mode] :
           {std::pair{"aprt-none", AprioriMode::None}, std::pair{"aprt-half", AprioriMode::Half},
            std::pair{"aprt-all", AprioriMode::All}}) {
        SubExperiment sub{label, spec.cfg, false};
        sub.cfg.apriori = mode;
        subs.push_back(std::move(sub));
      }
      break;
    case Ablation::ApoT:
      for (const bool on : {false, true}) {
        SubExperiment sub{on ? "apot-on" : "apot-off", spec.cfg, false};
        sub.cfg.apot = on;
        subs.push_back(std::move(sub));
      }
      break;
    case Ablation::Probabilities:
      for (const auto& [label, p] : {std::pair{"p-inflate-0.3", 0.3}, std::pair{"p-inflate-0.5", 0.5},
                                     std::pair{"p-inflate-0.7", 0.7}, std::pair{"p-inflate-1.0", 1.0}}) {
        SubExperiment sub{label, spec.cfg, false};
        sub.cfg.p_inflate = p;
        subs.push_back(std::move(sub));
      }
      break;
    case Ablation::SpanFraction:
      for (const auto& [label, f] : {std::pair{"span-0.3", 0.3}, std::pair{"span-0.5", 0.5},
                                     std::pair{"span-0.7", 0.7}, std::pair{"span-1.0", 1.0}}) {
        SubExperiment sub{label, spec.cfg, false};
        sub.cfg.span_fraction = f;
        subs.push_back(std::move(sub));
      }
      break;
  }
  return subs;
}

struct FinalRow {
  int run_id = 0;
  std::string method;
  double train_rmse = 0.0;
  double test_rmse = 0.0;
  std::size_t node_count = 0;
  double total_time_s = 0.0;
};

struct WorkResult {
  std::vector<RunRecord> evolution_rows;
  std::vector<RunRecord> baseline_rows;
  std::vector<FinalRow> finals;
  std::vector<std::pair<std::string, std::string>> models;  // file name, dump text
  std::string failure;  // non-empty marks the run failed
};

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::string serialize_model(const MaterializedComposite& mat, const std::string& method,
                            int run_id, double train_rmse, double test_rmse) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "nevo-model 1\n";
  out << "method " << method << "\n";
  out << "run " << run_id << "\n";
  out << "train_rmse " << train_rmse << "\n";
  out << "test_rmse " << test_rmse << "\n";
  out << "input_dim " << mat.base.input_dim << "\n";
  out << "layers " << mat.base.layers.size() << "\n";
  for (const Layer& layer : mat.base.layers) {
    out << "layer " << layer.in_dim << " " << layer.out_dim << "\n";
    for (std::size_t nrn = 0; nrn < layer.out_dim; ++nrn) {
      out << "neuron " << activation_name(layer.activations[nrn]) << " " << layer.biases[nrn];
      for (std::size_t w = 0; w < layer.in_dim; ++w)
        out << " " << layer.weights[nrn * layer.in_dim + w];
      out << "\n";
    }
  }
  out << "blocks " << mat.blocks.size() << "\n";
  for (const auto& block : mat.blocks) {
    out << "block " << block.chain.size() << " " << block.output_weight << "\n";
    for (const ChainNeuron& nrn : block.chain) {
      out << "chain " << activation_name(nrn.activation) << " " << nrn.bias << " ";
      if (nrn.has_chain_input)
        out << nrn.chain_weight;
      else
        out << "none";
      for (const double w : nrn.input_weights) out << " " << w;
      out << "\n";
    }
  }
  return out.str();
}

WorkResult execute_run(const ExperimentSpec& spec, const SubExperiment& sub, const Dataset& full,
                       const SplitIndices& split, std::size_t run) {
  WorkResult result;
  try {
    const Dataset raw_train = take_rows(full, split.train);
    const Dataset raw_test = take_rows(full, split.test);
    const FeatureStats stats = feature_stats(raw_train);
    const auto train = std::make_shared<const Dataset>(apply_standardization(raw_train, stats));
    const auto test = std::make_shared<const Dataset>(apply_standardization(raw_test, stats));

    EvolutionConfig cfg = sub.cfg;
    cfg.seed = mix_seed(spec.cfg.seed, kEvolutionDomain, run);
    const int run_id = static_cast<int>(run);
    const EvolutionResult evo = run_evolution(cfg, train, test, run_id, sub.method);
    result.evolution_rows = evo.log;

    double total_time = 0.0;
    for (const RunRecord& row : evo.log) total_time += row.gen_time_s;

    const CompositeIndividual& reported = evo.apot_applied ? *evo.best_tuned : *evo.best;
    if (evo.apot_applied) total_time += evo.apot_record.wall_time_s;
    result.finals.push_back({run_id, sub.method, reported.train_rmse(), reported.test_rmse(),
                             reported.node_count(), total_time});
    result.models.emplace_back(
        sub.method + "_run" + std::to_string(run) + ".txt",
        serialize_model(materialize(reported), sub.method, run_id, reported.train_rmse(),
                        reported.test_rmse()));

    if (sub.with_baseline) {
      RandomStream rng(mix_seed(spec.cfg.seed, kBaselineDomain, run));
      const BaselineSpec baseline_spec = derive_baseline_spec(*evo.best);
      const OptimizerConfig opt{0.01, 100};
      const BaselineResult baseline = baseline_nn(baseline_spec, *train, *test, opt, rng);
      const double per_epoch = baseline.record.epochs_run > 0
                                   ? baseline.record.wall_time_s /
                                         static_cast<double>(baseline.record.epochs_run)
                                   : 0.0;
      RunRecord row;
      row.run_id = run_id;
      row.generation = 0;
      row.method = baseline_method_name();
      row.train_rmse = baseline.train_rmse;
      row.test_rmse = baseline.test_rmse;
      row.node_count = baseline.network.neuron_count();
      row.gen_time_s = baseline.record.wall_time_s;
      row.mut_eval_time_s = per_epoch;
      result.baseline_rows.push_back(row);
      result.finals.push_back({run_id, baseline_method_name(), baseline.train_rmse,
                               baseline.test_rmse, baseline.network.neuron_count(),
                               baseline.record.wall_time_s});
      result.models.emplace_back(
          std::string(baseline_method_name()) + "_run" + std::to_string(run) + ".txt",
          serialize_model(MaterializedComposite{baseline.network, {}}, baseline_method_name(),
                          run_id, baseline.train_rmse, baseline.test_rmse));
    }
  } catch (const std::exception& e) {
    result = WorkResult{};
    result.failure = sub.method + " run " + std::to_string(run) + ": " + e.what();
  }
  return result;
}

void write_records_csv(std::ofstream& out, const std::vector<RunRecord>& rows) {
  out << "run_id,generation,method,train_rmse,test_rmse,node_count,gen_time_s,mut_eval_time_s\n";
  for (const RunRecord& r : rows) {
    out << r.run_id << "," << r.generation << "," << r.method << "," << format_double(r.train_rmse)
        << "," << format_double(r.test_rmse) << "," << r.node_count << ","
        << format_double(r.gen_time_s) << "," << format_double(r.mut_eval_time_s) << "\n";
  }
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentSpec& spec) {
  if (spec.runs < 1) throw std::invalid_argument("run_experiment: runs must be at least 1");
  if (!(spec.train_fraction > 0.0) || !(spec.train_fraction < 1.0))
    throw std::invalid_argument("run_experiment: train_fraction must lie in (0, 1)");
  if (spec.output_dir.empty())
    throw std::invalid_argument("run_experiment: output_dir must be set");
  validate(spec.cfg);

  const Dataset full = load_dataset(spec.dataset_path);
  const std::vector<SplitIndices> splits =
      monte_carlo_splits(full, spec.runs, spec.train_fraction, spec.cfg.seed);
  const std::vector<SubExperiment> subs = plan_sub_experiments(spec);

  namespace fs = std::filesystem;
  const fs::path out_dir(spec.output_dir);
  fs::create_directories(out_dir / "models");
  const std::string dataset = fs::path(spec.dataset_path).stem().string();
  const std::string tag = dataset + "_" + ablation_name(spec.ablation);

  // One work item per (sub-experiment, run), farmed to a worker pool. Items
  // are internally seeded, so the worker count never changes the results.
  std::vector<WorkResult> results(subs.size() * spec.runs);
  std::size_t jobs = spec.jobs ? spec.jobs : std::thread::hardware_concurrency();
  jobs = std::clamp<std::size_t>(jobs, 1, results.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t item = next.fetch_add(1);
      if (item >= results.size()) break;
      const std::size_t sub = item / spec.runs;
      const std::size_t run = item % spec.runs;
      results[item] = execute_run(spec, subs[sub], full, splits[run], run);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j + 1 < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  // Single-threaded writer keeps every output file in deterministic order.
  ExperimentSummary summary;
  auto open_file = [&](const std::string& name) {
    std::ofstream out(out_dir / name);
    if (!out) throw std::runtime_error("cannot write output file: " + (out_dir / name).string());
    summary.files_written.push_back(name);
    return out;
  };

  std::vector<RunRecord> all_rows;
  std::vector<FinalRow> all_finals;
  for (std::size_t s = 0; s < subs.size(); ++s) {
    std::vector<RunRecord> method_rows, baseline_rows;
    for (std::size_t run = 0; run < spec.runs; ++run) {
      const WorkResult& r = results[s * spec.runs + run];
      if (!r.failure.empty()) {
        summary.failures.push_back(r.failure);
        ++summary.runs_failed;
        continue;
      }
      ++summary.runs_completed;
      method_rows.insert(method_rows.end(), r.evolution_rows.begin(), r.evolution_rows.end());
      baseline_rows.insert(baseline_rows.end(), r.baseline_rows.begin(), r.baseline_rows.end());
      all_finals.insert(all_finals.end(), r.finals.begin(), r.finals.end());
      for (const auto& [name, text] : r.models) {
        auto out = open_file("models/" + tag + "_" + name);
        out << text;
      }
    }
    all_rows.insert(all_rows.end(), method_rows.begin(), method_rows.end());
    all_rows.insert(all_rows.end(), baseline_rows.begin(), baseline_rows.end());
    {
      auto out = open_file(tag + "_" + subs[s].method + "_generations.csv");
      write_records_csv(out, method_rows);
    }
    if (subs[s].with_baseline) {
      auto out = open_file(tag + "_" + std::string(baseline_method_name()) + "_generations.csv");
      write_records_csv(out, baseline_rows);
    }
  }

  // Per-method final tables: one row per completed run.
  std::vector<std::string> methods;
  for (const FinalRow& row : all_finals)
    if (std::find(methods.begin(), methods.end(), row.method) == methods.end())
      methods.push_back(row.method);
  for (const std::string& method : methods) {
    auto out = open_file(tag + "_" + method + "_final.csv");
    out << "run_id,method,train_rmse,test_rmse,node_count,total_time_s\n";
    for (const FinalRow& row : all_finals) {
      if (row.method != method) continue;
      out << row.run_id << "," << row.method << "," << format_double(row.train_rmse) << ","
          << format_double(row.test_rmse) << "," << row.node_count << ","
          << format_double(row.total_time_s) << "\n";
    }
  }

  // Pairwise signed-rank comparison of final test RMSE, paired by run. Pairs
  // need at least 6 runs completed by both methods.
  {
    auto out = open_file(tag + "_wilcoxon.csv");
    out << "method_a,method_b,pairs,statistic,p_value,degenerate\n";
    for (std::size_t i = 0; i < methods.size(); ++i) {
      for (std::size_t j = i + 1; j < methods.size(); ++j) {
        std::vector<double> a, b;
        for (std::size_t run = 0; run < spec.runs; ++run) {
          const FinalRow* ra = nullptr;
          const FinalRow* rb = nullptr;
          for (const FinalRow& row : all_finals) {
            if (row.run_id != static_cast<int>(run)) continue;
            if (row.method == methods[i]) ra = &row;
            if (row.method == methods[j]) rb = &row;
          }
          if (ra && rb) {
            a.push_back(ra->test_rmse);
            b.push_back(rb->test_rmse);
          }
        }
        if (a.size() < 6) continue;
        const WilcoxonResult w = wilcoxon_signed_rank(a, b);
        out << methods[i] << "," << methods[j] << "," << w.n_used << ","
            << format_double(w.statistic) << "," << format_double(w.p_value) << ","
            << (w.degenerate ? 1 : 0) << "\n";
      }
    }
  }

  {
    auto out = open_file(tag + "_timing.txt");
    out << format_timing_report(timing_report(all_rows));
  }

  if (!summary.failures.empty()) {
    auto out = open_file(tag + "_failures.txt");
    for (const std::string& f : summary.failures) out << f << "\n";
  }
  return summary;
}

std::vector<std::pair<std::string, std::string>> read_flat_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::invalid_argument("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key=value");
    const std::string key = trim(text.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    const std::string value = trim(text.substr(eq + 1));
    // Later duplicates win, matching how repeated flags behave.
    bool replaced = false;
    for (auto& pair : pairs) {
      if (pair.first == key) {
        pair.second = value;
        replaced = true;
        break;
      }
    }
    if (!replaced) pairs.emplace_back(key, value);
  }
  return pairs;
}

namespace {

TimingStat summarize(const std::vector<double>& samples) {
  TimingStat stat;
  stat.count = samples.size();
  if (samples.empty()) return stat;
  stat.mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
              static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (const double v : samples) ss += (v - stat.mean) * (v - stat.mean);
    stat.stddev = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  }
  return stat;
}

std::string format_stat(const char* label, const TimingStat& stat) {
  std::ostringstream out;
  out << label << ": ";
  if (stat.count == 0) {
    out << "(no samples)\n";
    return out.str();
  }
  out << std::fixed << std::setprecision(6) << stat.mean << " s +/- " << stat.stddev << " s over "
      << stat.count << " samples\n";
  return out.str();
}

}  // namespace

TimingReport timing_report(const std::vector<RunRecord>& records) {
  TimingReport report;
  std::vector<double> per_gen, per_offspring, baseline_epoch;
  // Totals are keyed by (method, run) so mixed-method record sets stay apart.
  std::vector<std::pair<std::pair<std::string, int>, double>> totals;
  for (const RunRecord& row : records) {
    if (row.method == baseline_method_name()) {
      baseline_epoch.push_back(row.mut_eval_time_s);
      continue;
    }
    const std::pair<std::string, int> key{row.method, row.run_id};
    auto it = std::find_if(totals.begin(), totals.end(),
                           [&](const auto& entry) { return entry.first == key; });
    if (it == totals.end())
      totals.push_back({key, row.gen_time_s});
    else
      it->second += row.gen_time_s;
    if (row.generation >= 1) {
      per_gen.push_back(row.gen_time_s);
      per_offspring.push_back(row.mut_eval_time_s);
    }
  }
  std::vector<double> total_samples;
  total_samples.reserve(totals.size());
  for (const auto& entry : totals) total_samples.push_back(entry.second);

  report.total_run = summarize(total_samples);
  report.per_generation = summarize(per_gen);
  report.per_offspring_eval = summarize(per_offspring);
  report.baseline_epoch = summarize(baseline_epoch);
  return report;
}

std::string format_timing_report(const TimingReport& report) {
  std::string out;
  out += format_stat("total run time", report.total_run);
  out += format_stat("per-generation time", report.per_generation);
  out += format_stat("per-offspring mutation evaluation", report.per_offspring_eval);
  out += format_stat("baseline per-epoch backprop", report.baseline_epoch);
  return out;
}

}  // namespace nevo
