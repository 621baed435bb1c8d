// Command-line front end: the `run` subcommand executes a full experiment,
// `splits` prints the Monte Carlo partitions so external tooling (and
// two-process determinism checks) can consume them.
#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <iostream>

#include "nevo/harness.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitPartialFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitIngestionError = 3;

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw std::invalid_argument("config key '" + key + "': '" + value + "' is not a count");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw std::invalid_argument("config key '" + key + "': '" + value + "' is not a number");
  return out;
}

bool parse_switch(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw std::invalid_argument("config key '" + key + "': '" + value + "' is not a boolean");
}

int run_command(const nevo::ExperimentSpec& spec) {
  const nevo::ExperimentSummary summary = nevo::run_experiment(spec);
  for (const std::string& failure : summary.failures) std::cerr << "failed: " << failure << "\n";
  std::cout << "completed " << summary.runs_completed << " runs, " << summary.runs_failed
            << " failed\n";
  std::cout << "wrote " << summary.files_written.size() << " files to " << spec.output_dir << "\n";
  return summary.runs_failed == 0 ? kExitSuccess : kExitPartialFailure;
}

int splits_command(const std::string& dataset_path, std::size_t runs, double train_fraction,
                   std::uint64_t seed) {
  const nevo::Dataset data = nevo::load_dataset(dataset_path);
  const auto splits = nevo::monte_carlo_splits(data, runs, train_fraction, seed);
  std::cout << "dataset " << std::filesystem::path(dataset_path).stem().string() << " rows "
            << data.rows << " features " << data.cols << "\n";
  for (std::size_t i = 0; i < splits.size(); ++i) {
    std::cout << "run " << i << " train:";
    for (const std::size_t idx : splits[i].train) std::cout << " " << idx;
    std::cout << "\nrun " << i << " test:";
    for (const std::size_t idx : splits[i].test) std::cout << " " << idx;
    std::cout << "\n";
  }
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nevo: evolves compact regression networks with bounded semantic mutations"};
  app.require_subcommand(1);

  nevo::ExperimentSpec spec;
  std::string ablation = "main";
  std::string aprt = "none";
  std::string config_path;

  CLI::App* run = app.add_subcommand("run", "execute a multi-run experiment");
  run->add_option("--config", config_path, "flat key=value file; command-line flags win");
  run->add_option("--dataset", spec.dataset_path, "CSV file, last column is the target");
  run->add_option("--runs", spec.runs, "independent train/test splits to evaluate");
  run->add_option("--train-fraction", spec.train_fraction, "train share of each split");
  run->add_option("--generations", spec.cfg.generations, "generations per run");
  run->add_option("--pop-size", spec.cfg.population_size, "population size");
  run->add_option("--ms", spec.cfg.ms, "mutation step bound");
  run->add_option("--p-inflate", spec.cfg.p_inflate, "inflate probability (deflate gets the rest)");
  run->add_option("--span-fraction", spec.cfg.span_fraction,
                  "fraction of base layers each added chain spans");
  run->add_option("--aprt", aprt, "backprop on initial members: none, half, or all")
      ->check(CLI::IsMember({"none", "half", "all"}));
  run->add_flag("--apot", spec.cfg.apot, "backprop-tune the final best individual");
  run->add_option("--tournament-size", spec.cfg.tournament_size, "selection tournament size");
  run->add_option("--elitism", spec.cfg.elitism, "elites copied unchanged each generation");
  run->add_option("--seed", spec.cfg.seed, "master seed for splits and evolution");
  run->add_option("--out", spec.output_dir, "output directory");
  run->add_option("--ablation", ablation, "main, aprt, apot, prob, or span")
      ->check(CLI::IsMember({"main", "aprt", "apot", "prob", "span"}));
  run->add_option("--jobs", spec.jobs, "worker threads (0 = all cores)");

  std::string splits_dataset;
  std::size_t splits_runs = 30;
  double splits_fraction = 0.8;
  std::uint64_t splits_seed = 0;
  CLI::App* splits = app.add_subcommand("splits", "print Monte Carlo split index lists");
  splits->add_option("--dataset", splits_dataset, "CSV file, last column is the target")
      ->required();
  splits->add_option("--runs", splits_runs, "number of splits");
  splits->add_option("--train-fraction", splits_fraction, "train share of each split");
  splits->add_option("--seed", splits_seed, "master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitConfigError;
  }

  try {
    if (run->parsed()) {
      if (!config_path.empty()) {
        // A config value applies only when its flag was absent: flags win.
        for (const auto& [key, value] : nevo::read_flat_config(config_path)) {
          const CLI::Option* opt = run->get_option_no_throw("--" + key);
          if (opt == nullptr) throw std::invalid_argument("unknown config key '" + key + "'");
          if (opt->count() > 0) continue;
          if (key == "dataset") spec.dataset_path = value;
          else if (key == "runs") spec.runs = parse_count(key, value);
          else if (key == "train-fraction") spec.train_fraction = parse_real(key, value);
          else if (key == "generations") spec.cfg.generations = parse_count(key, value);
          else if (key == "pop-size") spec.cfg.population_size = parse_count(key, value);
          else if (key == "ms") spec.cfg.ms = parse_real(key, value);
          else if (key == "p-inflate") spec.cfg.p_inflate = parse_real(key, value);
          else if (key == "span-fraction") spec.cfg.span_fraction = parse_real(key, value);
          else if (key == "aprt") aprt = value;
          else if (key == "apot") spec.cfg.apot = parse_switch(key, value);
          else if (key == "tournament-size") spec.cfg.tournament_size = parse_count(key, value);
          else if (key == "elitism") spec.cfg.elitism = parse_count(key, value);
          else if (key == "seed") spec.cfg.seed = parse_count(key, value);
          else if (key == "out") spec.output_dir = value;
          else if (key == "ablation") ablation = value;
          else if (key == "jobs") spec.jobs = parse_count(key, value);
          else throw std::invalid_argument("unknown config key '" + key + "'");
        }
      }
      if (spec.dataset_path.empty())
        throw std::invalid_argument("--dataset is required (flag or config key)");
      if (spec.output_dir.empty())
        throw std::invalid_argument("--out is required (flag or config key)");
      if (aprt == "none") spec.cfg.apriori = nevo::AprioriMode::None;
      else if (aprt == "half") spec.cfg.apriori = nevo::AprioriMode::Half;
      else if (aprt == "all") spec.cfg.apriori = nevo::AprioriMode::All;
      else throw std::invalid_argument("aprt must be none, half, or all, got '" + aprt + "'");
      spec.ablation = nevo::ablation_from_name(ablation);
      return run_command(spec);
    }
    return splits_command(splits_dataset, splits_runs, splits_fraction, splits_seed);
  } catch (const nevo::IngestionError& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitIngestionError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartialFailure;
  }
}
