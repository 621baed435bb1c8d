#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nevo/composite.hpp"
#include "nevo/records.hpp"
#include "nevo/trainer.hpp"

namespace nevo {

struct EvolutionConfig {
  std::size_t population_size = 100;
  std::size_t generations = 200;
  double ms = 2.0;
  double p_inflate = 0.7;  // deflate is chosen with the complementary probability
  double span_fraction = 1.0;
  std::size_t tournament_size = 2;
  std::size_t elitism = 1;
  std::uint64_t seed = 0;
  ArchitectureRanges architecture;
  AprioriMode apriori = AprioriMode::None;
  OptimizerConfig apriori_opt{0.01, 100};
  bool apot = false;
  OptimizerConfig apot_opt{0.001, 100};
};

// Throws std::invalid_argument describing the first offending field.
void validate(const EvolutionConfig& cfg);

struct Population {
  std::vector<std::shared_ptr<const CompositeIndividual>> members;
  int generation = 0;
  std::size_t best_index = 0;  // lowest train RMSE, ties to the lowest index

  const CompositeIndividual& best() const { return *members[best_index]; }
};

// Builds generation 0: random base networks from per-slot streams
// (seed, 0, slot), optional a-priori backprop per cfg.apriori, then wrapping.
// The Half-mode subset draw uses slot index population_size.
Population init_population(const EvolutionConfig& cfg, std::shared_ptr<const Dataset> train,
                           std::shared_ptr<const Dataset> test,
                           std::vector<MemberTraining>* training_log = nullptr);

// Tournament with replacement on train RMSE; ties go to the earliest draw.
std::size_t tournament_select(const Population& pop, std::size_t tournament_size,
                              RandomStream& rng);

struct StepStats {
  double gen_time_s = 0.0;
  double mut_eval_time_s = 0.0;  // mean over this generation's offspring
};

// One generational replacement: elites are carried over as-is, every other
// slot gets a freshly mutated child of a tournament-selected parent. Each
// slot draws from its own counter-based stream (seed, generation, slot), so
// the outcome does not depend on processing order. A parent with no blocks
// always takes the inflate branch.
Population step_generation(const Population& pop, const EvolutionConfig& cfg,
                           StepStats* stats = nullptr);

struct EvolutionResult {
  Population population;
  std::shared_ptr<const CompositeIndividual> best;
  std::vector<RunRecord> log;  // one row per generation, 0 through cfg.generations
  std::vector<MemberTraining> apriori_log;
  bool apot_applied = false;
  TrainingRecord apot_record;
  double apot_test_rmse_before = 0.0;
  double apot_test_rmse_after = 0.0;
  std::shared_ptr<const CompositeIndividual> best_tuned;  // == best when apot is off
};

// Full deterministic run: a fixed (cfg, datasets) pair always produces the
// same log. Expects standardized features.
EvolutionResult run_evolution(const EvolutionConfig& cfg, std::shared_ptr<const Dataset> train,
                              std::shared_ptr<const Dataset> test, int run_id = 0,
                              const std::string& method = "nevo-gspt");

}  // namespace nevo
