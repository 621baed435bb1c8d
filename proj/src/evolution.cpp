#include "nevo/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nevo {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

// Order of members by fitness: train RMSE ascending, index breaking ties.
std::vector<std::size_t> fitness_order(const Population& pop, std::size_t first_n) {
  std::vector<std::size_t> order(pop.members.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first_n),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      const double fa = pop.members[a]->train_rmse();
                      const double fb = pop.members[b]->train_rmse();
                      return fa != fb ? fa < fb : a < b;
                    });
  order.resize(first_n);
  return order;
}

std::size_t find_best(const Population& pop) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pop.members.size(); ++i)
    if (pop.members[i]->train_rmse() < pop.members[best]->train_rmse()) best = i;
  return best;
}

RunRecord snapshot(const Population& pop, int run_id, const std::string& method,
                   const StepStats& stats) {
  const CompositeIndividual& best = pop.best();
  RunRecord rec;
  rec.run_id = run_id;
  rec.generation = pop.generation;
  rec.method = method;
  rec.train_rmse = best.train_rmse();
  rec.test_rmse = best.test_rmse();
  rec.node_count = best.node_count();
  rec.gen_time_s = stats.gen_time_s;
  rec.mut_eval_time_s = stats.mut_eval_time_s;
  return rec;
}

}  // namespace

void validate(const EvolutionConfig& cfg) {
  if (cfg.population_size == 0) throw std::invalid_argument("config: population_size must be >= 1");
  if (cfg.tournament_size == 0) throw std::invalid_argument("config: tournament_size must be >= 1");
  if (cfg.elitism > cfg.population_size)
    throw std::invalid_argument("config: elitism exceeds population size");
  if (!(cfg.p_inflate >= 0.0 && cfg.p_inflate <= 1.0))
    throw std::invalid_argument("config: p_inflate must be in [0, 1]");
  if (!std::isfinite(cfg.ms) || cfg.ms <= 0.0)
    throw std::invalid_argument("config: ms must be positive");
  if (!(cfg.span_fraction > 0.0) || cfg.span_fraction > 1.0)
    throw std::invalid_argument("config: span_fraction must be in (0, 1]");
  if (cfg.architecture.depth_min < 1 || cfg.architecture.depth_max < cfg.architecture.depth_min)
    throw std::invalid_argument("config: bad depth range");
  if (cfg.architecture.width_min < 1 || cfg.architecture.width_max < cfg.architecture.width_min)
    throw std::invalid_argument("config: bad width range");
  if (cfg.architecture.weight_min > cfg.architecture.weight_max)
    throw std::invalid_argument("config: bad weight range");
  if (cfg.architecture.pool.empty()) throw std::invalid_argument("config: empty activation pool");
  if (!(cfg.apriori_opt.learning_rate > 0.0) || !(cfg.apot_opt.learning_rate > 0.0))
    throw std::invalid_argument("config: learning rates must be positive");
  if (cfg.apriori_opt.epochs < 0 || cfg.apot_opt.epochs < 0)
    throw std::invalid_argument("config: negative epoch count");
}

Population init_population(const EvolutionConfig& cfg, std::shared_ptr<const Dataset> train,
                           std::shared_ptr<const Dataset> test,
                           std::vector<MemberTraining>* training_log) {
  validate(cfg);
  if (!train || !test) throw std::invalid_argument("init_population: null dataset");
  if (train->cols != test->cols)
    throw std::invalid_argument("init_population: split width mismatch");

  std::vector<MlpNetwork> nets;
  nets.reserve(cfg.population_size);
  for (std::size_t slot = 0; slot < cfg.population_size; ++slot) {
    RandomStream rng = RandomStream::for_slot(cfg.seed, 0, slot);
    nets.push_back(random_mlp(train->cols, cfg.architecture, rng));
  }

  RandomStream selection_rng = RandomStream::for_slot(cfg.seed, 0, cfg.population_size);
  AprioriResult trained =
      apriori_train(std::move(nets), *train, cfg.apriori, cfg.apriori_opt, selection_rng);
  if (training_log) *training_log = std::move(trained.records);

  Population pop;
  pop.members.reserve(cfg.population_size);
  for (MlpNetwork& net : trained.networks)
    pop.members.push_back(std::make_shared<const CompositeIndividual>(
        CompositeIndividual::from_base(std::move(net), train, test)));
  pop.generation = 0;
  pop.best_index = find_best(pop);
  return pop;
}

std::size_t tournament_select(const Population& pop, std::size_t tournament_size,
                              RandomStream& rng) {
  if (pop.members.empty()) throw std::invalid_argument("tournament_select: empty population");
  if (tournament_size == 0) throw std::invalid_argument("tournament_select: zero tournament size");
  std::size_t winner = static_cast<std::size_t>(rng.below(pop.members.size()));
  for (std::size_t draw = 1; draw < tournament_size; ++draw) {
    const std::size_t candidate = static_cast<std::size_t>(rng.below(pop.members.size()));
    if (pop.members[candidate]->train_rmse() < pop.members[winner]->train_rmse())
      winner = candidate;
  }
  return winner;
}

Population step_generation(const Population& pop, const EvolutionConfig& cfg, StepStats* stats) {
  validate(cfg);
  if (pop.members.size() != cfg.population_size)
    throw std::invalid_argument("step_generation: population size does not match config");

  const auto gen_start = clock_type::now();
  const int next_gen = pop.generation + 1;
  Population out;
  out.members.resize(cfg.population_size);
  out.generation = next_gen;

  const std::vector<std::size_t> elites = fitness_order(pop, cfg.elitism);
  for (std::size_t e = 0; e < elites.size(); ++e) out.members[e] = pop.members[elites[e]];

  double mutation_seconds = 0.0;
  for (std::size_t slot = cfg.elitism; slot < cfg.population_size; ++slot) {
    RandomStream rng =
        RandomStream::for_slot(cfg.seed, static_cast<std::uint64_t>(next_gen), slot);
    const std::size_t parent_idx = tournament_select(pop, cfg.tournament_size, rng);
    const CompositeIndividual& parent = *pop.members[parent_idx];
    const double op_draw = rng.uniform();

    const auto mut_start = clock_type::now();
    CompositeIndividual child =
        (op_draw < cfg.p_inflate || parent.blocks().empty())
            ? inflate(parent, std::make_shared<PerturbationBlock>(build_perturbation(
                                  parent.train_activations(), parent.test_activations(),
                                  MutationStep(cfg.ms), cfg.span_fraction,
                                  cfg.architecture.pool, rng)))
            : deflate(parent, rng.below(parent.blocks().size()));
    mutation_seconds += seconds_since(mut_start);
    out.members[slot] = std::make_shared<const CompositeIndividual>(std::move(child));
  }

  out.best_index = find_best(out);
  if (stats) {
    stats->gen_time_s = seconds_since(gen_start);
    const std::size_t offspring = cfg.population_size - cfg.elitism;
    stats->mut_eval_time_s = offspring == 0 ? 0.0 : mutation_seconds / static_cast<double>(offspring);
  }
  return out;
}

EvolutionResult run_evolution(const EvolutionConfig& cfg, std::shared_ptr<const Dataset> train,
                              std::shared_ptr<const Dataset> test, int run_id,
                              const std::string& method) {
  validate(cfg);
  EvolutionResult result;

  const auto init_start = clock_type::now();
  Population pop = init_population(cfg, std::move(train), std::move(test), &result.apriori_log);
  StepStats init_stats{seconds_since(init_start), 0.0};
  result.log.push_back(snapshot(pop, run_id, method, init_stats));

  for (std::size_t g = 0; g < cfg.generations; ++g) {
    StepStats stats;
    pop = step_generation(pop, cfg, &stats);
    result.log.push_back(snapshot(pop, run_id, method, stats));
  }

  result.best = pop.members[pop.best_index];
  result.best_tuned = result.best;
  if (cfg.apot) {
    AposterioriResult tuned = aposteriori_train(*result.best, cfg.apot_opt);
    result.apot_applied = true;
    result.apot_record = std::move(tuned.record);
    result.apot_test_rmse_before = tuned.test_rmse_before;
    result.apot_test_rmse_after = tuned.test_rmse_after;
    result.best_tuned = std::make_shared<const CompositeIndividual>(std::move(tuned.tuned));
  }
  result.population = std::move(pop);
  return result;
}

}  // namespace nevo
