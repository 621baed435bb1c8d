#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace nevo {

// One row of the per-generation results table. Column order in files is
// run_id,generation,method,train_rmse,test_rmse,node_count,gen_time_s,mut_eval_time_s.
struct RunRecord {
  int run_id = 0;
  int generation = 0;
  std::string method;
  double train_rmse = 0.0;
  double test_rmse = 0.0;
  std::size_t node_count = 0;
  double gen_time_s = 0.0;
  double mut_eval_time_s = 0.0;  // mean per offspring; 0 for generation 0
};

struct TrainingRecord {
  std::vector<double> loss_curve;  // one entry per epoch run
  int epochs_run = 0;
  double wall_time_s = 0.0;
  std::vector<std::string> warnings;
};

}  // namespace nevo
