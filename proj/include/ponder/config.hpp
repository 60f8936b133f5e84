#pragma once

#include <cstdint>
#include <string>

#include "ponder/tasks.hpp"

namespace ponder {

enum class CellKind { rnn, lstm };
enum class WrapperKind { none, repeat, act };
enum class Profile { paper, desk };
enum class Optim { sgd, adam };

std::string to_string(TaskKind t);
std::string to_string(CellKind c);
std::string to_string(WrapperKind w);
std::string to_string(Profile p);
std::string to_string(Optim o);

// Fully resolved experiment description. The harness owns resolution
// (profile defaults < config file < CLI flags); training consumes the result.
struct ExperimentConfig {
  TaskKind task = TaskKind::parity;
  CellKind cell = CellKind::rnn;
  WrapperKind wrapper = WrapperKind::none;
  int rho = 1;
  double tau = 0.0;
  double epsilon = 0.01;
  int act_max_steps = 50;
  int hidden = 128;
  double lr = 1e-3;
  int batch = 128;
  uint64_t seed = 1;
  long budget = 200000;
  long eval_interval = 1000;
  int eval_batches = 20;
  double clip = 1.0;  // global gradient-norm ceiling; <= 0 disables clipping
  Profile profile = Profile::paper;
  Optim optim = Optim::sgd;
  bool stop_on_solve = true;  // off: keep training past 98% (instability studies)
  ParityCounting parity_counting = ParityCounting::plus_ones_only;

  AdditionSpec addition_spec() const {
    return profile == Profile::desk ? AdditionSpec::desk() : AdditionSpec::full();
  }
  int raw_input_dim() const {
    return task == TaskKind::parity ? kParityDim : addition_spec().input_dim();
  }
  int output_dim() const {
    return task == TaskKind::parity ? 1 : addition_spec().logit_dim();
  }
  // Wrappers see the first-visit flag as an extra input column.
  int cell_input_dim() const {
    return raw_input_dim() + (wrapper == WrapperKind::none ? 0 : 1);
  }
};

// One line of metrics.jsonl, emitted every eval_interval steps.
struct MetricsRecord {
  long step = 0;
  double train_loss = 0.0;
  double eval_accuracy = 0.0;
  double mean_repetitions = 0.0;
  double mean_ponder = 0.0;
  bool diverged = false;
};

inline constexpr double kSolvedThreshold = 0.98;

}  // namespace ponder
