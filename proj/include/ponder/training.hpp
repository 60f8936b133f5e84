#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "ponder/adaptive.hpp"
#include "ponder/cells.hpp"
#include "ponder/config.hpp"
#include "ponder/param_store.hpp"
#include "ponder/tasks.hpp"

namespace ponder {

// Cell + heads + wrapper, assembled from a config.
struct Model {
  TaskKind task = TaskKind::parity;
  WrapperKind wrapper = WrapperKind::none;
  RepeatConfig repeat;
  ActConfig act;
  AdditionSpec addition;
  int batch = 128;
  ParityCounting parity_counting = ParityCounting::plus_ones_only;

  ParamStore params;
  std::unique_ptr<Cell> cell;
  AffineHead head;
  AffineHead halting;  // act only

  struct Forward {
    std::vector<Tensor> logits;          // per token; defined only where mask is set
    std::vector<HaltingRecord> records;  // per token; synthesized for fixed wrappers
  };
  Forward forward(const Sample& sample) const;
};

Model build_model(const ExperimentConfig& cfg);

struct UpdateResult {
  double grad_norm = 0.0;
  bool finite = true;
};

// theta <- theta - lr * g over every parameter, with optional global-norm
// clipping. Non-finite gradients leave parameters untouched and report
// finite=false so the caller can latch divergence.
UpdateResult sgd_update(ParamStore& params, double lr, double clip = 0.0);

// Bias-corrected Adam; exploratory alternative to plain SGD.
class AdamState {
 public:
  UpdateResult update(ParamStore& params, double lr, double clip = 0.0);

 private:
  std::map<std::string, std::vector<double>> m_, v_;
  long t_ = 0;
};

struct EvalResult {
  double accuracy = 0.0;
  double mean_repetitions = 0.0;
  double mean_ponder = 0.0;
};

// Mean accuracy over freshly generated batches (graph recording off).
// Parity counts per sample, addition per masked-in timestep with every head
// correct. Collects each token's HaltingRecord when a sink is given.
EvalResult evaluate(const Model& model, int n_batches, Rng& rng,
                    std::vector<HaltingRecord>* record_sink = nullptr);

struct CurvePoint {
  long step = 0;
  double accuracy = 0.0;
  double loss = 0.0;
  double ponder = 0.0;
  double repetitions = 0.0;
};

struct TrainReport {
  bool solved = false;
  std::optional<long> steps_to_solve;
  double mean_repetitions = 0.0;
  bool diverged = false;
  double final_accuracy = 0.0;
  std::vector<CurvePoint> curve;
};

struct TrainHooks {
  std::function<void(const MetricsRecord&)> on_metrics;
  // Polled at every evaluation; returning true ends the run early with the
  // report built so far (used by sweep schedulers).
  std::function<bool()> cancelled;
};

// SGD loop over fresh batches: task loss (+ tau * ponder for ACT), backward,
// update; evaluates every eval_interval steps and stops at the solved
// threshold (unless configured to keep going), at the step budget, or when
// the run goes non-finite, which is recorded as diverged rather than thrown.
TrainReport train_run(const ExperimentConfig& cfg, const TrainHooks& hooks = {},
                      Model* trained = nullptr);

// First curve step with accuracy >= threshold, if any.
std::optional<long> first_step_at_threshold(const std::vector<CurvePoint>& curve,
                                            double threshold);

}  // namespace ponder
