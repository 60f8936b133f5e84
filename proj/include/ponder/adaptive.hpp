#pragma once

#include <span>
#include <vector>

#include "ponder/cells.hpp"
#include "ponder/tensor.hpp"

namespace ponder {

struct RepeatConfig {
  int rho = 1;  // repetitions per token, >= 1
};

struct ActConfig {
  double tau = 0.0;       // time-penalty weight, >= 0
  double epsilon = 0.01;  // halting slack, in (0,1)
  int max_steps = 50;     // hard cap on internal steps per token
};

// Per-token trace of the halting schedule. remainder_t carries the
// differentiable remainder; the plain fields mirror its value for
// bookkeeping.
struct HaltingRecord {
  int steps = 0;                    // N
  std::vector<double> halt_values;  // h_1 .. h_N
  std::vector<double> weights;      // p_1 .. p_N (p_n = h_n for n < N, p_N = R)
  double remainder = 0.0;           // R
  double ponder = 0.0;              // N + R
  Tensor remainder_t;
};

// Prepends the first-visit flag (1 when step_index == 1, else 0).
Tensor augment_input(const Tensor& x, int step_index);

// Each token emitted rho times with the flag marking the first copy.
std::vector<Tensor> repeat_expand(std::span<const Tensor> seq, int rho);

// Applies the cell rho times per token on flag-augmented inputs and emits
// the last intermediate state per token.
std::vector<CellState> repeat_rollout(const Cell& cell, std::span<const Tensor> seq, int rho);

// Pure form of the halting rule over a precomputed list of halting values.
HaltingRecord act_schedule(std::span<const double> halt_values, double epsilon, int max_steps);

struct ActResult {
  std::vector<CellState> states;        // one emitted (averaged) state per token
  std::vector<HaltingRecord> records;   // matching per-token traces
};

// Runs the cell on flag-augmented inputs until the halting head's cumulative
// sigmoid output reaches 1 - epsilon (capped at max_steps). The emitted state
// is the weighted average of the intermediates under the halting weights, and
// that averaged state is what the next token starts from.
ActResult act_rollout(const Cell& cell, const AffineHead& halting_head,
                      std::span<const Tensor> seq, const ActConfig& cfg);

// tau * mean over sequences of the per-sequence ponder sum. Differentiable
// through each remainder; the integer step counts contribute no gradient.
Tensor ponder_loss(std::span<const std::vector<HaltingRecord>> batch_records, double tau);

// Arithmetic mean of N over all records.
double mean_repetitions(std::span<const HaltingRecord> records);

}  // namespace ponder
