#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ponder/rng.hpp"
#include "ponder/tensor.hpp"

namespace ponder {

enum class TaskKind { parity, addition };

// How "odd number of ones" is read: literally (+1 entries only) or counting
// every nonzero entry. The literal reading is the default.
enum class ParityCounting { plus_ones_only, all_nonzero };

inline constexpr int kParityDim = 64;

// Shape of the addition task. The full task uses 5 numbers of up to 5 digits
// and 6 output heads; the desk profile shrinks all three.
struct AdditionSpec {
  int seq_len = 5;
  int max_digits = 5;
  int out_heads = 6;

  static AdditionSpec full() { return {5, 5, 6}; }
  static AdditionSpec desk() { return {2, 2, 3}; }

  int input_dim() const { return 10 * max_digits; }
  int logit_dim() const { return 11 * out_heads; }
  long long max_value() const;
};

// 11th class: digit position past the end of the rendered sum.
inline constexpr int kCompleteMarker = 10;

struct Sample {
  TaskKind task = TaskKind::parity;
  std::vector<Tensor> inputs;
  std::vector<bool> mask;  // same length as inputs
  int bit_target = 0;                          // parity
  std::vector<std::vector<int>> class_targets; // addition: per step, per head
};

struct Batch {
  std::vector<Sample> samples;
};

// 64-vector with k ~ U{1..64} entries set to +/-1 (equiprobable, positions
// without replacement), target from parity_oracle.
Sample gen_parity(Rng& rng, ParityCounting counting = ParityCounting::plus_ones_only);

// Entries must be in {-1, 0, +1}.
int parity_oracle(const std::vector<double>& x,
                  ParityCounting counting = ParityCounting::plus_ones_only);

// D one-hot(10) digit blocks, least-significant digit first, zero padding up
// to max_digits blocks. value must fit in D digits.
Tensor encode_number(long long value, int digits, int max_digits = 5);

// Cumulative sums rendered least-significant digit first across out_heads
// positions; positions past the rendered digits carry the complete marker.
std::vector<std::vector<int>> addition_oracle(const std::vector<long long>& values,
                                              const AdditionSpec& spec);

Sample gen_addition(Rng& rng, const AdditionSpec& spec = AdditionSpec::full());

Batch gen_batch(TaskKind task, int size, Rng& rng, const AdditionSpec& spec,
                ParityCounting counting = ParityCounting::plus_ones_only);

struct ParityMetrics {
  Tensor loss;
  bool correct = false;
};

// Binary cross-entropy on the sigmoid of the logit; correct iff the
// thresholded sigmoid matches the target.
ParityMetrics parity_metrics(const Tensor& logit, int target);

struct AdditionMetrics {
  Tensor loss;                      // summed over masked-in steps
  std::vector<bool> correct_steps;  // one entry per masked-in step
};

// Per masked-in step: sum over heads of softmax cross-entropy; a step counts
// as correct only when every head's argmax matches.
AdditionMetrics addition_metrics(const std::vector<Tensor>& logits_per_step,
                                 const Sample& sample, const AdditionSpec& spec);

// One JSON object per line: {task, inputs, targets, mask, seed}. Fixture
// format for comparing generators across implementations.
void write_sample_jsonl(std::ostream& os, const std::vector<Sample>& samples, uint64_t seed);

}  // namespace ponder
