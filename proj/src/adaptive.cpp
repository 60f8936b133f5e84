#include "ponder/adaptive.hpp"

namespace ponder {

namespace {

void check_repeat(int rho) {
  if (rho < 1) throw UsageError("repeat: rho must be >= 1");
}

void check_act(const ActConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
    throw UsageError("act: epsilon must be in (0,1)");
  if (cfg.max_steps < 1) throw UsageError("act: max_steps must be >= 1");
  if (cfg.tau < 0.0) throw UsageError("act: tau must be >= 0");
}

}  // namespace

Tensor augment_input(const Tensor& x, int step_index) {
  if (step_index < 1) throw UsageError("augment_input: step index starts at 1");
  return concat(Tensor::scalar(step_index == 1 ? 1.0 : 0.0), x);
}

std::vector<Tensor> repeat_expand(std::span<const Tensor> seq, int rho) {
  check_repeat(rho);
  std::vector<Tensor> out;
  out.reserve(seq.size() * static_cast<size_t>(rho));
  for (const Tensor& x : seq)
    for (int n = 1; n <= rho; ++n) out.push_back(augment_input(x, n));
  return out;
}

std::vector<CellState> repeat_rollout(const Cell& cell, std::span<const Tensor> seq, int rho) {
  check_repeat(rho);
  std::vector<CellState> emitted;
  emitted.reserve(seq.size());
  CellState s = cell.initial_state();
  for (const Tensor& x : seq) {
    for (int n = 1; n <= rho; ++n) s = cell.step(s, augment_input(x, n));
    emitted.push_back(s);
  }
  return emitted;
}

HaltingRecord act_schedule(std::span<const double> halt_values, double epsilon, int max_steps) {
  HaltingRecord rec;
  double cum = 0.0;
  for (const double h : halt_values) {
    rec.halt_values.push_back(h);
    ++rec.steps;
    if (cum + h >= 1.0 - epsilon || rec.steps == max_steps) break;
    cum += h;
  }
  rec.remainder = 1.0 - cum;
  rec.weights.assign(rec.halt_values.begin(), rec.halt_values.end() - 1);
  rec.weights.push_back(rec.remainder);
  rec.ponder = rec.steps + rec.remainder;
  return rec;
}

ActResult act_rollout(const Cell& cell, const AffineHead& halting_head,
                      std::span<const Tensor> seq, const ActConfig& cfg) {
  check_act(cfg);
  const bool lstm = cell.initial_state().c.defined();

  ActResult out;
  out.states.reserve(seq.size());
  out.records.reserve(seq.size());
  CellState carry = cell.initial_state();

  for (const Tensor& x : seq) {
    std::vector<CellState> inter;
    std::vector<Tensor> halt_t;  // sigmoid outputs, shape {1}
    HaltingRecord rec;

    CellState s = carry;
    double cum = 0.0;
    int n = 0;
    while (true) {
      ++n;
      s = cell.step(s, augment_input(x, n));
      Tensor h = activate(Act::sigmoid, halting_head.apply(s.h));
      inter.push_back(s);
      halt_t.push_back(h);
      rec.halt_values.push_back(h.item());
      if (cum + h.item() >= 1.0 - cfg.epsilon || n == cfg.max_steps) break;
      cum += h.item();
    }
    rec.steps = n;

    // R = 1 - sum of halting values before the final step, as a graph node so
    // the ponder cost and the averaged state reach the halting head.
    Tensor remainder;
    if (n == 1) {
      remainder = Tensor::scalar(1.0);
    } else {
      std::vector<Tensor> before(halt_t.begin(), halt_t.end() - 1);
      remainder = axpb(sum_list(before), -1.0, 1.0);
    }
    rec.remainder = remainder.item();
    rec.remainder_t = remainder;
    rec.weights.assign(rec.halt_values.begin(), rec.halt_values.end() - 1);
    rec.weights.push_back(rec.remainder);
    rec.ponder = rec.steps + rec.remainder;

    std::vector<Tensor> weights(halt_t.begin(), halt_t.end() - 1);
    weights.push_back(remainder);

    std::vector<Tensor> hs, cs;
    hs.reserve(inter.size());
    for (const CellState& st : inter) hs.push_back(st.h);
    CellState averaged;
    averaged.h = weighted_sum(hs, weights);
    if (lstm) {
      cs.reserve(inter.size());
      for (const CellState& st : inter) cs.push_back(st.c);
      averaged.c = weighted_sum(cs, weights);
    }

    out.states.push_back(averaged);
    out.records.push_back(std::move(rec));
    carry = averaged;
  }
  return out;
}

Tensor ponder_loss(std::span<const std::vector<HaltingRecord>> batch_records, double tau) {
  if (batch_records.empty()) throw UsageError("ponder_loss: empty batch");
  std::vector<Tensor> per_sequence;
  per_sequence.reserve(batch_records.size());
  for (const auto& seq_records : batch_records) {
    std::vector<Tensor> terms;
    terms.reserve(seq_records.size());
    for (const HaltingRecord& rec : seq_records) {
      if (!rec.remainder_t.defined()) throw UsageError("ponder_loss: record lacks remainder");
      terms.push_back(axpb(rec.remainder_t, 1.0, static_cast<double>(rec.steps)));
    }
    per_sequence.push_back(sum_list(terms));
  }
  return scale(sum_list(per_sequence), tau / static_cast<double>(batch_records.size()));
}

double mean_repetitions(std::span<const HaltingRecord> records) {
  if (records.empty()) throw UsageError("mean_repetitions: empty input");
  long long total = 0;
  for (const HaltingRecord& rec : records) total += rec.steps;
  return static_cast<double>(total) / static_cast<double>(records.size());
}

}  // namespace ponder
