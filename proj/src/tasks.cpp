#include "ponder/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ponder {

long long AdditionSpec::max_value() const {
  long long v = 1;
  for (int i = 0; i < max_digits; ++i) v *= 10;
  return v - 1;  // e.g. 99999 for 5 digits
}

Sample gen_parity(Rng& rng, ParityCounting counting) {
  Sample s;
  s.task = TaskKind::parity;
  std::vector<double> x(kParityDim, 0.0);

  const int k = rng.uniform_int(1, kParityDim);
  // Partial Fisher-Yates draw of k distinct positions.
  std::vector<int> pos(kParityDim);
  for (int i = 0; i < kParityDim; ++i) pos[static_cast<size_t>(i)] = i;
  for (int i = 0; i < k; ++i)
    std::swap(pos[static_cast<size_t>(i)], pos[static_cast<size_t>(rng.uniform_int(i, kParityDim - 1))]);
  for (int i = 0; i < k; ++i) x[static_cast<size_t>(pos[static_cast<size_t>(i)])] = rng.bernoulli(0.5) ? 1.0 : -1.0;

  s.bit_target = parity_oracle(x, counting);
  s.inputs.push_back(Tensor::from({kParityDim}, std::move(x)));
  s.mask = {true};
  return s;
}

int parity_oracle(const std::vector<double>& x, ParityCounting counting) {
  int ones = 0;
  for (double v : x) {
    if (v != 1.0 && v != -1.0 && v != 0.0)
      throw InputError("parity_oracle: entries must be in {-1, 0, +1}");
    if (v == 1.0 || (counting == ParityCounting::all_nonzero && v == -1.0)) ++ones;
  }
  return ones % 2;
}

Tensor encode_number(long long value, int digits, int max_digits) {
  if (digits < 1 || digits > max_digits)
    throw InputError("encode_number: digit count out of range");
  long long cap = 1;
  for (int i = 0; i < digits; ++i) cap *= 10;
  if (value < 0 || value >= cap) throw InputError("encode_number: value too large for digit count");

  std::vector<double> x(static_cast<size_t>(10 * max_digits), 0.0);
  long long rest = value;
  for (int d = 0; d < digits; ++d) {
    const int digit = static_cast<int>(rest % 10);
    rest /= 10;
    x[static_cast<size_t>(10 * d + digit)] = 1.0;
  }
  return Tensor::from({10 * max_digits}, std::move(x));
}

std::vector<std::vector<int>> addition_oracle(const std::vector<long long>& values,
                                              const AdditionSpec& spec) {
  std::vector<std::vector<int>> targets;
  targets.reserve(values.size());
  long long cum = 0;
  for (long long v : values) {
    cum += v;
    std::vector<int> heads(static_cast<size_t>(spec.out_heads), kCompleteMarker);
    long long rest = cum;
    int d = 0;
    do {
      heads[static_cast<size_t>(d++)] = static_cast<int>(rest % 10);
      rest /= 10;
    } while (rest > 0 && d < spec.out_heads);
    targets.push_back(std::move(heads));
  }
  return targets;
}

Sample gen_addition(Rng& rng, const AdditionSpec& spec) {
  Sample s;
  s.task = TaskKind::addition;
  std::vector<long long> values;
  values.reserve(static_cast<size_t>(spec.seq_len));
  for (int t = 0; t < spec.seq_len; ++t) {
    const int digits = rng.uniform_int(1, spec.max_digits);
    long long v = 0, p = 1;
    // Digits drawn independently; leading zeros allowed.
    for (int d = 0; d < digits; ++d) {
      v += p * rng.uniform_int(0, 9);
      p *= 10;
    }
    values.push_back(v);
    s.inputs.push_back(encode_number(v, digits, spec.max_digits));
  }
  s.class_targets = addition_oracle(values, spec);
  s.mask.assign(static_cast<size_t>(spec.seq_len), true);
  s.mask[0] = false;  // no target for the first vector
  return s;
}

Batch gen_batch(TaskKind task, int size, Rng& rng, const AdditionSpec& spec,
                ParityCounting counting) {
  Batch b;
  b.samples.reserve(static_cast<size_t>(size));
  for (int i = 0; i < size; ++i)
    b.samples.push_back(task == TaskKind::parity ? gen_parity(rng, counting)
                                                 : gen_addition(rng, spec));
  return b;
}

ParityMetrics parity_metrics(const Tensor& logit, int target) {
  ParityMetrics m;
  m.loss = bce_with_logits(logit, static_cast<double>(target));
  const double sig = 1.0 / (1.0 + std::exp(-logit.item()));
  m.correct = (sig >= 0.5) == (target == 1);
  return m;
}

AdditionMetrics addition_metrics(const std::vector<Tensor>& logits_per_step,
                                 const Sample& sample, const AdditionSpec& spec) {
  if (logits_per_step.size() != sample.inputs.size())
    throw DimensionError("addition_metrics: one logits tensor per step expected");
  AdditionMetrics m;
  std::vector<Tensor> terms;
  for (size_t t = 0; t < logits_per_step.size(); ++t) {
    if (!sample.mask[t]) continue;
    const Tensor& logits = logits_per_step[t];
    if (logits.size() != spec.logit_dim())
      throw DimensionError("addition_metrics: logits size mismatch");
    bool all_heads = true;
    for (int head = 0; head < spec.out_heads; ++head) {
      Tensor head_logits = slice(logits, 11 * head, 11);
      const int target = sample.class_targets[t][static_cast<size_t>(head)];
      terms.push_back(softmax_xent(head_logits, target));
      const auto& v = head_logits.values();
      const int argmax =
          static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
      all_heads = all_heads && (argmax == target);
    }
    m.correct_steps.push_back(all_heads);
  }
  m.loss = terms.empty() ? Tensor::scalar(0.0) : sum_list(terms);
  return m;
}

namespace {

void write_vector(std::ostream& os, const std::vector<double>& v) {
  os << '[';
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  os << ']';
}

}  // namespace

void write_sample_jsonl(std::ostream& os, const std::vector<Sample>& samples, uint64_t seed) {
  for (const Sample& s : samples) {
    os << R"({"task":")" << (s.task == TaskKind::parity ? "parity" : "addition") << R"(","inputs":[)";
    for (size_t t = 0; t < s.inputs.size(); ++t) {
      if (t) os << ',';
      write_vector(os, s.inputs[t].values());
    }
    os << R"(],"targets":)";
    if (s.task == TaskKind::parity) {
      os << s.bit_target;
    } else {
      os << '[';
      for (size_t t = 0; t < s.class_targets.size(); ++t) {
        if (t) os << ',';
        os << '[';
        for (size_t h = 0; h < s.class_targets[t].size(); ++h) {
          if (h) os << ',';
          os << s.class_targets[t][h];
        }
        os << ']';
      }
      os << ']';
    }
    os << R"(,"mask":[)";
    for (size_t t = 0; t < s.mask.size(); ++t) {
      if (t) os << ',';
      os << (s.mask[t] ? "true" : "false");
    }
    os << R"(],"seed":)" << seed << "}\n";
  }
}

}  // namespace ponder
