#include "ponder/training.hpp"

#include <cmath>

namespace ponder {

namespace {

constexpr uint64_t kInitStream = 0x1;
constexpr uint64_t kTrainStream = 0x2;
constexpr uint64_t kEvalStream = 0x3;

std::vector<CellState> plain_rollout(const Cell& cell, std::span<const Tensor> seq) {
  std::vector<CellState> states;
  states.reserve(seq.size());
  CellState s = cell.initial_state();
  for (const Tensor& x : seq) {
    s = cell.step(s, x);
    states.push_back(s);
  }
  return states;
}

HaltingRecord fixed_record(int steps) {
  HaltingRecord rec;
  rec.steps = steps;
  rec.remainder = 0.0;
  rec.ponder = steps;
  return rec;
}

}  // namespace

Model::Forward Model::forward(const Sample& sample) const {
  Forward out;
  std::vector<CellState> states;
  switch (wrapper) {
    case WrapperKind::none:
      states = plain_rollout(*cell, sample.inputs);
      for (size_t t = 0; t < states.size(); ++t) out.records.push_back(fixed_record(1));
      break;
    case WrapperKind::repeat:
      states = repeat_rollout(*cell, sample.inputs, repeat.rho);
      for (size_t t = 0; t < states.size(); ++t) out.records.push_back(fixed_record(repeat.rho));
      break;
    case WrapperKind::act: {
      ActResult act_out = act_rollout(*cell, halting, sample.inputs, act);
      states = std::move(act_out.states);
      out.records = std::move(act_out.records);
      break;
    }
  }
  out.logits.resize(states.size());
  for (size_t t = 0; t < states.size(); ++t)
    if (sample.mask[t]) out.logits[t] = readout(head, states[t]);
  return out;
}

Model build_model(const ExperimentConfig& cfg) {
  Model m;
  m.task = cfg.task;
  m.wrapper = cfg.wrapper;
  m.repeat.rho = cfg.rho;
  m.act = ActConfig{cfg.tau, cfg.epsilon, cfg.act_max_steps};
  m.addition = cfg.addition_spec();
  m.batch = cfg.batch;
  m.parity_counting = cfg.parity_counting;

  Rng init_rng = Rng::derive(cfg.seed, kInitStream);
  const int in = cfg.cell_input_dim();
  if (cfg.cell == CellKind::rnn)
    m.cell = std::make_unique<RnnCell>(in, cfg.hidden, m.params, "cell", init_rng);
  else
    m.cell = std::make_unique<LstmCell>(in, cfg.hidden, m.params, "cell", init_rng);
  m.head = make_head(cfg.hidden, cfg.output_dim(), m.params, "head", init_rng);
  if (cfg.wrapper == WrapperKind::act)
    m.halting = make_head(cfg.hidden, 1, m.params, "halt", init_rng);
  return m;
}

UpdateResult sgd_update(ParamStore& params, double lr, double clip) {
  if (lr < 0.0) throw UsageError("sgd_update: lr must be non-negative");
  UpdateResult res;
  double sq = 0.0;
  params.for_each([&](const std::string&, const Tensor& t) {
    for (double g : t.grad()) sq += g * g;
  });
  res.grad_norm = std::sqrt(sq);
  if (!std::isfinite(res.grad_norm)) {
    res.finite = false;
    return res;
  }
  if (lr == 0.0) return res;  // parameters stay bitwise unchanged
  double step_size = lr;
  if (clip > 0.0 && res.grad_norm > clip) step_size = lr * clip / res.grad_norm;
  params.for_each([&](const std::string&, Tensor& t) {
    const std::vector<double>& g = t.grad();
    std::vector<double>& v = t.mutable_values();
    for (size_t i = 0; i < v.size(); ++i) v[i] -= step_size * g[i];
  });
  return res;
}

UpdateResult AdamState::update(ParamStore& params, double lr, double clip) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  UpdateResult res;
  double sq = 0.0;
  params.for_each([&](const std::string&, const Tensor& t) {
    for (double g : t.grad()) sq += g * g;
  });
  res.grad_norm = std::sqrt(sq);
  if (!std::isfinite(res.grad_norm)) {
    res.finite = false;
    return res;
  }
  const double scale = (clip > 0.0 && res.grad_norm > clip) ? clip / res.grad_norm : 1.0;
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  params.for_each([&](const std::string& name, Tensor& t) {
    std::vector<double>& m = m_[name];
    std::vector<double>& v = v_[name];
    if (m.empty()) {
      m.assign(t.values().size(), 0.0);
      v.assign(t.values().size(), 0.0);
    }
    const std::vector<double>& grad = t.grad();
    std::vector<double>& theta = t.mutable_values();
    for (size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i] * scale;
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  });
  return res;
}

EvalResult evaluate(const Model& model, int n_batches, Rng& rng,
                    std::vector<HaltingRecord>* record_sink) {
  if (n_batches < 1) throw UsageError("evaluate: n_batches must be >= 1");
  NoGradGuard ng;
  long correct = 0, total = 0;
  long long step_total = 0;
  long tokens = 0;
  double ponder_total = 0.0;

  for (int b = 0; b < n_batches; ++b) {
    Batch batch = gen_batch(model.task, model.batch, rng, model.addition, model.parity_counting);
    for (const Sample& sample : batch.samples) {
      Model::Forward fwd = model.forward(sample);
      if (model.task == TaskKind::parity) {
        ParityMetrics pm = parity_metrics(fwd.logits[0], sample.bit_target);
        correct += pm.correct ? 1 : 0;
        total += 1;
      } else {
        AdditionMetrics am = addition_metrics(fwd.logits, sample, model.addition);
        for (bool ok : am.correct_steps) {
          correct += ok ? 1 : 0;
          total += 1;
        }
      }
      for (const HaltingRecord& rec : fwd.records) {
        step_total += rec.steps;
        ponder_total += rec.ponder;
        ++tokens;
        if (record_sink) record_sink->push_back(rec);
      }
    }
  }
  EvalResult res;
  res.accuracy = total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  res.mean_repetitions = tokens > 0 ? static_cast<double>(step_total) / static_cast<double>(tokens) : 0.0;
  res.mean_ponder = tokens > 0 ? ponder_total / static_cast<double>(tokens) : 0.0;
  return res;
}

TrainReport train_run(const ExperimentConfig& cfg, const TrainHooks& hooks, Model* trained) {
  Model model = build_model(cfg);
  Rng train_rng = Rng::derive(cfg.seed, kTrainStream);
  const bool is_act = cfg.wrapper == WrapperKind::act;

  TrainReport report;
  AdamState adam;
  double last_train_loss = 0.0;
  MetricsRecord last_record;
  bool have_record = false;

  auto emit = [&](const MetricsRecord& rec) {
    last_record = rec;
    have_record = true;
    if (hooks.on_metrics) hooks.on_metrics(rec);
  };

  for (long step = 1; step <= cfg.budget; ++step) {
    Batch batch =
        gen_batch(cfg.task, cfg.batch, train_rng, model.addition, cfg.parity_counting);

    std::vector<Tensor> sample_losses;
    sample_losses.reserve(batch.samples.size());
    std::vector<std::vector<HaltingRecord>> batch_records;
    if (is_act) batch_records.reserve(batch.samples.size());

    for (const Sample& sample : batch.samples) {
      Model::Forward fwd = model.forward(sample);
      if (cfg.task == TaskKind::parity) {
        sample_losses.push_back(parity_metrics(fwd.logits[0], sample.bit_target).loss);
      } else {
        sample_losses.push_back(addition_metrics(fwd.logits, sample, model.addition).loss);
      }
      if (is_act) batch_records.push_back(std::move(fwd.records));
    }

    Tensor loss = scale(sum_list(sample_losses), 1.0 / static_cast<double>(cfg.batch));
    if (is_act) loss = add(loss, ponder_loss(batch_records, cfg.tau));

    bool finite = std::isfinite(loss.item());
    if (finite) {
      backward(loss, &model.params);
      UpdateResult up = cfg.optim == Optim::sgd
                            ? sgd_update(model.params, cfg.lr, cfg.clip)
                            : adam.update(model.params, cfg.lr, cfg.clip);
      finite = up.finite;
    }
    if (finite) last_train_loss = loss.item();

    if (!finite) {
      report.diverged = true;
      MetricsRecord rec;
      rec.step = step;
      rec.train_loss = last_train_loss;
      rec.eval_accuracy = have_record ? last_record.eval_accuracy : 0.0;
      rec.mean_repetitions = have_record ? last_record.mean_repetitions : 0.0;
      rec.mean_ponder = have_record ? last_record.mean_ponder : 0.0;
      rec.diverged = true;
      emit(rec);
      report.curve.push_back({step, rec.eval_accuracy, rec.train_loss, rec.mean_ponder,
                              rec.mean_repetitions});
      break;
    }

    if (step % cfg.eval_interval == 0) {
      Rng eval_rng = Rng::derive(cfg.seed, kEvalStream + static_cast<uint64_t>(step));
      EvalResult ev = evaluate(model, cfg.eval_batches, eval_rng);
      MetricsRecord rec{step, last_train_loss, ev.accuracy, ev.mean_repetitions,
                        ev.mean_ponder, false};
      emit(rec);
      report.curve.push_back({step, ev.accuracy, last_train_loss, ev.mean_ponder,
                              ev.mean_repetitions});
      report.final_accuracy = ev.accuracy;
      report.mean_repetitions = ev.mean_repetitions;

      if (!report.solved && ev.accuracy >= kSolvedThreshold) {
        report.solved = true;
        report.steps_to_solve = step;
        if (cfg.stop_on_solve) break;
      }
      if (hooks.cancelled && hooks.cancelled()) break;
    }
  }

  if (trained) *trained = std::move(model);
  return report;
}

std::optional<long> first_step_at_threshold(const std::vector<CurvePoint>& curve,
                                            double threshold) {
  for (const CurvePoint& p : curve)
    if (p.accuracy >= threshold) return p.step;
  return std::nullopt;
}

}  // namespace ponder
