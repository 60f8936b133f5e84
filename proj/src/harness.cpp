#include "ponder/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ponder/grad_check.hpp"
#include "ponder/plot.hpp"

namespace ponder {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string to_string(TaskKind t) { return t == TaskKind::parity ? "parity" : "addition"; }
std::string to_string(CellKind c) { return c == CellKind::rnn ? "rnn" : "lstm"; }
std::string to_string(WrapperKind w) {
  switch (w) {
    case WrapperKind::none: return "none";
    case WrapperKind::repeat: return "repeat";
    case WrapperKind::act: return "act";
  }
  return "none";
}
std::string to_string(Profile p) { return p == Profile::paper ? "paper" : "desk"; }
std::string to_string(Optim o) { return o == Optim::sgd ? "sgd" : "adam"; }

namespace {

TaskKind parse_task(const std::string& s) {
  if (s == "parity") return TaskKind::parity;
  if (s == "addition") return TaskKind::addition;
  throw UsageError("unknown task '" + s + "'");
}
CellKind parse_cell(const std::string& s) {
  if (s == "rnn") return CellKind::rnn;
  if (s == "lstm") return CellKind::lstm;
  throw UsageError("unknown cell '" + s + "'");
}
WrapperKind parse_wrapper(const std::string& s) {
  if (s == "none") return WrapperKind::none;
  if (s == "repeat") return WrapperKind::repeat;
  if (s == "act") return WrapperKind::act;
  throw UsageError("unknown wrapper '" + s + "'");
}
Profile parse_profile(const std::string& s) {
  if (s == "paper") return Profile::paper;
  if (s == "desk") return Profile::desk;
  throw UsageError("unknown profile '" + s + "'");
}
Optim parse_optim(const std::string& s) {
  if (s == "sgd") return Optim::sgd;
  if (s == "adam") return Optim::adam;
  throw UsageError("unknown optimizer '" + s + "'");
}

json load_json_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw UsageError("bad JSON in " + file.string() + ": " + e.what());
  }
  return j;
}

// Applies known keys of j onto cfg; unknown keys are rejected so config-file
// typos do not silently fall back to defaults.
void apply_json(const json& j, ExperimentConfig& cfg, bool* rho_set, bool* tau_set) {
  for (const auto& [key, value] : j.items()) {
    if (key == "task") cfg.task = parse_task(value.get<std::string>());
    else if (key == "cell") cfg.cell = parse_cell(value.get<std::string>());
    else if (key == "wrapper") cfg.wrapper = parse_wrapper(value.get<std::string>());
    else if (key == "rho") { cfg.rho = value.get<int>(); if (rho_set) *rho_set = true; }
    else if (key == "tau") { cfg.tau = value.get<double>(); if (tau_set) *tau_set = true; }
    else if (key == "epsilon") cfg.epsilon = value.get<double>();
    else if (key == "act_max_steps") cfg.act_max_steps = value.get<int>();
    else if (key == "hidden") cfg.hidden = value.get<int>();
    else if (key == "lr") cfg.lr = value.get<double>();
    else if (key == "batch") cfg.batch = value.get<int>();
    else if (key == "seed") cfg.seed = value.get<uint64_t>();
    else if (key == "budget") cfg.budget = value.get<long>();
    else if (key == "eval_interval") cfg.eval_interval = value.get<long>();
    else if (key == "eval_batches") cfg.eval_batches = value.get<int>();
    else if (key == "clip") cfg.clip = value.get<double>();
    else if (key == "profile") cfg.profile = parse_profile(value.get<std::string>());
    else if (key == "optim") cfg.optim = parse_optim(value.get<std::string>());
    else if (key == "stop_on_solve") cfg.stop_on_solve = value.get<bool>();
    else if (key == "parity_counting")
      cfg.parity_counting = value.get<std::string>() == "all_nonzero"
                                ? ParityCounting::all_nonzero
                                : ParityCounting::plus_ones_only;
    else throw UsageError("unknown config key '" + key + "'");
  }
}

void validate(const ExperimentConfig& cfg, bool rho_set, bool tau_set) {
  if (cfg.wrapper == WrapperKind::repeat && !rho_set)
    throw UsageError("wrapper=repeat requires --rho");
  if (cfg.wrapper == WrapperKind::act && !tau_set)
    throw UsageError("wrapper=act requires --tau");
  if (cfg.rho < 1) throw UsageError("rho must be >= 1");
  if (cfg.tau < 0) throw UsageError("tau must be >= 0");
  if (!(cfg.epsilon > 0 && cfg.epsilon < 1)) throw UsageError("epsilon must be in (0,1)");
  if (cfg.act_max_steps < 1) throw UsageError("act_max_steps must be >= 1");
  if (cfg.hidden < 1 || cfg.batch < 1) throw UsageError("hidden and batch must be >= 1");
  if (cfg.lr < 0) throw UsageError("lr must be >= 0");
  if (cfg.budget < 1 || cfg.eval_interval < 1)
    throw UsageError("budget and eval_interval must be >= 1");
  if (cfg.eval_batches < 1) throw UsageError("eval_batches must be >= 1");
}

}  // namespace

ExperimentConfig resolve_config(const ConfigOverrides& flags,
                                const std::optional<std::string>& config_file) {
  json file_j = json::object();
  if (config_file) file_j = load_json_file(*config_file);

  // Task/profile decide the defaults, so settle them first.
  ExperimentConfig cfg;
  if (file_j.contains("task")) cfg.task = parse_task(file_j["task"].get<std::string>());
  if (flags.task) cfg.task = parse_task(*flags.task);
  if (file_j.contains("profile")) cfg.profile = parse_profile(file_j["profile"].get<std::string>());
  if (flags.profile) cfg.profile = parse_profile(*flags.profile);

  cfg.cell = cfg.task == TaskKind::parity ? CellKind::rnn : CellKind::lstm;
  if (cfg.task == TaskKind::parity) {
    cfg.hidden = 128;
    cfg.budget = 200000;
  } else {
    cfg.hidden = cfg.profile == Profile::desk ? 128 : 512;
    cfg.budget = cfg.profile == Profile::desk ? 100000 : 1200000;
  }

  bool rho_set = false, tau_set = false;
  apply_json(file_j, cfg, &rho_set, &tau_set);

  if (flags.cell) cfg.cell = parse_cell(*flags.cell);
  if (flags.wrapper) cfg.wrapper = parse_wrapper(*flags.wrapper);
  if (flags.rho) { cfg.rho = *flags.rho; rho_set = true; }
  if (flags.tau) { cfg.tau = *flags.tau; tau_set = true; }
  if (flags.epsilon) cfg.epsilon = *flags.epsilon;
  if (flags.act_max_steps) cfg.act_max_steps = *flags.act_max_steps;
  if (flags.hidden) cfg.hidden = *flags.hidden;
  if (flags.lr) cfg.lr = *flags.lr;
  if (flags.batch) cfg.batch = *flags.batch;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.budget) cfg.budget = *flags.budget;
  if (flags.eval_interval) cfg.eval_interval = *flags.eval_interval;
  if (flags.eval_batches) cfg.eval_batches = *flags.eval_batches;
  if (flags.clip) cfg.clip = *flags.clip;
  if (flags.optim) cfg.optim = parse_optim(*flags.optim);
  if (flags.no_clip && *flags.no_clip) cfg.clip = 0.0;
  if (flags.run_past_solve && *flags.run_past_solve) cfg.stop_on_solve = false;
  if (flags.parity_count_nonzeros && *flags.parity_count_nonzeros)
    cfg.parity_counting = ParityCounting::all_nonzero;

  validate(cfg, rho_set, tau_set);
  return cfg;
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["task"] = to_string(cfg.task);
  j["cell"] = to_string(cfg.cell);
  j["wrapper"] = to_string(cfg.wrapper);
  j["rho"] = cfg.rho;
  j["tau"] = cfg.tau;
  j["epsilon"] = cfg.epsilon;
  j["act_max_steps"] = cfg.act_max_steps;
  j["hidden"] = cfg.hidden;
  j["lr"] = cfg.lr;
  j["batch"] = cfg.batch;
  j["seed"] = cfg.seed;
  j["budget"] = cfg.budget;
  j["eval_interval"] = cfg.eval_interval;
  j["eval_batches"] = cfg.eval_batches;
  j["clip"] = cfg.clip;
  j["profile"] = to_string(cfg.profile);
  j["optim"] = to_string(cfg.optim);
  j["stop_on_solve"] = cfg.stop_on_solve;
  j["parity_counting"] =
      cfg.parity_counting == ParityCounting::all_nonzero ? "all_nonzero" : "plus_ones_only";
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig cfg;
  json j = json::parse(text);
  apply_json(j, cfg, nullptr, nullptr);
  return cfg;
}

std::string default_run_name(const ExperimentConfig& cfg) {
  std::string name = to_string(cfg.task) + "_" + to_string(cfg.cell);
  if (cfg.wrapper == WrapperKind::repeat) name += "_rho" + std::to_string(cfg.rho);
  else if (cfg.wrapper == WrapperKind::act) name += "_tau" + format_double(cfg.tau);
  else name += "_plain";
  name += "_seed" + std::to_string(cfg.seed);
  return name;
}

std::string metrics_to_json_line(const MetricsRecord& rec) {
  std::string line = "{\"step\":" + std::to_string(rec.step);
  line += ",\"train_loss\":" + format_double(rec.train_loss);
  line += ",\"eval_accuracy\":" + format_double(rec.eval_accuracy);
  line += ",\"mean_repetitions\":" + format_double(rec.mean_repetitions);
  line += ",\"mean_ponder\":" + format_double(rec.mean_ponder);
  line += std::string(",\"diverged\":") + (rec.diverged ? "true" : "false") + "}";
  return line;
}

namespace {

json report_to_json(const ExperimentConfig& cfg, const TrainReport& report) {
  json j;
  j["solved"] = report.solved;
  if (report.steps_to_solve) j["steps_to_solve"] = *report.steps_to_solve;
  else j["steps_to_solve"] = nullptr;
  j["mean_repetitions"] = report.mean_repetitions;
  j["diverged"] = report.diverged;
  j["final_accuracy"] = report.final_accuracy;
  json curve = json::array();
  for (const CurvePoint& p : report.curve) {
    curve.push_back(json{{"step", p.step},
                         {"accuracy", p.accuracy},
                         {"loss", p.loss},
                         {"ponder", p.ponder},
                         {"repetitions", p.repetitions}});
  }
  j["curve"] = std::move(curve);
  j["config"] = json::parse(config_to_json(cfg));
  return j;
}

void save_params_binary(const ParamStore& params, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open " + file.string());
  const char magic[8] = {'P', 'B', 'P', 'A', 'R', 'A', 'M', '1'};
  out.write(magic, 8);
  uint64_t count = params.count();
  out.write(reinterpret_cast<const char*>(&count), 8);
  params.for_each([&](const std::string& name, const Tensor& t) {
    uint64_t name_len = name.size();
    out.write(reinterpret_cast<const char*>(&name_len), 8);
    out.write(name.data(), static_cast<std::streamsize>(name_len));
    uint64_t rank = t.shape().size();
    out.write(reinterpret_cast<const char*>(&rank), 8);
    for (int d : t.shape()) {
      uint64_t dim = static_cast<uint64_t>(d);
      out.write(reinterpret_cast<const char*>(&dim), 8);
    }
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.values().size() * sizeof(double)));
  });
  if (!out) throw IoError("failed writing " + file.string());
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const fs::path& dir,
                         const TrainHooks& extra_hooks) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "config.json");
    if (!out) throw IoError("cannot open " + (dir / "config.json").string());
    out << config_to_json(cfg) << "\n";
  }

  std::ofstream metrics(dir / "metrics.jsonl", std::ios::binary);
  if (!metrics) throw IoError("cannot open " + (dir / "metrics.jsonl").string());

  TrainHooks hooks;
  hooks.on_metrics = [&](const MetricsRecord& rec) {
    metrics << metrics_to_json_line(rec) << "\n";
    metrics.flush();
    if (!metrics) throw IoError("failed writing metrics.jsonl");
    if (extra_hooks.on_metrics) extra_hooks.on_metrics(rec);
  };
  hooks.cancelled = extra_hooks.cancelled;

  Model model;
  RunResult result;
  result.cfg = cfg;
  result.dir = dir;
  result.report = train_run(cfg, hooks, &model);

  {
    std::ofstream out(dir / "report.json");
    if (!out) throw IoError("cannot open " + (dir / "report.json").string());
    out << report_to_json(cfg, result.report).dump(2) << "\n";
  }
  save_params_binary(model.params, dir / "params.bin");
  return result;
}

TrainReport report_from_json_file(const fs::path& file, ExperimentConfig* cfg_out) {
  json j = load_json_file(file);
  TrainReport report;
  report.solved = j.at("solved").get<bool>();
  if (!j.at("steps_to_solve").is_null())
    report.steps_to_solve = j.at("steps_to_solve").get<long>();
  report.mean_repetitions = j.at("mean_repetitions").get<double>();
  report.diverged = j.at("diverged").get<bool>();
  report.final_accuracy = j.value("final_accuracy", 0.0);
  for (const auto& p : j.at("curve")) {
    report.curve.push_back({p.at("step").get<long>(), p.at("accuracy").get<double>(),
                            p.at("loss").get<double>(), p.at("ponder").get<double>(),
                            p.value("repetitions", 0.0)});
  }
  if (cfg_out) *cfg_out = config_from_json(j.at("config").dump());
  return report;
}

std::string export_summary(const std::vector<RunResult>& results) {
  if (results.empty()) throw UsageError("export_summary: no reports");
  std::vector<const RunResult*> rows;
  rows.reserve(results.size());
  for (const RunResult& r : results) rows.push_back(&r);
  auto hyper_value = [](const ExperimentConfig& c) {
    if (c.wrapper == WrapperKind::repeat) return static_cast<double>(c.rho);
    if (c.wrapper == WrapperKind::act) return c.tau;
    return 0.0;
  };
  std::sort(rows.begin(), rows.end(), [&](const RunResult* a, const RunResult* b) {
    auto key = [&](const RunResult* r) {
      return std::tuple(to_string(r->cfg.task), to_string(r->cfg.wrapper),
                        hyper_value(r->cfg), r->cfg.seed);
    };
    return key(a) < key(b);
  });

  std::string csv = "model,wrapper,hyperparameter,solved,training_steps,average_repetitions\n";
  for (const RunResult* r : rows) {
    const ExperimentConfig& c = r->cfg;
    std::string hyper;
    if (c.wrapper == WrapperKind::repeat) hyper = std::to_string(c.rho);
    else if (c.wrapper == WrapperKind::act) hyper = format_double(c.tau);
    char reps[32];
    std::snprintf(reps, sizeof(reps), "%.3f", r->report.mean_repetitions);
    csv += to_string(c.cell) + "," + to_string(c.wrapper) + "," + hyper + ",";
    csv += r->report.solved ? "yes" : "no";
    csv += ",";
    if (r->report.steps_to_solve) csv += std::to_string(*r->report.steps_to_solve);
    csv += ",";
    csv += reps;
    csv += "\n";
  }
  return csv;
}

fs::path default_out_root() {
  if (const char* env = std::getenv("PONDERBENCH_OUT")) return fs::path(env);
  return fs::path("out");
}

namespace {

// --- selftest helpers ----------------------------------------------------

bool check(std::ostream& os, const std::string& name, bool ok, const std::string& detail = "") {
  os << (ok ? "[ok]   " : "[FAIL] ") << name;
  if (!detail.empty()) os << " (" << detail << ")";
  os << "\n";
  return ok;
}

// Decimal rendering of cumulative sums through a different route than the
// modular loop in addition_oracle.
std::vector<std::vector<int>> render_sums_via_strings(const std::vector<long long>& values,
                                                      int out_heads) {
  std::vector<std::vector<int>> out;
  long long cum = 0;
  for (long long v : values) {
    cum += v;
    std::string s = std::to_string(cum);
    std::vector<int> heads(static_cast<size_t>(out_heads), kCompleteMarker);
    for (size_t i = 0; i < s.size() && i < static_cast<size_t>(out_heads); ++i)
      heads[i] = s[s.size() - 1 - i] - '0';
    out.push_back(std::move(heads));
  }
  return out;
}

int decode_number(const Tensor& enc) {
  const auto& v = enc.values();
  int value = 0, scale10 = 1;
  for (size_t block = 0; block * 10 < v.size(); ++block) {
    int digit = -1;
    for (int d = 0; d < 10; ++d)
      if (v[block * 10 + static_cast<size_t>(d)] == 1.0) digit = d;
    if (digit < 0) break;
    value += scale10 * digit;
    scale10 *= 10;
  }
  return value;
}

}  // namespace

bool selftest(std::ostream& os) {
  bool all = true;
  Rng rng(42);

  // Gradient checks on every differentiable op, small random instances.
  {
    ParamStore ps;
    Tensor w = Tensor::zeros({5, 7});
    Tensor b = Tensor::zeros({5});
    Tensor x = Tensor::zeros({7});
    for (auto* t : {&w, &b, &x})
      for (double& v : t->mutable_values()) v = rng.uniform(-1, 1);
    ps.add("w", w);
    ps.add("b", b);
    ps.add("x", x);
    auto f = [](ParamStore& p) {
      Tensor y = affine(p.at("x"), p.at("w"), p.at("b"));
      Tensor s = softmax(activate(Act::tanh, y));
      return sum(mul(s, activate(Act::sigmoid, y)));
    };
    GradCheckResult r = grad_check(f, ps);
    all &= check(os, "grad_check ops", r.max_rel_error < 1e-4,
                 "max rel err " + format_double(r.max_rel_error));
  }
  {
    ParamStore ps;
    Rng init(7);
    RnnParams rp = make_rnn_params(3, 4, ps, "rnn", init);
    LstmParams lp = make_lstm_params(3, 4, ps, "lstm", init);
    AffineHead head = make_head(4, 1, ps, "head", init);
    Tensor x = Tensor::from({3}, {0.3, -0.7, 0.9});
    auto f = [&](ParamStore&) {
      CellState s0{Tensor::zeros({4}), Tensor::zeros({4})};
      CellState s1 = rnn_step(rp, s0, x);
      CellState s2 = lstm_step(lp, {s1.h, Tensor::zeros({4})}, x);
      return add(readout(head, s1), readout(head, s2));
    };
    GradCheckResult r = grad_check(f, ps);
    all &= check(os, "grad_check cells", r.max_rel_error < 1e-4,
                 "max rel err " + format_double(r.max_rel_error));
  }

  // Halting schedule worked examples.
  {
    HaltingRecord a = act_schedule(std::vector<double>{0.9, 0.5}, 0.01, 50);
    HaltingRecord b = act_schedule(std::vector<double>{0.995}, 0.01, 50);
    HaltingRecord c = act_schedule(std::vector<double>(5, 0.001), 0.01, 5);
    bool ok = a.steps == 2 && std::abs(a.remainder - 0.1) < 1e-12 &&
              std::abs(a.ponder - 2.1) < 1e-12;
    ok = ok && b.steps == 1 && b.remainder == 1.0 && b.ponder == 2.0;
    ok = ok && c.steps == 5 && std::abs(c.remainder - 0.996) < 1e-12;
    all &= check(os, "act_schedule examples", ok);
  }

  // Oracle equivalence on seeded samples.
  {
    AdditionSpec spec = AdditionSpec::full();
    Rng gen(123);
    bool ok = true;
    for (int i = 0; i < 1000 && ok; ++i) {
      std::vector<long long> values;
      for (int t = 0; t < spec.seq_len; ++t)
        values.push_back(gen.uniform_int(0, static_cast<int>(spec.max_value())));
      ok = addition_oracle(values, spec) == render_sums_via_strings(values, spec.out_heads);
    }
    all &= check(os, "addition oracle vs string renderer", ok);
  }
  {
    bool ok = true;
    for (int v = 0; v <= 99999 && ok; ++v) {
      int digits = v < 10 ? 1 : (v < 100 ? 2 : (v < 1000 ? 3 : (v < 10000 ? 4 : 5)));
      ok = decode_number(encode_number(v, digits)) == v;
    }
    all &= check(os, "encode/decode round trip 0..99999", ok);
  }

  // Figure-1 expansion equivalence on random cells.
  {
    bool ok = true;
    for (int trial = 0; trial < 10 && ok; ++trial) {
      ParamStore ps;
      Rng init(100 + static_cast<uint64_t>(trial));
      const int rho = init.uniform_int(1, 8);
      RnnCell cell(4, 6, ps, "cell", init);
      std::vector<Tensor> seq;
      for (int t = 0; t < 3; ++t) {
        Tensor x = Tensor::zeros({3});
        for (double& v : x.mutable_values()) v = init.uniform(-1, 1);
        seq.push_back(x);
      }
      std::vector<CellState> direct = repeat_rollout(cell, seq, rho);
      std::vector<Tensor> expanded = repeat_expand(seq, rho);
      CellState s = cell.initial_state();
      std::vector<CellState> all_states;
      for (const Tensor& x : expanded) {
        s = cell.step(s, x);
        all_states.push_back(s);
      }
      for (size_t t = 0; t < seq.size() && ok; ++t)
        ok = direct[t].h.values() == all_states[(t + 1) * static_cast<size_t>(rho) - 1].h.values();
    }
    all &= check(os, "repeat expansion equivalence", ok);
  }

  // Parity oracle readings.
  {
    std::vector<double> three_ones(64, 0.0);
    three_ones[0] = three_ones[5] = three_ones[9] = 1.0;
    std::vector<double> all_minus(64, -1.0);
    std::vector<double> mixed(64, 0.0);
    mixed[0] = mixed[1] = 1.0;
    mixed[2] = -1.0;
    bool ok = parity_oracle(three_ones) == 1 && parity_oracle(all_minus) == 0 &&
              parity_oracle(mixed) == 0 && parity_oracle(mixed, ParityCounting::all_nonzero) == 1;
    all &= check(os, "parity oracle", ok);
  }

  return all;
}

// --- CLI ------------------------------------------------------------------

namespace {

struct SweepLists {
  std::vector<int> rho;
  std::vector<double> tau;
  std::vector<uint64_t> seeds;
};

void add_config_flags(CLI::App* cmd, ConfigOverrides& o) {
  cmd->add_option("--task", o.task, "parity|addition");
  cmd->add_option("--cell", o.cell, "rnn|lstm");
  cmd->add_option("--wrapper", o.wrapper, "none|repeat|act");
  cmd->add_option("--epsilon", o.epsilon, "ACT halting slack");
  cmd->add_option("--act-max-steps", o.act_max_steps, "cap on ACT steps per token");
  cmd->add_option("--hidden", o.hidden, "hidden units");
  cmd->add_option("--lr", o.lr, "learning rate");
  cmd->add_option("--batch", o.batch, "batch size");
  cmd->add_option("--budget", o.budget, "max training steps");
  cmd->add_option("--eval-interval", o.eval_interval, "steps between evaluations");
  cmd->add_option("--eval-batches", o.eval_batches, "fresh batches per evaluation");
  cmd->add_option("--clip", o.clip, "gradient-norm ceiling");
  cmd->add_option("--profile", o.profile, "paper|desk");
  cmd->add_option("--optim", o.optim, "sgd|adam");
  cmd->add_flag("--no-clip", [&o](int64_t) { o.no_clip = true; }, "disable gradient clipping");
  cmd->add_flag("--run-past-solve", [&o](int64_t) { o.run_past_solve = true; },
                "keep training after reaching 98%");
  cmd->add_flag("--parity-count-nonzeros", [&o](int64_t) { o.parity_count_nonzeros = true; },
                "count -1 entries toward parity");
}

int cmd_run(const ConfigOverrides& overrides, const std::optional<std::string>& config_file,
            const std::string& out, const std::string& name) {
  ExperimentConfig cfg = resolve_config(overrides, config_file);
  fs::path dir = fs::path(out.empty() ? default_out_root() : fs::path(out)) /
                 (name.empty() ? default_run_name(cfg) : name);
  std::cout << "run " << default_run_name(cfg) << " -> " << dir.string() << "\n";
  TrainHooks hooks;
  hooks.on_metrics = [](const MetricsRecord& rec) {
    std::cout << "  step " << rec.step << " acc " << format_double(rec.eval_accuracy)
              << " loss " << format_double(rec.train_loss) << " reps "
              << format_double(rec.mean_repetitions) << (rec.diverged ? " DIVERGED" : "")
              << "\n";
  };
  RunResult r = run_experiment(cfg, dir, hooks);
  std::cout << (r.report.solved
                    ? "solved at step " + std::to_string(*r.report.steps_to_solve)
                    : (r.report.diverged ? "diverged" : "not solved within budget"))
            << "\n";
  return (r.report.diverged && !r.report.solved) ? 2 : 0;
}

int cmd_sweep(const ConfigOverrides& base, const SweepLists& lists,
              const std::optional<std::string>& config_file, const std::string& out,
              int jobs) {
  std::vector<ConfigOverrides> combos;
  std::vector<int> rhos = lists.rho;
  std::vector<double> taus = lists.tau;
  std::vector<uint64_t> seeds = lists.seeds;
  if (rhos.empty()) rhos.push_back(0);
  if (taus.empty()) taus.push_back(-1);
  if (seeds.empty()) seeds.push_back(base.seed.value_or(1));
  for (int rho : rhos)
    for (double tau : taus)
      for (uint64_t seed : seeds) {
        ConfigOverrides o = base;
        if (rho > 0) o.rho = rho;
        if (tau >= 0) o.tau = tau;
        o.seed = seed;
        combos.push_back(std::move(o));
      }

  std::vector<ExperimentConfig> cfgs;
  cfgs.reserve(combos.size());
  for (const ConfigOverrides& o : combos) cfgs.push_back(resolve_config(o, config_file));

  fs::path root = out.empty() ? default_out_root() : fs::path(out);
  std::vector<RunResult> results(cfgs.size());
  std::atomic<size_t> next{0};
  std::mutex io_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= cfgs.size()) break;
      try {
        const fs::path dir = root / default_run_name(cfgs[i]);
        {
          std::lock_guard<std::mutex> lock(io_mutex);
          std::cout << "sweep: start " << default_run_name(cfgs[i]) << "\n";
        }
        results[i] = run_experiment(cfgs[i], dir);
        {
          std::lock_guard<std::mutex> lock(io_mutex);
          const TrainReport& rep = results[i].report;
          std::cout << "sweep: done " << default_run_name(cfgs[i]) << " "
                    << (rep.solved ? "solved@" + std::to_string(*rep.steps_to_solve)
                                   : (rep.diverged ? "diverged" : "unsolved"))
                    << "\n";
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(io_mutex);
        if (!first_error) first_error = std::current_exception();
        break;
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(cfgs.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::ofstream csv(root / "summary.csv", std::ios::binary);
  if (!csv) throw IoError("cannot open summary.csv");
  csv << export_summary(results);
  std::cout << "summary: " << (root / "summary.csv").string() << "\n";
  return 0;
}

std::vector<fs::path> collect_files(const std::vector<std::string>& files,
                                    const std::string& dir, const std::string& filename) {
  std::vector<fs::path> out;
  for (const std::string& f : files) out.emplace_back(f);
  if (!dir.empty()) {
    for (const auto& entry : fs::recursive_directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().filename() == filename)
        out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_report(const std::vector<std::string>& files, const std::string& dir,
               const std::string& out_file) {
  std::vector<fs::path> paths = collect_files(files, dir, "report.json");
  if (paths.empty()) throw UsageError("report: no report.json files given");
  std::vector<RunResult> results;
  for (const fs::path& p : paths) {
    RunResult r;
    r.report = report_from_json_file(p, &r.cfg);
    r.dir = p.parent_path();
    results.push_back(std::move(r));
  }
  std::string csv = export_summary(results);
  if (out_file == "-") {
    std::cout << csv;
  } else {
    std::ofstream out(out_file, std::ios::binary);
    if (!out) throw IoError("cannot open " + out_file);
    out << csv;
    std::cout << "wrote " << out_file << "\n";
  }
  return 0;
}

std::string series_label(const fs::path& metrics_file) {
  const fs::path cfg_file = metrics_file.parent_path() / "config.json";
  if (fs::exists(cfg_file)) {
    std::ifstream in(cfg_file);
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig cfg = config_from_json(ss.str());
    if (cfg.wrapper == WrapperKind::repeat) return "rho=" + std::to_string(cfg.rho);
    if (cfg.wrapper == WrapperKind::act) return "tau=" + format_double(cfg.tau);
    return to_string(cfg.cell);
  }
  return metrics_file.parent_path().filename().string();
}

int cmd_plot(const std::vector<std::string>& files, const std::string& dir,
             const std::string& out_file) {
  std::vector<fs::path> paths = collect_files(files, dir, "metrics.jsonl");
  if (paths.empty()) throw UsageError("plot: no metrics.jsonl files given");
  std::vector<CurveSeries> series;
  for (const fs::path& p : paths) {
    CurveSeries s;
    s.label = series_label(p);
    const fs::path cfg_file = p.parent_path() / "config.json";
    if (fs::exists(cfg_file)) {
      std::ifstream in(cfg_file);
      std::stringstream ss;
      ss << in.rdbuf();
      s.is_act = config_from_json(ss.str()).wrapper == WrapperKind::act;
    }
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      MetricsRecord rec;
      rec.step = j.at("step").get<long>();
      rec.train_loss = j.at("train_loss").is_null() ? 0.0 : j.at("train_loss").get<double>();
      rec.eval_accuracy = j.at("eval_accuracy").get<double>();
      rec.mean_repetitions = j.at("mean_repetitions").get<double>();
      rec.mean_ponder = j.at("mean_ponder").get<double>();
      rec.diverged = j.at("diverged").get<bool>();
      s.points.push_back(rec);
    }
    series.push_back(std::move(s));
  }
  std::string svg = render_curves_svg(series);
  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw IoError("cannot open " + out_file);
  out << svg;
  std::cout << "wrote " << out_file << "\n";
  return 0;
}

int cmd_dump(const std::string& task, int n, uint64_t seed, const std::string& out_file) {
  Rng rng(seed);
  std::vector<Sample> samples;
  const TaskKind kind = parse_task(task);
  for (int i = 0; i < n; ++i)
    samples.push_back(kind == TaskKind::parity ? gen_parity(rng)
                                               : gen_addition(rng, AdditionSpec::full()));
  if (out_file == "-") {
    write_sample_jsonl(std::cout, samples, seed);
  } else {
    std::ofstream out(out_file, std::ios::binary);
    if (!out) throw IoError("cannot open " + out_file);
    write_sample_jsonl(out, samples, seed);
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"ponderbench: Repeat-RNN and ACT wrappers on parity/addition tasks"};
  app.require_subcommand(1);

  ConfigOverrides overrides;
  SweepLists lists;
  std::string config_file, out_dir, run_name;
  std::string report_dir, plot_dir, out_file = "-";
  std::vector<std::string> in_files;
  std::string dump_task = "parity";
  int dump_n = 16;
  uint64_t dump_seed = 1;
  int jobs = 2;

  CLI::App* run = app.add_subcommand("run", "train a single configuration");
  add_config_flags(run, overrides);
  run->add_option("--rho", overrides.rho, "repetitions per token");
  run->add_option("--tau", overrides.tau, "ACT time penalty");
  run->add_option("--seed", overrides.seed, "rng seed");
  run->add_option("--config", config_file, "JSON config file");
  run->add_option("--out", out_dir, "output root");
  run->add_option("--name", run_name, "run directory name");

  CLI::App* sweep = app.add_subcommand("sweep", "run a grid of configurations");
  add_config_flags(sweep, overrides);
  sweep->add_option("--rho", lists.rho, "rho values")->delimiter(',');
  sweep->add_option("--tau", lists.tau, "tau values")->delimiter(',');
  sweep->add_option("--seed", lists.seeds, "seeds")->delimiter(',');
  sweep->add_option("--config", config_file, "JSON config file");
  sweep->add_option("--out", out_dir, "output root");
  sweep->add_option("--jobs", jobs, "parallel runs");

  CLI::App* report = app.add_subcommand("report", "summarize report.json files to CSV");
  report->add_option("files", in_files, "report.json files");
  report->add_option("--dir", report_dir, "scan directory recursively");
  report->add_option("--out", out_file, "output CSV ('-' for stdout)");

  CLI::App* plot = app.add_subcommand("plot", "render accuracy curves to SVG");
  plot->add_option("files", in_files, "metrics.jsonl files");
  plot->add_option("--dir", plot_dir, "scan directory recursively");
  plot->add_option("--out", out_file, "output SVG file")->required();

  CLI::App* self = app.add_subcommand("selftest", "gradient checks and oracle equivalence");
  (void)self;

  CLI::App* dump = app.add_subcommand("dump", "write generated samples as JSON lines");
  dump->add_option("--task", dump_task, "parity|addition");
  dump->add_option("--n", dump_n, "number of samples");
  dump->add_option("--seed", dump_seed, "rng seed");
  dump->add_option("--out", out_file, "output file ('-' for stdout)");

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  storage.insert(storage.begin(), "ponderbench");
  argv.reserve(storage.size());
  for (std::string& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (run->parsed())
      return cmd_run(overrides, config_file.empty() ? std::nullopt
                                                    : std::make_optional(config_file),
                     out_dir, run_name);
    if (sweep->parsed())
      return cmd_sweep(overrides, lists,
                       config_file.empty() ? std::nullopt : std::make_optional(config_file),
                       out_dir, jobs);
    if (report->parsed()) return cmd_report(in_files, report_dir, out_file);
    if (plot->parsed()) return cmd_plot(in_files, plot_dir, out_file);
    if (app.get_subcommand("selftest")->parsed()) return selftest(std::cout) ? 0 : 1;
    if (dump->parsed()) return cmd_dump(dump_task, dump_n, dump_seed, out_file);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace ponder
