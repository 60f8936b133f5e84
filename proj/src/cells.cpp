#include "ponder/cells.hpp"

#include <cmath>

namespace ponder {

namespace {

Tensor uniform_init(std::vector<int> shape, double r, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_values()) v = rng.uniform(-r, r);
  return t;
}

}  // namespace

CellState rnn_step(const RnnParams& p, const CellState& s, const Tensor& x) {
  Tensor pre = add(affine(x, p.w_in, p.b), matvec(p.w_rec, s.h));
  return {activate(Act::tanh, pre), Tensor()};
}

CellState lstm_step(const LstmParams& p, const CellState& s, const Tensor& x) {
  if (!s.c.defined()) throw DimensionError("lstm_step: state has no cell-memory vector");
  Tensor z = concat(x, s.h);
  Tensor i = activate(Act::sigmoid, affine(z, p.w_i, p.b_i));
  Tensor f = activate(Act::sigmoid, affine(z, p.w_f, p.b_f));
  Tensor o = activate(Act::sigmoid, affine(z, p.w_o, p.b_o));
  Tensor g = activate(Act::tanh, affine(z, p.w_g, p.b_g));
  Tensor c = add(mul(f, s.c), mul(i, g));
  Tensor h = mul(o, activate(Act::tanh, c));
  return {h, c};
}

Tensor readout(const AffineHead& head, const CellState& s) { return head.apply(s.h); }

RnnParams make_rnn_params(int input, int hidden, ParamStore& store, const std::string& prefix,
                          Rng& rng) {
  RnnParams p;
  p.w_in = store.add(prefix + ".w_in",
                     uniform_init({hidden, input}, 1.0 / std::sqrt(double(input)), rng));
  p.w_rec = store.add(prefix + ".w_rec",
                      uniform_init({hidden, hidden}, 1.0 / std::sqrt(double(hidden)), rng));
  p.b = store.add(prefix + ".b", Tensor::zeros({hidden}));
  return p;
}

LstmParams make_lstm_params(int input, int hidden, ParamStore& store, const std::string& prefix,
                            Rng& rng) {
  const int fan_in = input + hidden;
  const double r = 1.0 / std::sqrt(double(fan_in));
  auto gate_w = [&](const std::string& name) {
    return store.add(prefix + "." + name, uniform_init({hidden, fan_in}, r, rng));
  };
  LstmParams p;
  p.w_i = gate_w("w_i");
  p.b_i = store.add(prefix + ".b_i", Tensor::zeros({hidden}));
  p.w_f = gate_w("w_f");
  p.b_f = store.add(prefix + ".b_f", Tensor::full({hidden}, 1.0));
  p.w_o = gate_w("w_o");
  p.b_o = store.add(prefix + ".b_o", Tensor::zeros({hidden}));
  p.w_g = gate_w("w_g");
  p.b_g = store.add(prefix + ".b_g", Tensor::zeros({hidden}));
  return p;
}

AffineHead make_head(int input, int output, ParamStore& store, const std::string& prefix,
                     Rng& rng) {
  AffineHead head;
  head.w = store.add(prefix + ".w",
                     uniform_init({output, input}, 1.0 / std::sqrt(double(input)), rng));
  head.b = store.add(prefix + ".b", Tensor::zeros({output}));
  return head;
}

}  // namespace ponder
