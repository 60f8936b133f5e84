#pragma once

#include <memory>
#include <string>

#include "ponder/param_store.hpp"
#include "ponder/rng.hpp"
#include "ponder/tensor.hpp"

namespace ponder {

// Recurrent state. c is defined only for LSTM cells.
struct CellState {
  Tensor h;
  Tensor c;
};

struct RnnParams {
  Tensor w_in;   // {H, I}
  Tensor w_rec;  // {H, H}
  Tensor b;      // {H}
};

// One weight/bias pair per gate; weights act on the concatenated [x; h].
struct LstmParams {
  Tensor w_i, b_i;
  Tensor w_f, b_f;
  Tensor w_o, b_o;
  Tensor w_g, b_g;
};

struct AffineHead {
  Tensor w;  // {O, H}
  Tensor b;  // {O}
  Tensor apply(const Tensor& h) const { return affine(h, w, b); }
};

// h' = tanh(W_in*x + W_rec*h + b)
CellState rnn_step(const RnnParams& p, const CellState& s, const Tensor& x);

// Standard LSTM update: i,f,o = sigmoid(affine([x;h])), g = tanh(affine([x;h])),
// c' = f.c + i.g, h' = o.tanh(c').
CellState lstm_step(const LstmParams& p, const CellState& s, const Tensor& x);

Tensor readout(const AffineHead& head, const CellState& s);

// Weights uniform(-r, r) with r = 1/sqrt(fan_in), biases zero.
RnnParams make_rnn_params(int input, int hidden, ParamStore& store, const std::string& prefix,
                          Rng& rng);
// Same scheme; forget-gate bias starts at +1.
LstmParams make_lstm_params(int input, int hidden, ParamStore& store, const std::string& prefix,
                            Rng& rng);
AffineHead make_head(int input, int output, ParamStore& store, const std::string& prefix,
                     Rng& rng);

// Transition-model interface shared by the wrappers.
class Cell {
 public:
  virtual ~Cell() = default;
  virtual int input_size() const = 0;
  virtual int hidden_size() const = 0;
  virtual CellState initial_state() const = 0;  // zeros
  virtual CellState step(const CellState& s, const Tensor& x) const = 0;
};

class RnnCell final : public Cell {
 public:
  RnnCell(int input, int hidden, ParamStore& store, const std::string& prefix, Rng& rng)
      : p_(make_rnn_params(input, hidden, store, prefix, rng)), input_(input), hidden_(hidden) {}
  explicit RnnCell(RnnParams p)
      : p_(std::move(p)), input_(p_.w_in.shape()[1]), hidden_(p_.w_in.shape()[0]) {}

  int input_size() const override { return input_; }
  int hidden_size() const override { return hidden_; }
  CellState initial_state() const override { return {Tensor::zeros({hidden_}), Tensor()}; }
  CellState step(const CellState& s, const Tensor& x) const override {
    return rnn_step(p_, s, x);
  }
  const RnnParams& params() const { return p_; }

 private:
  RnnParams p_;
  int input_, hidden_;
};

class LstmCell final : public Cell {
 public:
  LstmCell(int input, int hidden, ParamStore& store, const std::string& prefix, Rng& rng)
      : p_(make_lstm_params(input, hidden, store, prefix, rng)),
        input_(input),
        hidden_(hidden) {}

  int input_size() const override { return input_; }
  int hidden_size() const override { return hidden_; }
  CellState initial_state() const override {
    return {Tensor::zeros({hidden_}), Tensor::zeros({hidden_})};
  }
  CellState step(const CellState& s, const Tensor& x) const override {
    return lstm_step(p_, s, x);
  }
  const LstmParams& params() const { return p_; }

 private:
  LstmParams p_;
  int input_, hidden_;
};

}  // namespace ponder
