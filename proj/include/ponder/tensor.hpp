#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ponder/errors.hpp"

namespace ponder {

class ParamStore;

// Node of the dynamically recorded reverse-mode graph. Owned via shared_ptr
// from child to parent, so a graph frees itself once the downstream tensors
// go out of scope.
struct TensorNode {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized and zeroed by backward()
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backprop;
  bool requires_grad = false;

  int size() const { return static_cast<int>(value.size()); }
};

// Dense double-precision array with value semantics over a shared node.
// Copies alias the same storage, so a ParamStore entry and the cell holding
// it see the same buffer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double v);
  static Tensor from(std::vector<int> shape, std::vector<double> values);
  static Tensor scalar(double v) { return from({1}, {v}); }

  bool defined() const { return static_cast<bool>(node_); }
  const std::vector<int>& shape() const { return node_->shape; }
  int size() const { return node_->size(); }
  bool is_scalar() const { return defined() && size() == 1; }

  const std::vector<double>& values() const { return node_->value; }
  // In-place access for leaves (parameter updates). Mutating a tensor that
  // is part of a live graph invalidates that graph.
  std::vector<double>& mutable_values() { return node_->value; }

  // Gradient populated by the most recent backward(); empty before that.
  const std::vector<double>& grad() const { return node_->grad; }
  std::vector<double>& mutable_grad() { return node_->grad; }

  double item() const;
  double at(int i) const { return node_->value[static_cast<size_t>(i)]; }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }

  std::shared_ptr<TensorNode> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<TensorNode> n) { return Tensor(std::move(n)); }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}
  std::shared_ptr<TensorNode> node_;
};

// Thread-local switch for graph recording; evaluation runs with it off.
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

enum class Act { tanh, sigmoid };

// --- differentiable operations ------------------------------------------

// W*x + b with W of shape {m, n}, x {n}, b {m}.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);
// W*x without bias.
Tensor matvec(const Tensor& w, const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor concat(const Tensor& a, const Tensor& b);
Tensor slice(const Tensor& x, int offset, int length);
// a*x + b, elementwise with scalar coefficients.
Tensor axpb(const Tensor& x, double a, double b);
inline Tensor scale(const Tensor& x, double a) { return axpb(x, a, 0.0); }
Tensor activate(Act kind, const Tensor& x);
Tensor softmax(const Tensor& x);
Tensor sum(const Tensor& x);                     // scalar
Tensor sum_list(std::span<const Tensor> terms);  // elementwise sum of equal shapes
Tensor weighted_sum(std::span<const Tensor> states, std::span<const Tensor> weights);

// Generic elementwise op with user-supplied value and derivative functions;
// df receives (x_i, y_i).
Tensor elementwise(const Tensor& x, const std::function<double(double)>& f,
                   const std::function<double(double, double)>& df);

// Numerically stable binary cross-entropy on a single logit.
Tensor bce_with_logits(const Tensor& logit, double target);
// Cross-entropy of softmax(logits) against a class index.
Tensor softmax_xent(const Tensor& logits, int target);

// Reverse pass from a scalar loss. Gradients of every node reachable from
// the loss are zeroed first, so repeated calls on the same graph agree.
// When a ParamStore is given, its parameters' grads are (re)allocated and
// zeroed as well, so parameters the loss never touched read as zero.
void backward(const Tensor& loss, ParamStore* params = nullptr);

bool all_finite(const Tensor& t);

}  // namespace ponder
