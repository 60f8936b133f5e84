#include "ponder/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ponder/param_store.hpp"

namespace ponder {

namespace {

thread_local bool g_grad_enabled = true;

int shape_size(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) {
    if (d <= 0) throw DimensionError("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

// Four-accumulator dot product; reassociated so -O3 can use packed FMAs.
double dot(const double* __restrict__ a, const double* __restrict__ b, int n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy(double a, const double* __restrict__ x, double* __restrict__ y, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

bool tracking(std::initializer_list<const Tensor*> inputs) {
  if (!g_grad_enabled) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

Tensor make_node(std::vector<int> shape, std::vector<double> value, bool track,
                 std::vector<Tensor> parents, std::function<void(TensorNode&)> backprop) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  if (track) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const Tensor& p : parents) n->parents.push_back(p.node());
    n->backprop = std::move(backprop);
  }
  return Tensor::wrap(std::move(n));
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) throw DimensionError(std::string(op) + ": shape mismatch");
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

Tensor Tensor::zeros(std::vector<int> shape) {
  int n = shape_size(shape);
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value.assign(static_cast<size_t>(n), 0.0);
  return Tensor(std::move(node));
}

Tensor Tensor::full(std::vector<int> shape, double v) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.node_->value.begin(), t.node_->value.end(), v);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
  int n = shape_size(shape);
  if (static_cast<size_t>(n) != values.size())
    throw DimensionError("tensor values length does not match shape");
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

double Tensor::item() const {
  if (!is_scalar()) throw UsageError("item() requires a scalar tensor");
  return node_->value[0];
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.shape().size() != 2) throw DimensionError("affine: W must be 2-d");
  const int m = w.shape()[0], n = w.shape()[1];
  if (x.size() != n || b.size() != m) throw DimensionError("affine: shapes do not conform");

  std::vector<double> y(static_cast<size_t>(m));
  const double* wp = w.values().data();
  const double* xp = x.values().data();
  const double* bp = b.values().data();
  for (int i = 0; i < m; ++i) y[static_cast<size_t>(i)] = dot(wp + static_cast<size_t>(i) * n, xp, n) + bp[i];

  bool track = tracking({&x, &w, &b});
  return make_node({m}, std::move(y), track, {x, w, b}, [m, n](TensorNode& self) {
    TensorNode& xn = *self.parents[0];
    TensorNode& wn = *self.parents[1];
    TensorNode& bn = *self.parents[2];
    const double* dy = self.grad.data();
    const double* wp = wn.value.data();
    const double* xp = xn.value.data();
    const bool need_dx = xn.requires_grad;
    double* dx = need_dx ? xn.grad.data() : nullptr;
    double* dw = wn.requires_grad ? wn.grad.data() : nullptr;
    double* db = bn.requires_grad ? bn.grad.data() : nullptr;
    for (int i = 0; i < m; ++i) {
      const double g = dy[i];
      if (db) db[i] += g;
      if (dw) axpy(g, xp, dw + static_cast<size_t>(i) * n, n);
      if (need_dx) axpy(g, wp + static_cast<size_t>(i) * n, dx, n);
    }
  });
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  if (w.shape().size() != 2) throw DimensionError("matvec: W must be 2-d");
  const int m = w.shape()[0], n = w.shape()[1];
  if (x.size() != n) throw DimensionError("matvec: shapes do not conform");

  std::vector<double> y(static_cast<size_t>(m));
  const double* wp = w.values().data();
  const double* xp = x.values().data();
  for (int i = 0; i < m; ++i) y[static_cast<size_t>(i)] = dot(wp + static_cast<size_t>(i) * n, xp, n);

  bool track = tracking({&w, &x});
  return make_node({m}, std::move(y), track, {w, x}, [m, n](TensorNode& self) {
    TensorNode& wn = *self.parents[0];
    TensorNode& xn = *self.parents[1];
    const double* dy = self.grad.data();
    const double* wp = wn.value.data();
    const double* xp = xn.value.data();
    double* dw = wn.requires_grad ? wn.grad.data() : nullptr;
    double* dx = xn.requires_grad ? xn.grad.data() : nullptr;
    for (int i = 0; i < m; ++i) {
      const double g = dy[i];
      if (dw) axpy(g, xp, dw + static_cast<size_t>(i) * n, n);
      if (dx) axpy(g, wp + static_cast<size_t>(i) * n, dx, n);
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  const int n = a.size();
  std::vector<double> y(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] = a.at(i) + b.at(i);
  bool track = tracking({&a, &b});
  return make_node(a.shape(), std::move(y), track, {a, b}, [n](TensorNode& self) {
    for (int p = 0; p < 2; ++p) {
      TensorNode& pn = *self.parents[static_cast<size_t>(p)];
      if (pn.requires_grad) axpy(1.0, self.grad.data(), pn.grad.data(), n);
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  const int n = a.size();
  std::vector<double> y(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] = a.at(i) * b.at(i);
  bool track = tracking({&a, &b});
  return make_node(a.shape(), std::move(y), track, {a, b}, [n](TensorNode& self) {
    TensorNode& an = *self.parents[0];
    TensorNode& bn = *self.parents[1];
    const double* dy = self.grad.data();
    if (an.requires_grad) {
      double* da = an.grad.data();
      const double* bv = bn.value.data();
      for (int i = 0; i < n; ++i) da[i] += bv[i] * dy[i];
    }
    if (bn.requires_grad) {
      double* db = bn.grad.data();
      const double* av = an.value.data();
      for (int i = 0; i < n; ++i) db[i] += av[i] * dy[i];
    }
  });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 1 || b.shape().size() != 1)
    throw DimensionError("concat: expects 1-d tensors");
  const int p = a.size(), q = b.size();
  std::vector<double> y;
  y.reserve(static_cast<size_t>(p + q));
  y.insert(y.end(), a.values().begin(), a.values().end());
  y.insert(y.end(), b.values().begin(), b.values().end());
  bool track = tracking({&a, &b});
  return make_node({p + q}, std::move(y), track, {a, b}, [p, q](TensorNode& self) {
    TensorNode& an = *self.parents[0];
    TensorNode& bn = *self.parents[1];
    if (an.requires_grad) axpy(1.0, self.grad.data(), an.grad.data(), p);
    if (bn.requires_grad) axpy(1.0, self.grad.data() + p, bn.grad.data(), q);
  });
}

Tensor slice(const Tensor& x, int offset, int length) {
  if (offset < 0 || length <= 0 || offset + length > x.size())
    throw DimensionError("slice: range out of bounds");
  std::vector<double> y(x.values().begin() + offset, x.values().begin() + offset + length);
  bool track = tracking({&x});
  return make_node({length}, std::move(y), track, {x}, [offset, length](TensorNode& self) {
    TensorNode& xn = *self.parents[0];
    if (xn.requires_grad) axpy(1.0, self.grad.data(), xn.grad.data() + offset, length);
  });
}

Tensor axpb(const Tensor& x, double a, double b) {
  const int n = x.size();
  std::vector<double> y(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] = a * x.at(i) + b;
  bool track = tracking({&x});
  return make_node(x.shape(), std::move(y), track, {x}, [a, n](TensorNode& self) {
    TensorNode& xn = *self.parents[0];
    if (xn.requires_grad) axpy(a, self.grad.data(), xn.grad.data(), n);
  });
}

Tensor activate(Act kind, const Tensor& x) {
  const int n = x.size();
  std::vector<double> y(static_cast<size_t>(n));
  if (kind == Act::tanh) {
    for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] = std::tanh(x.at(i));
  } else {
    for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] = 1.0 / (1.0 + std::exp(-x.at(i)));
  }
  bool track = tracking({&x});
  return make_node(x.shape(), std::move(y), track, {x}, [kind, n](TensorNode& self) {
    TensorNode& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    double* dx = xn.grad.data();
    const double* yv = self.value.data();
    const double* dy = self.grad.data();
    if (kind == Act::tanh) {
      for (int i = 0; i < n; ++i) dx[i] += (1.0 - yv[i] * yv[i]) * dy[i];
    } else {
      for (int i = 0; i < n; ++i) dx[i] += yv[i] * (1.0 - yv[i]) * dy[i];
    }
  });
}

Tensor softmax(const Tensor& x) {
  const int n = x.size();
  if (n < 1) throw DimensionError("softmax: empty input");
  std::vector<double> y(static_cast<size_t>(n));
  const double m = *std::max_element(x.values().begin(), x.values().end());
  double z = 0;
  for (int i = 0; i < n; ++i) {
    y[static_cast<size_t>(i)] = std::exp(x.at(i) - m);
    z += y[static_cast<size_t>(i)];
  }
  for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] /= z;
  bool track = tracking({&x});
  return make_node(x.shape(), std::move(y), track, {x}, [n](TensorNode& self) {
    TensorNode& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    const double* yv = self.value.data();
    const double* dy = self.grad.data();
    double inner = 0;
    for (int i = 0; i < n; ++i) inner += dy[i] * yv[i];
    double* dx = xn.grad.data();
    for (int i = 0; i < n; ++i) dx[i] += yv[i] * (dy[i] - inner);
  });
}

Tensor sum(const Tensor& x) {
  const int n = x.size();
  double s = 0;
  for (int i = 0; i < n; ++i) s += x.at(i);
  bool track = tracking({&x});
  return make_node({1}, {s}, track, {x}, [n](TensorNode& self) {
    TensorNode& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    const double g = self.grad[0];
    double* dx = xn.grad.data();
    for (int i = 0; i < n; ++i) dx[i] += g;
  });
}

Tensor sum_list(std::span<const Tensor> terms) {
  if (terms.empty()) throw UsageError("sum_list: empty input");
  const int n = terms[0].size();
  std::vector<double> y(terms[0].values());
  bool track = false;
  for (size_t k = 1; k < terms.size(); ++k) {
    check_same_shape(terms[0], terms[k], "sum_list");
    for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] += terms[k].at(i);
  }
  if (g_grad_enabled)
    for (const Tensor& t : terms) track = track || t.requires_grad();
  std::vector<Tensor> parents(terms.begin(), terms.end());
  return make_node(terms[0].shape(), std::move(y), track, std::move(parents),
                   [n](TensorNode& self) {
                     for (auto& p : self.parents)
                       if (p->requires_grad) axpy(1.0, self.grad.data(), p->grad.data(), n);
                   });
}

Tensor weighted_sum(std::span<const Tensor> states, std::span<const Tensor> weights) {
  if (states.empty() || states.size() != weights.size())
    throw DimensionError("weighted_sum: states/weights length mismatch");
  const int n = states[0].size();
  const size_t k = states.size();
  for (size_t i = 0; i < k; ++i) {
    check_same_shape(states[0], states[i], "weighted_sum");
    if (!weights[i].is_scalar()) throw DimensionError("weighted_sum: weights must be scalars");
  }
  std::vector<double> y(static_cast<size_t>(n), 0.0);
  for (size_t i = 0; i < k; ++i) axpy(weights[i].item(), states[i].values().data(), y.data(), n);

  bool track = false;
  if (g_grad_enabled)
    for (size_t i = 0; i < k; ++i)
      track = track || states[i].requires_grad() || weights[i].requires_grad();
  std::vector<Tensor> parents;
  parents.reserve(2 * k);
  parents.insert(parents.end(), states.begin(), states.end());
  parents.insert(parents.end(), weights.begin(), weights.end());
  return make_node(states[0].shape(), std::move(y), track, std::move(parents),
                   [n, k](TensorNode& self) {
                     const double* dy = self.grad.data();
                     for (size_t i = 0; i < k; ++i) {
                       TensorNode& sn = *self.parents[i];
                       TensorNode& wn = *self.parents[k + i];
                       if (sn.requires_grad) axpy(wn.value[0], dy, sn.grad.data(), n);
                       if (wn.requires_grad) wn.grad[0] += dot(sn.value.data(), dy, n);
                     }
                   });
}

Tensor elementwise(const Tensor& x, const std::function<double(double)>& f,
                   const std::function<double(double, double)>& df) {
  const int n = x.size();
  std::vector<double> y(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] = f(x.at(i));
  bool track = tracking({&x});
  return make_node(x.shape(), std::move(y), track, {x}, [df, n](TensorNode& self) {
    TensorNode& xn = *self.parents[0];
    if (!xn.requires_grad) return;
    double* dx = xn.grad.data();
    for (int i = 0; i < n; ++i) dx[i] += df(xn.value[static_cast<size_t>(i)],
                                            self.value[static_cast<size_t>(i)]) *
                                         self.grad[static_cast<size_t>(i)];
  });
}

Tensor bce_with_logits(const Tensor& logit, double target) {
  if (!logit.is_scalar()) throw DimensionError("bce_with_logits: logit must be scalar");
  const double z = logit.item();
  // softplus(z) - t*z, arranged to stay finite for large |z|.
  const double loss = std::max(z, 0.0) - target * z + std::log1p(std::exp(-std::abs(z)));
  bool track = tracking({&logit});
  return make_node({1}, {loss}, track, {logit}, [target](TensorNode& self) {
    TensorNode& zn = *self.parents[0];
    if (!zn.requires_grad) return;
    const double z = zn.value[0];
    const double sig = 1.0 / (1.0 + std::exp(-z));
    zn.grad[0] += (sig - target) * self.grad[0];
  });
}

Tensor softmax_xent(const Tensor& logits, int target) {
  const int n = logits.size();
  if (target < 0 || target >= n) throw UsageError("softmax_xent: target out of range");
  const double m = *std::max_element(logits.values().begin(), logits.values().end());
  double z = 0;
  for (int i = 0; i < n; ++i) z += std::exp(logits.at(i) - m);
  const double loss = m + std::log(z) - logits.at(target);
  bool track = tracking({&logits});
  return make_node({1}, {loss}, track, {logits}, [target, n](TensorNode& self) {
    TensorNode& ln = *self.parents[0];
    if (!ln.requires_grad) return;
    const double m = *std::max_element(ln.value.begin(), ln.value.end());
    double z = 0;
    for (int i = 0; i < n; ++i) z += std::exp(ln.value[static_cast<size_t>(i)] - m);
    const double g = self.grad[0];
    double* dx = ln.grad.data();
    for (int i = 0; i < n; ++i) {
      const double p = std::exp(ln.value[static_cast<size_t>(i)] - m) / z;
      dx[i] += (p - (i == target ? 1.0 : 0.0)) * g;
    }
  });
}

void backward(const Tensor& loss, ParamStore* params) {
  if (!loss.defined() || !loss.is_scalar()) throw UsageError("backward: loss must be scalar");

  if (params) {
    params->for_each([](const std::string&, Tensor& t) {
      t.mutable_grad().assign(t.values().size(), 0.0);
    });
  }

  // Iterative post-order over parents; order is fixed by graph structure.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  struct Frame {
    TensorNode* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  TensorNode* root = loss.node().get();
  if (visited.insert(root).second) stack.push_back({root, 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      TensorNode* p = f.node->parents[f.next_parent++].get();
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  for (TensorNode* n : order) n->grad.assign(n->value.size(), 0.0);
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

bool all_finite(const Tensor& t) {
  for (double v : t.values())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace ponder
