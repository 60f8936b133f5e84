#pragma once

#include <map>
#include <string>
#include <vector>

#include "ponder/tensor.hpp"

namespace ponder {

// Named trainable parameters. Backed by std::map so every iteration runs in
// sorted name order, which keeps seeded runs reproducible.
class ParamStore {
 public:
  // Registers a tensor as trainable and returns it (aliasing the storage).
  Tensor add(const std::string& name, Tensor t);

  bool has(const std::string& name) const { return params_.count(name) > 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::vector<std::string> names() const;
  size_t count() const { return params_.size(); }
  // Total number of scalar coordinates.
  size_t total_size() const;

  template <typename F>
  void for_each(F&& f) {
    for (auto& [name, t] : params_) f(name, t);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [name, t] : params_) f(name, t);
  }

  void zero_grads();

 private:
  std::map<std::string, Tensor> params_;
};

}  // namespace ponder
