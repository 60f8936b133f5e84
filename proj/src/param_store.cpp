#include "ponder/param_store.hpp"

namespace ponder {

Tensor ParamStore::add(const std::string& name, Tensor t) {
  if (!t.defined()) throw UsageError("ParamStore::add: undefined tensor");
  auto [it, inserted] = params_.emplace(name, t);
  if (!inserted) throw UsageError("ParamStore::add: duplicate parameter name '" + name + "'");
  it->second.set_requires_grad(true);
  return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw UsageError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw UsageError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(name);
  return out;
}

size_t ParamStore::total_size() const {
  size_t n = 0;
  for (const auto& [name, t] : params_) n += t.values().size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : params_) t.mutable_grad().assign(t.values().size(), 0.0);
}

}  // namespace ponder
