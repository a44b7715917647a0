#include "pairsim/params.hpp"

namespace pairsim {

Tensor& ParameterMap::add(const std::string& name, Tensor value, bool is_weight) {
  if (index_.count(name)) {
    throw ContractError("parameter name registered twice: " + name);
  }
  value.set_requires_grad(true);
  index_[name] = entries_.size();
  entries_.push_back(Parameter{name, std::move(value), is_weight});
  return entries_.back().value;
}

Parameter& ParameterMap::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter: " + name);
  return entries_[it->second];
}

const Parameter& ParameterMap::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter: " + name);
  return entries_[it->second];
}

std::size_t ParameterMap::total_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.numel();
  return n;
}

void ParameterMap::clear_grads() {
  for (auto& p : entries_) p.value.clear_grad();
}

ParameterMap ParameterMap::clone() const {
  ParameterMap out;
  for (const auto& p : entries_) out.add(p.name, p.value.clone(), p.is_weight);
  return out;
}

}  // namespace pairsim
