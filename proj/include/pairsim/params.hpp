#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "pairsim/tensor.hpp"

namespace pairsim {

struct Parameter {
  std::string name;   // stable path, e.g. "encoder.conv1.kernel"
  Tensor value;       // requires_grad = true
  bool is_weight;     // false for biases; drives the L2 penalty
};

// Ordered collection of named parameters. Names are unique; order is the
// registration order and is stable across save/load.
class ParameterMap {
 public:
  Tensor& add(const std::string& name, Tensor value, bool is_weight);

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;

  std::vector<Parameter>& entries() { return entries_; }
  const std::vector<Parameter>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Total element count over all parameters.
  std::size_t total_count() const;

  void clear_grads();

  // Deep copy (fresh storage for every tensor).
  ParameterMap clone() const;

 private:
  std::vector<Parameter> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace pairsim
