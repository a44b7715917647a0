#pragma once

#include <cstdint>
#include <vector>

#include "pairsim/params.hpp"

namespace pairsim {

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

// ADAM with bias correction. Holds first/second moments per parameter; step()
// consumes the populated gradients and clears them.
class Adam {
 public:
  Adam(ParameterMap& params, AdamConfig cfg = {});

  // Throws ContractError naming the parameter if its gradient is missing.
  void step();

  std::int64_t t() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  ParameterMap* params_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

// lambda * sum of squared elements over weight parameters (biases excluded).
// Differentiable; records onto the active tape. Negative lambda -> DomainError.
Tensor l2_penalty(const ParameterMap& params, float lambda);

}  // namespace pairsim
