#include "pairsim/optim.hpp"

#include <cmath>

#include "pairsim/ops.hpp"

namespace pairsim {

Adam::Adam(ParameterMap& params, AdamConfig cfg) : params_(&params), cfg_(cfg) {
  if (!(cfg_.lr > 0.0f)) throw DomainError("adam: lr must be > 0");
  if (cfg_.beta1 < 0.0f || cfg_.beta1 >= 1.0f) throw DomainError("adam: beta1 must be in [0,1)");
  if (cfg_.beta2 < 0.0f || cfg_.beta2 >= 1.0f) throw DomainError("adam: beta2 must be in [0,1)");
  if (!(cfg_.epsilon > 0.0f)) throw DomainError("adam: epsilon must be > 0");
  m_.resize(params.size());
  v_.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i].assign(params.entries()[i].value.numel(), 0.0f);
    v_[i].assign(params.entries()[i].value.numel(), 0.0f);
  }
}

void Adam::step() {
  auto& entries = params_->entries();
  for (const auto& p : entries) {
    if (!p.value.has_grad()) {
      throw ContractError("adam_step: missing gradient for parameter " + p.name);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(t_));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor& w = entries[i].value;
    const auto& g = w.grad_vec();
    std::vector<float>& m = m_[i];
    std::vector<float>& v = v_[i];
    const std::size_t n = w.numel();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0f - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0f - cfg_.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= static_cast<float>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon));
    }
    w.clear_grad();
  }
}

Tensor l2_penalty(const ParameterMap& params, float lambda) {
  if (lambda < 0.0f) throw DomainError("l2_penalty: lambda must be non-negative");
  Tensor acc = Tensor::scalar(0.0f);
  for (const auto& p : params.entries()) {
    if (!p.is_weight) continue;
    acc = add(acc, sum_squares(p.value));
  }
  return scale(acc, lambda);
}

}  // namespace pairsim
