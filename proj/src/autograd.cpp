#include "pairsim/autograd.hpp"

namespace pairsim {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() : prev_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::vector<Tensor> inputs, Tensor output,
                  std::function<void()> backward_fn) {
  records_.push_back(
      Record{std::move(inputs), std::move(output), std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_str(loss.shape()));
  }
  if (consumed_) {
    throw ContractError("backward called twice on the same tape");
  }
  consumed_ = true;
  loss.impl()->grad.assign(1, 1.0f);
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    // A record whose output never received gradient contributes nothing.
    if (!it->output.has_grad()) continue;
    it->fn();
  }
}

void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

}  // namespace pairsim
