#pragma once

#include <functional>
#include <vector>

#include "pairsim/tensor.hpp"

namespace pairsim {

// Records every differentiable op in execution order while it is the active
// tape for the current thread. Constructing a Tape activates it (tapes nest);
// destruction restores the previous one. One tape must never be shared across
// threads; distinct threads each get their own.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  // Called by ops. backward_fn reads the output's grad and accumulates into
  // the inputs' grads; it runs at most once.
  void record(std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward_fn);

  // Seeds d(loss)/d(loss)=1 and sweeps records in reverse execution order,
  // visiting each exactly once. Gradients land on every reachable tensor,
  // accumulating across multiple uses (tied weights).
  void backward(const Tensor& loss);

  std::size_t size() const { return records_.size(); }

 private:
  struct Record {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> fn;
  };
  std::vector<Record> records_;
  bool consumed_ = false;
  Tape* prev_ = nullptr;
};

// True when an op with these inputs should record onto the active tape.
inline bool tracing(const Tensor& a) {
  return Tape::active() != nullptr && a.requires_grad();
}
inline bool tracing(const Tensor& a, const Tensor& b) {
  return Tape::active() != nullptr && (a.requires_grad() || b.requires_grad());
}
inline bool tracing(const Tensor& a, const Tensor& b, const Tensor& c) {
  return Tape::active() != nullptr &&
         (a.requires_grad() || b.requires_grad() || c.requires_grad());
}

// Free-function form of Tape::backward.
void backward(const Tensor& loss, Tape& tape);

}  // namespace pairsim
