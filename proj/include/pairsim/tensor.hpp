#pragma once

#include <cstddef>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "pairsim/error.hpp"

namespace pairsim {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// SIMD kernels pick their peel/remainder split from the pointer alignment,
// so unaligned buffers make summation order depend on allocation history.
// Fixing the alignment keeps results a function of seeds alone.
template <typename T, std::size_t Alignment>
struct AlignedAllocator {
  using value_type = T;
  template <typename U>
  struct rebind {
    using other = AlignedAllocator<U, Alignment>;
  };
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U, Alignment>&) {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(Alignment)));
  }
  void deallocate(T* p, std::size_t n) {
    ::operator delete(p, n * sizeof(T), std::align_val_t(Alignment));
  }
  template <typename U>
  bool operator==(const AlignedAllocator<U, Alignment>&) const {
    return true;
  }
  template <typename U>
  bool operator!=(const AlignedAllocator<U, Alignment>&) const {
    return false;
  }
};

using FloatVec = std::vector<float, AlignedAllocator<float, 64>>;

struct TensorImpl {
  Shape shape;
  FloatVec data;
  bool requires_grad = false;
  // Allocated lazily on the first backward contribution; empty means "no
  // gradient has reached this tensor yet".
  FloatVec grad;
};

// Handle onto shared storage: copies alias the same buffer. Weight tying and
// the tape rely on that aliasing; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<float> values, bool requires_grad = false);

  static Tensor scalar(float v);
  static Tensor full(Shape shape, float v);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int dim(std::size_t axis) const { return impl_->shape[axis]; }
  std::size_t ndim() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }

  float* data() { return impl_->data.data(); }
  const float* data() const { return impl_->data.data(); }
  FloatVec& vec() { return impl_->data; }
  const FloatVec& vec() const { return impl_->data; }
  float& operator[](std::size_t i) { return impl_->data[i]; }
  float operator[](std::size_t i) const { return impl_->data[i]; }

  // Value of a one-element tensor.
  float item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  FloatVec& grad_vec() { return impl_->grad; }
  const FloatVec& grad_vec() const { return impl_->grad; }
  // Zero-filled allocation on first use. Const because the handle is shallow:
  // gradient state lives in the shared storage, not the handle.
  FloatVec& ensure_grad() const;
  void clear_grad() const { impl_->grad.clear(); }

  Tensor clone() const;
  // Same storage identity check (the weight-tying invariant).
  bool shares_storage(const Tensor& other) const { return impl_ == other.impl_; }

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Throws NumericError if any element is NaN/Inf. Every op calls this on its
// output before returning.
void check_finite(const Tensor& t, const char* op);

}  // namespace pairsim
