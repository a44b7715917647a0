#pragma once

#include <vector>

#include "pairsim/autograd.hpp"
#include "pairsim/tensor.hpp"

namespace pairsim {

// All ops are pure functions of their inputs apart from recording onto the
// active tape. Outputs are finite-checked before returning.

// input [C_in,H,W], kernel [C_out,C_in,kH,kW], bias [C_out] -> [C_out,H',W']
// H' = (H + 2*padding - kH)/stride + 1, same for W'.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              int stride = 1, int padding = 0);

// 2x2 max pooling, stride 2. H and W must be even. Gradient routes to the
// first max element in row-major window order.
Tensor maxpool2(const Tensor& input);

Tensor relu(const Tensor& input);

// Output clamped into [1e-7, 1-1e-7] so it is strictly inside (0,1) even
// where float rounding would saturate.
Tensor sigmoid(const Tensor& input);

// input [n], weight [m,n], bias [m] -> [m]
Tensor fully_connected(const Tensor& input, const Tensor& weight,
                       const Tensor& bias);

// [n], [m] -> [n+m]
Tensor concat(const Tensor& a, const Tensor& b);

// Elementwise a-b; shapes must match.
Tensor subtract(const Tensor& a, const Tensor& b);

// Elementwise a+b; shapes must match.
Tensor add(const Tensor& a, const Tensor& b);

// c*a
Tensor scale(const Tensor& a, float c);

// Copy reshaped to [numel].
Tensor flatten(const Tensor& a);

// Scalar sum of elements.
Tensor sum(const Tensor& a);

// Scalar sum of squared elements (double accumulation).
Tensor sum_squares(const Tensor& a);

// Mean binary cross-entropy over preds/targets. Each target must be exactly
// 0 or 1; preds are clamped to [1e-7, 1-1e-7] before the logarithm.
Tensor bce_loss(const Tensor& preds, const std::vector<float>& targets);

// Single-prediction form: pred must be a one-element tensor.
Tensor bce_loss(const Tensor& pred, float target);

// Clamp applied by bce_loss, exposed for oracle tests.
inline constexpr double kBceClamp = 1e-7;

}  // namespace pairsim
