#include "pairsim/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace pairsim {

namespace {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

constexpr float kSigmoidClamp = 1e-7f;

void require_ndim(const Tensor& t, std::size_t nd, const char* op, const char* what) {
  if (t.ndim() != nd) {
    throw DimensionError(std::string(op) + ": " + what + " must have " +
                         std::to_string(nd) + " axes, got shape " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return;
  const std::size_t n = std::min(a.ndim(), b.ndim());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.dim(i) != b.dim(i)) {
      throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) +
                           " and " + shape_str(b.shape()) + " differ on axis " +
                           std::to_string(i));
    }
  }
  throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) +
                       " and " + shape_str(b.shape()) + " differ in rank");
}

// col is [C_in*kH*kW, OH*OW] row-major; zero padding outside the input.
void im2col(const float* in, int C, int H, int W, int kH, int kW, int stride,
            int pad, int OH, int OW, float* col) {
  for (int c = 0; c < C; ++c) {
    for (int kh = 0; kh < kH; ++kh) {
      for (int kw = 0; kw < kW; ++kw) {
        float* row = col + (static_cast<std::size_t>(c) * kH * kW + kh * kW + kw) *
                               (static_cast<std::size_t>(OH) * OW);
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * stride + kh - pad;
          float* dst = row + static_cast<std::size_t>(oh) * OW;
          if (ih < 0 || ih >= H) {
            std::fill(dst, dst + OW, 0.0f);
            continue;
          }
          const float* src = in + (static_cast<std::size_t>(c) * H + ih) * W;
          if (stride == 1) {
            // iw = ow + kw - pad, valid for ow in [pad-kw, W-1+pad-kw]
            const int lo = std::max(0, pad - kw);
            const int hi = std::min(OW, W + pad - kw);
            if (lo > 0) std::fill(dst, dst + lo, 0.0f);
            if (hi > lo) std::memcpy(dst + lo, src + lo + kw - pad,
                                     static_cast<std::size_t>(hi - lo) * sizeof(float));
            if (hi < OW) std::fill(dst + std::max(hi, 0), dst + OW, 0.0f);
          } else {
            for (int ow = 0; ow < OW; ++ow) {
              const int iw = ow * stride + kw - pad;
              dst[ow] = (iw >= 0 && iw < W) ? src[iw] : 0.0f;
            }
          }
        }
      }
    }
  }
}

void col2im_accum(const float* col, int C, int H, int W, int kH, int kW,
                  int stride, int pad, int OH, int OW, float* in_grad) {
  for (int c = 0; c < C; ++c) {
    for (int kh = 0; kh < kH; ++kh) {
      for (int kw = 0; kw < kW; ++kw) {
        const float* row = col + (static_cast<std::size_t>(c) * kH * kW + kh * kW + kw) *
                                     (static_cast<std::size_t>(OH) * OW);
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * stride + kh - pad;
          if (ih < 0 || ih >= H) continue;
          const float* src = row + static_cast<std::size_t>(oh) * OW;
          float* dst = in_grad + (static_cast<std::size_t>(c) * H + ih) * W;
          if (stride == 1) {
            const int lo = std::max(0, pad - kw);
            const int hi = std::min(OW, W + pad - kw);
            for (int ow = lo; ow < hi; ++ow) dst[ow + kw - pad] += src[ow];
          } else {
            for (int ow = 0; ow < OW; ++ow) {
              const int iw = ow * stride + kw - pad;
              if (iw >= 0 && iw < W) dst[iw] += src[ow];
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              int stride, int padding) {
  require_ndim(input, 3, "conv2d", "input");
  require_ndim(kernel, 4, "conv2d", "kernel");
  require_ndim(bias, 1, "conv2d", "bias");
  if (stride < 1) throw DomainError("conv2d: stride must be positive");
  if (padding < 0) throw DomainError("conv2d: padding must be non-negative");

  const int C_in = input.dim(0), H = input.dim(1), W = input.dim(2);
  const int C_out = kernel.dim(0), kC = kernel.dim(1), kH = kernel.dim(2), kW = kernel.dim(3);
  if (kC != C_in) {
    throw DimensionError("conv2d: kernel expects " + std::to_string(kC) +
                         " input channels but input has " + std::to_string(C_in) +
                         " (axis C_in)");
  }
  if (bias.dim(0) != C_out) {
    throw DimensionError("conv2d: bias length " + std::to_string(bias.dim(0)) +
                         " does not match kernel output channels " +
                         std::to_string(C_out) + " (axis C_out)");
  }
  if (kH > H + 2 * padding) {
    throw DimensionError("conv2d: kernel height " + std::to_string(kH) +
                         " exceeds padded input height " + std::to_string(H + 2 * padding) +
                         " (axis H)");
  }
  if (kW > W + 2 * padding) {
    throw DimensionError("conv2d: kernel width " + std::to_string(kW) +
                         " exceeds padded input width " + std::to_string(W + 2 * padding) +
                         " (axis W)");
  }

  const int OH = (H + 2 * padding - kH) / stride + 1;
  const int OW = (W + 2 * padding - kW) / stride + 1;
  const int R = C_in * kH * kW;
  const std::size_t spatial = static_cast<std::size_t>(OH) * OW;

  FloatVec col(static_cast<std::size_t>(R) * spatial);
  im2col(input.data(), C_in, H, W, kH, kW, stride, padding, OH, OW, col.data());

  Tensor out({C_out, OH, OW});
  {
    CMapRM K(kernel.data(), C_out, R);
    CMapRM Col(col.data(), R, static_cast<Eigen::Index>(spatial));
    MapRM O(out.data(), C_out, static_cast<Eigen::Index>(spatial));
    O.noalias() = K * Col;
    for (int c = 0; c < C_out; ++c) O.row(c).array() += bias[static_cast<std::size_t>(c)];
  }
  check_finite(out, "conv2d");

  if (tracing(input, kernel, bias)) {
    out.set_requires_grad(true);
    Tensor in_t = input, k_t = kernel, b_t = bias, out_t = out;
    Tape::active()->record(
        {input, kernel, bias}, out,
        [in_t, k_t, b_t, out_t, stride, padding, C_in, H, W, C_out, kH, kW, OH, OW, R,
         spatial]() {
          const auto& go = out_t.grad_vec();
          CMapRM G(go.data(), C_out, static_cast<Eigen::Index>(spatial));
          // The col matrix is recomputed rather than kept on the tape.
          FloatVec col(static_cast<std::size_t>(R) * spatial);
          im2col(in_t.data(), C_in, H, W, kH, kW, stride, padding, OH, OW, col.data());
          CMapRM Col(col.data(), R, static_cast<Eigen::Index>(spatial));
          if (b_t.requires_grad()) {
            auto& gb = b_t.ensure_grad();
            for (int c = 0; c < C_out; ++c) gb[static_cast<std::size_t>(c)] += G.row(c).sum();
          }
          if (k_t.requires_grad()) {
            auto& gk = k_t.ensure_grad();
            MapRM GK(gk.data(), C_out, R);
            GK.noalias() += G * Col.transpose();
          }
          if (in_t.requires_grad()) {
            FloatVec dcol(static_cast<std::size_t>(R) * spatial);
            MapRM DCol(dcol.data(), R, static_cast<Eigen::Index>(spatial));
            CMapRM K(k_t.data(), C_out, R);
            DCol.noalias() = K.transpose() * G;
            auto& gi = in_t.ensure_grad();
            col2im_accum(dcol.data(), C_in, H, W, kH, kW, stride, padding, OH, OW, gi.data());
          }
        });
  }
  return out;
}

Tensor maxpool2(const Tensor& input) {
  require_ndim(input, 3, "maxpool2", "input");
  const int C = input.dim(0), H = input.dim(1), W = input.dim(2);
  if (H % 2 != 0) {
    throw DimensionError("maxpool2: height " + std::to_string(H) + " is odd (axis H)");
  }
  if (W % 2 != 0) {
    throw DimensionError("maxpool2: width " + std::to_string(W) + " is odd (axis W)");
  }
  const int OH = H / 2, OW = W / 2;
  Tensor out({C, OH, OW});
  std::vector<int> argmax(out.numel());
  const float* in = input.data();
  for (int c = 0; c < C; ++c) {
    for (int oh = 0; oh < OH; ++oh) {
      for (int ow = 0; ow < OW; ++ow) {
        const int base = (c * H + 2 * oh) * W + 2 * ow;
        // Row-major window order; strict > keeps the first occurrence on ties.
        int best = base;
        float bv = in[base];
        const int cands[3] = {base + 1, base + W, base + W + 1};
        for (int idx : cands) {
          if (in[idx] > bv) {
            bv = in[idx];
            best = idx;
          }
        }
        const std::size_t o = (static_cast<std::size_t>(c) * OH + oh) * OW + ow;
        out[o] = bv;
        argmax[o] = best;
      }
    }
  }
  check_finite(out, "maxpool2");

  if (tracing(input)) {
    out.set_requires_grad(true);
    Tensor in_t = input, out_t = out;
    Tape::active()->record({input}, out, [in_t, out_t, argmax = std::move(argmax)]() {
      auto& gi = in_t.ensure_grad();
      const auto& go = out_t.grad_vec();
      for (std::size_t o = 0; o < go.size(); ++o) {
        gi[static_cast<std::size_t>(argmax[o])] += go[o];
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  const std::size_t n = input.numel();
  for (std::size_t i = 0; i < n; ++i) out[i] = input[i] > 0.0f ? input[i] : 0.0f;
  check_finite(out, "relu");
  if (tracing(input)) {
    out.set_requires_grad(true);
    Tensor in_t = input, out_t = out;
    Tape::active()->record({input}, out, [in_t, out_t]() {
      auto& gi = in_t.ensure_grad();
      const auto& go = out_t.grad_vec();
      for (std::size_t i = 0; i < go.size(); ++i) {
        if (in_t[i] > 0.0f) gi[i] += go[i];
      }
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& input) {
  Tensor out(input.shape());
  const std::size_t n = input.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const float y = 1.0f / (1.0f + std::exp(-input[i]));
    out[i] = std::min(1.0f - kSigmoidClamp, std::max(kSigmoidClamp, y));
  }
  check_finite(out, "sigmoid");
  if (tracing(input)) {
    out.set_requires_grad(true);
    Tensor in_t = input, out_t = out;
    Tape::active()->record({input}, out, [in_t, out_t]() {
      auto& gi = in_t.ensure_grad();
      const auto& go = out_t.grad_vec();
      for (std::size_t i = 0; i < go.size(); ++i) {
        gi[i] += out_t[i] * (1.0f - out_t[i]) * go[i];
      }
    });
  }
  return out;
}

Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_ndim(input, 1, "fully_connected", "input");
  require_ndim(weight, 2, "fully_connected", "weight");
  require_ndim(bias, 1, "fully_connected", "bias");
  const int n = input.dim(0), m = weight.dim(0);
  if (weight.dim(1) != n) {
    throw DimensionError("fully_connected: weight expects input length " +
                         std::to_string(weight.dim(1)) + " but input has " +
                         std::to_string(n) + " (axis n)");
  }
  if (bias.dim(0) != m) {
    throw DimensionError("fully_connected: bias length " + std::to_string(bias.dim(0)) +
                         " does not match weight rows " + std::to_string(m) + " (axis m)");
  }
  Tensor out({m});
  {
    CMapRM Wm(weight.data(), m, n);
    Eigen::Map<const Eigen::VectorXf> x(input.data(), n);
    Eigen::Map<const Eigen::VectorXf> b(bias.data(), m);
    Eigen::Map<Eigen::VectorXf> y(out.data(), m);
    y.noalias() = Wm * x + b;
  }
  check_finite(out, "fully_connected");

  if (tracing(input, weight, bias)) {
    out.set_requires_grad(true);
    Tensor in_t = input, w_t = weight, b_t = bias, out_t = out;
    Tape::active()->record({input, weight, bias}, out, [in_t, w_t, b_t, out_t, n, m]() {
      const auto& go = out_t.grad_vec();
      Eigen::Map<const Eigen::VectorXf> gy(go.data(), m);
      if (b_t.requires_grad()) {
        auto& gb = b_t.ensure_grad();
        Eigen::Map<Eigen::VectorXf>(gb.data(), m) += gy;
      }
      if (w_t.requires_grad()) {
        auto& gw = w_t.ensure_grad();
        MapRM GW(gw.data(), m, n);
        Eigen::Map<const Eigen::VectorXf> x(in_t.data(), n);
        GW.noalias() += gy * x.transpose();
      }
      if (in_t.requires_grad()) {
        auto& gi = in_t.ensure_grad();
        CMapRM Wm(w_t.data(), m, n);
        Eigen::Map<Eigen::VectorXf>(gi.data(), n).noalias() += Wm.transpose() * gy;
      }
    });
  }
  return out;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  require_ndim(a, 1, "concat", "first input");
  require_ndim(b, 1, "concat", "second input");
  const int n = a.dim(0), m = b.dim(0);
  Tensor out({n + m});
  std::memcpy(out.data(), a.data(), static_cast<std::size_t>(n) * sizeof(float));
  std::memcpy(out.data() + n, b.data(), static_cast<std::size_t>(m) * sizeof(float));
  if (tracing(a, b)) {
    out.set_requires_grad(true);
    Tensor a_t = a, b_t = b, out_t = out;
    Tape::active()->record({a, b}, out, [a_t, b_t, out_t, n, m]() {
      const auto& go = out_t.grad_vec();
      if (a_t.requires_grad()) {
        auto& ga = a_t.ensure_grad();
        for (int i = 0; i < n; ++i) ga[static_cast<std::size_t>(i)] += go[static_cast<std::size_t>(i)];
      }
      if (b_t.requires_grad()) {
        auto& gb = b_t.ensure_grad();
        for (int i = 0; i < m; ++i) {
          gb[static_cast<std::size_t>(i)] += go[static_cast<std::size_t>(n + i)];
        }
      }
    });
  }
  return out;
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "subtract");
  Tensor out(a.shape());
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
  check_finite(out, "subtract");
  if (tracing(a, b)) {
    out.set_requires_grad(true);
    Tensor a_t = a, b_t = b, out_t = out;
    Tape::active()->record({a, b}, out, [a_t, b_t, out_t]() {
      const auto& go = out_t.grad_vec();
      if (a_t.requires_grad()) {
        auto& ga = a_t.ensure_grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (b_t.requires_grad()) {
        auto& gb = b_t.ensure_grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
  check_finite(out, "add");
  if (tracing(a, b)) {
    out.set_requires_grad(true);
    Tensor a_t = a, b_t = b, out_t = out;
    Tape::active()->record({a, b}, out, [a_t, b_t, out_t]() {
      const auto& go = out_t.grad_vec();
      if (a_t.requires_grad()) {
        auto& ga = a_t.ensure_grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      }
      if (b_t.requires_grad()) {
        auto& gb = b_t.ensure_grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, float c) {
  Tensor out(a.shape());
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) out[i] = c * a[i];
  check_finite(out, "scale");
  if (tracing(a)) {
    out.set_requires_grad(true);
    Tensor a_t = a, out_t = out;
    Tape::active()->record({a}, out, [a_t, out_t, c]() {
      auto& ga = a_t.ensure_grad();
      const auto& go = out_t.grad_vec();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += c * go[i];
    });
  }
  return out;
}

Tensor flatten(const Tensor& a) {
  Tensor out({static_cast<int>(a.numel())});
  out.vec() = a.vec();
  if (tracing(a)) {
    out.set_requires_grad(true);
    Tensor a_t = a, out_t = out;
    Tape::active()->record({a}, out, [a_t, out_t]() {
      auto& ga = a_t.ensure_grad();
      const auto& go = out_t.grad_vec();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (float v : a.vec()) acc += v;
  Tensor out = Tensor::scalar(static_cast<float>(acc));
  check_finite(out, "sum");
  if (tracing(a)) {
    out.set_requires_grad(true);
    Tensor a_t = a, out_t = out;
    Tape::active()->record({a}, out, [a_t, out_t]() {
      auto& ga = a_t.ensure_grad();
      const float g = out_t.grad_vec()[0];
      for (auto& v : ga) v += g;
    });
  }
  return out;
}

Tensor sum_squares(const Tensor& a) {
  double acc = 0.0;
  for (float v : a.vec()) acc += static_cast<double>(v) * v;
  Tensor out = Tensor::scalar(static_cast<float>(acc));
  check_finite(out, "sum_squares");
  if (tracing(a)) {
    out.set_requires_grad(true);
    Tensor a_t = a, out_t = out;
    Tape::active()->record({a}, out, [a_t, out_t]() {
      auto& ga = a_t.ensure_grad();
      const float g = out_t.grad_vec()[0];
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0f * a_t[i] * g;
    });
  }
  return out;
}

Tensor bce_loss(const Tensor& preds, const std::vector<float>& targets) {
  if (preds.numel() != targets.size()) {
    throw DimensionError("bce_loss: " + std::to_string(preds.numel()) +
                         " predictions vs " + std::to_string(targets.size()) + " targets");
  }
  if (targets.empty()) throw DomainError("bce_loss: empty batch");
  for (float t : targets) {
    if (t != 0.0f && t != 1.0f) {
      throw DomainError("bce_loss: target " + std::to_string(t) + " is not 0 or 1");
    }
  }
  const std::size_t n = targets.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::min(1.0 - kBceClamp, std::max(kBceClamp, static_cast<double>(preds[i])));
    const double t = targets[i];
    acc += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
  }
  Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(n)));
  check_finite(out, "bce_loss");
  if (tracing(preds)) {
    out.set_requires_grad(true);
    Tensor p_t = preds, out_t = out;
    Tape::active()->record({preds}, out, [p_t, out_t, targets, n]() {
      auto& gp = p_t.ensure_grad();
      const double g = out_t.grad_vec()[0] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double p = p_t[i];
        // The clamp zeroes the gradient outside its interior.
        if (p < kBceClamp || p > 1.0 - kBceClamp) continue;
        const double t = targets[i];
        gp[i] += static_cast<float>(g * (p - t) / (p * (1.0 - p)));
      }
    });
  }
  return out;
}

Tensor bce_loss(const Tensor& pred, float target) {
  if (pred.numel() != 1) {
    throw DimensionError("bce_loss: single-prediction form requires a one-element tensor, got " +
                         shape_str(pred.shape()));
  }
  return bce_loss(pred, std::vector<float>{target});
}

}  // namespace pairsim
