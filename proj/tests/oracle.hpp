#pragma once

// Double-precision reference forwards, written as plain loops with no shared
// code with src/. Used to check autodiff gradients against central finite
// differences and op outputs against an independent implementation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline Vec conv2d(const Vec& in, int C, int H, int W, const Vec& kernel,
                  int CO, int kH, int kW, const Vec& bias, int stride, int pad,
                  int& OH, int& OW) {
  OH = (H + 2 * pad - kH) / stride + 1;
  OW = (W + 2 * pad - kW) / stride + 1;
  Vec out(static_cast<std::size_t>(CO) * OH * OW, 0.0);
  for (int co = 0; co < CO; ++co) {
    for (int oh = 0; oh < OH; ++oh) {
      for (int ow = 0; ow < OW; ++ow) {
        double acc = bias[static_cast<std::size_t>(co)];
        for (int ci = 0; ci < C; ++ci) {
          for (int r = 0; r < kH; ++r) {
            for (int s = 0; s < kW; ++s) {
              const int ih = oh * stride + r - pad;
              const int iw = ow * stride + s - pad;
              if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
              acc += in[(static_cast<std::size_t>(ci) * H + ih) * W + iw] *
                     kernel[((static_cast<std::size_t>(co) * C + ci) * kH + r) * kW + s];
            }
          }
        }
        out[(static_cast<std::size_t>(co) * OH + oh) * OW + ow] = acc;
      }
    }
  }
  return out;
}

inline Vec maxpool2(const Vec& in, int C, int H, int W) {
  const int OH = H / 2, OW = W / 2;
  Vec out(static_cast<std::size_t>(C) * OH * OW);
  for (int c = 0; c < C; ++c) {
    for (int oh = 0; oh < OH; ++oh) {
      for (int ow = 0; ow < OW; ++ow) {
        const std::size_t base = (static_cast<std::size_t>(c) * H + 2 * oh) * W + 2 * ow;
        double best = in[base];
        best = std::max(best, in[base + 1]);
        best = std::max(best, in[base + W]);
        best = std::max(best, in[base + W + 1]);
        out[(static_cast<std::size_t>(c) * OH + oh) * OW + ow] = best;
      }
    }
  }
  return out;
}

inline Vec relu(Vec v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
  return v;
}

inline Vec sigmoid(Vec v) {
  for (double& x : v) {
    const double y = 1.0 / (1.0 + std::exp(-x));
    x = std::min(1.0 - 1e-7, std::max(1e-7, y));
  }
  return v;
}

inline Vec fully_connected(const Vec& x, const Vec& w, const Vec& b, int m, int n) {
  Vec out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double acc = b[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      acc += w[static_cast<std::size_t>(i) * n + j] * x[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

inline Vec concat(const Vec& a, const Vec& b) {
  Vec out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline Vec subtract(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline double bce(const Vec& preds, const Vec& targets) {
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double p = std::min(1.0 - 1e-7, std::max(1e-7, preds[i]));
    acc += -(targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p));
  }
  return acc / static_cast<double>(preds.size());
}

inline double sum_squares(const Vec& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

// Central finite differences of `loss` at `theta`.
inline Vec finite_diff(const std::function<double(const Vec&)>& loss, Vec theta,
                       double h = 1e-3) {
  Vec grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + h;
    const double up = loss(theta);
    theta[i] = saved - h;
    const double down = loss(theta);
    theta[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

struct GradCheck {
  double max_abs_diff = 0.0;
  double worst_ad = 0.0;
  double worst_fd = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool ok = true;
};

// Pass when |ad - fd| <= abs_floor + rel_tol * max(|ad|, |fd|) everywhere.
inline GradCheck compare_grads(const Vec& autodiff, const Vec& fd,
                               double rel_tol = 1e-4, double abs_floor = 1e-6) {
  GradCheck r;
  r.checked = autodiff.size();
  for (std::size_t i = 0; i < autodiff.size(); ++i) {
    const double diff = std::abs(autodiff[i] - fd[i]);
    const double tol = abs_floor + rel_tol * std::max(std::abs(autodiff[i]), std::abs(fd[i]));
    if (diff > r.max_abs_diff) {
      r.max_abs_diff = diff;
      r.worst_ad = autodiff[i];
      r.worst_fd = fd[i];
      r.worst_index = i;
    }
    if (diff > tol) r.ok = false;
  }
  return r;
}

// Full check with kink handling: a +/-h probe that straddles a relu or pool
// boundary yields a quotient that blends two smooth regimes and can disagree
// with the true one-sided derivative by a large margin. Coordinates failing at
// the base step are re-measured at progressively smaller h, which shrinks the
// straddling window without meaningful truncation loss in double precision.
inline GradCheck check_gradients(const std::function<double(const Vec&)>& loss,
                                 Vec theta, const Vec& autodiff,
                                 double rel_tol = 1e-4, double abs_floor = 1e-6) {
  Vec fd = finite_diff(loss, theta, 1e-3);
  for (const double h : {1e-4, 1e-5}) {
    bool any_fail = false;
    for (std::size_t i = 0; i < autodiff.size(); ++i) {
      const double diff = std::abs(autodiff[i] - fd[i]);
      const double tol =
          abs_floor + rel_tol * std::max(std::abs(autodiff[i]), std::abs(fd[i]));
      if (diff <= tol) continue;
      any_fail = true;
      const double saved = theta[i];
      theta[i] = saved + h;
      const double up = loss(theta);
      theta[i] = saved - h;
      const double down = loss(theta);
      theta[i] = saved;
      fd[i] = (up - down) / (2.0 * h);
    }
    if (!any_fail) break;
  }
  return compare_grads(autodiff, fd, rel_tol, abs_floor);
}

}  // namespace oracle
