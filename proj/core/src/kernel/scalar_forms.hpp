#pragma once

// Straight-line loop forms of the kernel ops, generic in the scalar type.
// Used as oracles and for extended-precision finite differences.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace rsica::kernel::detail {

// Row-major views: a(i, j) = data[i * cols + j].
template <typename T>
struct AffineView {
  std::span<const T> weight;  // D x 2D
  std::span<const T> bias;    // D
};

// One CSRM branch: out = sigmoid(x Wg^T + bg) * tanh(x Wc^T + bc) with
// x = [f2 - f1 | own].
template <typename T>
std::vector<T> csrm_branch(std::span<const T> f1, std::span<const T> f2,
                           std::span<const T> own, std::size_t n, std::size_t d,
                           const AffineView<T>& context, const AffineView<T>& gate) {
  std::vector<T> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < d; ++o) {
      T zc = context.bias[o];
      T zg = gate.bias[o];
      for (std::size_t k = 0; k < d; ++k) {
        const T diff = f2[i * d + k] - f1[i * d + k];
        zc += context.weight[o * 2 * d + k] * diff;
        zg += gate.weight[o * 2 * d + k] * diff;
      }
      for (std::size_t k = 0; k < d; ++k) {
        const T x = own[i * d + k];
        zc += context.weight[o * 2 * d + d + k] * x;
        zg += gate.weight[o * 2 * d + d + k] * x;
      }
      const T c = std::tanh(zc);
      const T g = T(1) / (T(1) + std::exp(-zg));
      out[i * d + o] = g * c;
    }
  }
  return out;
}

template <typename T>
std::vector<T> attention(std::span<const T> q, std::span<const T> k, std::span<const T> v,
                         std::size_t lq, std::size_t lk, std::size_t width,
                         std::size_t value_width) {
  std::vector<T> out(lq * value_width, T(0));
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(width));
  std::vector<T> scores(lk);
  for (std::size_t i = 0; i < lq; ++i) {
    T peak = T(0);
    for (std::size_t j = 0; j < lk; ++j) {
      T s = T(0);
      for (std::size_t c = 0; c < width; ++c) s += q[i * width + c] * k[j * width + c];
      scores[j] = s * inv_sqrt;
      if (j == 0 || scores[j] > peak) peak = scores[j];
    }
    T total = T(0);
    for (std::size_t j = 0; j < lk; ++j) {
      scores[j] = std::exp(scores[j] - peak);
      total += scores[j];
    }
    for (std::size_t j = 0; j < lk; ++j) {
      const T w = scores[j] / total;
      for (std::size_t c = 0; c < value_width; ++c) {
        out[i * value_width + c] += w * v[j * value_width + c];
      }
    }
  }
  return out;
}

template <typename T>
T cross_entropy(std::span<const T> probs, std::span<const std::size_t> targets,
                std::size_t cols) {
  T sum = T(0);
  for (std::size_t i = 0; i < targets.size(); ++i) sum += std::log(probs[i * cols + targets[i]]);
  return -sum / static_cast<T>(targets.size());
}

template <typename T>
T softmax_cross_entropy(std::span<const T> logits, std::span<const std::size_t> targets,
                        std::size_t cols) {
  T sum = T(0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    T peak = logits[i * cols];
    for (std::size_t j = 1; j < cols; ++j) {
      if (logits[i * cols + j] > peak) peak = logits[i * cols + j];
    }
    T total = T(0);
    for (std::size_t j = 0; j < cols; ++j) total += std::exp(logits[i * cols + j] - peak);
    sum += logits[i * cols + targets[i]] - peak - std::log(total);
  }
  return -sum / static_cast<T>(targets.size());
}

}  // namespace rsica::kernel::detail
