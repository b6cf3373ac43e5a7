#pragma once

#include <cstddef>
#include <random>

#include "rsica/kernel/matrix.hpp"

namespace rsica::kernel {

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& m);

// softmax(Q K^T / sqrt(d)) V with d = Q.cols(); single head.
Matrix attention_forward(const Matrix& q, const Matrix& k, const Matrix& v);

inline constexpr std::size_t kDefaultQueryCount = 32;

// Single-block query transformer. d: query width, D: visual feature
// width, h: FFN hidden width.
struct QFormerParams {
  Matrix queries;   // L x d
  Matrix self_wq;   // d x d
  Matrix self_wk;   // d x d
  Matrix self_wv;   // d x d
  Matrix cross_wq;  // d x d
  Matrix cross_wk;  // D x d
  Matrix cross_wv;  // D x d
  Matrix ffn_w1;    // d x h
  Matrix ffn_b1;    // 1 x h
  Matrix ffn_w2;    // h x d
  Matrix ffn_b2;    // 1 x d

  std::size_t query_count() const noexcept { return queries.rows(); }
  std::size_t width() const noexcept { return queries.cols(); }
  std::size_t visual_width() const noexcept { return cross_wk.rows(); }

  static QFormerParams random(std::size_t queries, std::size_t width,
                              std::size_t visual_width, std::size_t hidden,
                              std::mt19937_64& rng, double scale = 0.5);
};

void validate(const QFormerParams& params);

// Self-attention over the queries, cross-attention to the projected
// [F'1; F'2] rows followed by the prompt rows, then a tanh FFN. Output L x d.
Matrix qformer_forward(const Matrix& f1, const Matrix& f2, const Matrix& prompt_emb,
                       const QFormerParams& params);

}  // namespace rsica::kernel
