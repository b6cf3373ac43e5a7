#pragma once

#include <cstddef>
#include <span>

#include "rsica/kernel/matrix.hpp"

namespace rsica::kernel {

inline constexpr double kSimplexTolerance = 1e-9;

// -(1/K) sum_i log probs(i, targets[i]). Rows must lie on the simplex
// (non-negative, summing to 1 within kSimplexTolerance) and targets must
// index a column; otherwise InvalidArgument.
double cross_entropy(const Matrix& probs, std::span<const std::size_t> targets);

struct LossAndGrad {
  double loss;
  Matrix d_logits;
};

// cross_entropy(softmax_rows(logits)) and its gradient (softmax - onehot) / K.
LossAndGrad softmax_cross_entropy(const Matrix& logits,
                                  std::span<const std::size_t> targets);

}  // namespace rsica::kernel
