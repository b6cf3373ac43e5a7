#include "rsica/kernel/loss.hpp"

#include <cmath>
#include <string>

#include "rsica/error.hpp"
#include "rsica/kernel/attention.hpp"

namespace rsica::kernel {

namespace {

void check_targets(const Matrix& m, std::span<const std::size_t> targets) {
  if (targets.size() != m.rows()) {
    throw InvalidArgument("cross_entropy: " + std::to_string(targets.size()) +
                          " targets for " + std::to_string(m.rows()) + " rows");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] >= m.cols()) {
      throw InvalidArgument("cross_entropy: target " + std::to_string(targets[i]) +
                            " in row " + std::to_string(i) + " is not below " +
                            std::to_string(m.cols()));
    }
  }
}

}  // namespace

double cross_entropy(const Matrix& probs, std::span<const std::size_t> targets) {
  check_targets(probs, targets);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double total = 0.0;
    for (double p : probs.row(i)) {
      if (!(p >= 0.0)) {
        throw InvalidArgument("cross_entropy: row " + std::to_string(i) +
                              " has a negative or NaN entry");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > kSimplexTolerance) {
      throw InvalidArgument("cross_entropy: row " + std::to_string(i) + " sums to " +
                            std::to_string(total));
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) sum += std::log(probs(i, targets[i]));
  return -sum / static_cast<double>(probs.rows());
}

LossAndGrad softmax_cross_entropy(const Matrix& logits,
                                  std::span<const std::size_t> targets) {
  check_targets(logits, targets);
  Matrix probs = softmax_rows(logits);
  const double loss = cross_entropy(probs, targets);
  const double inv_k = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    probs(i, targets[i]) -= 1.0;
    for (std::size_t j = 0; j < probs.cols(); ++j) probs(i, j) *= inv_k;
  }
  return {loss, std::move(probs)};
}

}  // namespace rsica::kernel
