#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "rsica/kernel/csrm.hpp"
#include "rsica/kernel/matrix.hpp"

namespace rsica::kernel::reference {

// Loop-by-loop recomputations of the matrix kernels, written without the
// Matrix helpers so they can serve as independent oracles.
Matrix feature_diff(const Matrix& f1, const Matrix& f2);
std::pair<Matrix, Matrix> csrm_forward(const Matrix& f1, const Matrix& f2,
                                       const CsrmParams& params);
Matrix attention_forward(const Matrix& q, const Matrix& k, const Matrix& v);
double cross_entropy(const Matrix& probs, std::span<const std::size_t> targets);

}  // namespace rsica::kernel::reference
