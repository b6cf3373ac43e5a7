#include "rsica/kernel/scalar_reference.hpp"

#include <vector>

#include "rsica/error.hpp"
#include "scalar_forms.hpp"

namespace rsica::kernel::reference {

namespace {

detail::AffineView<double> view(const Affine& a) {
  return {a.weight.data(), a.bias.data()};
}

}  // namespace

Matrix feature_diff(const Matrix& f1, const Matrix& f2) {
  if (!f1.same_shape(f2)) throw InvalidArgument("feature_diff: shape mismatch");
  Matrix out(f1.rows(), f1.cols());
  for (std::size_t i = 0; i < f1.rows(); ++i) {
    for (std::size_t j = 0; j < f1.cols(); ++j) out(i, j) = f2(i, j) - f1(i, j);
  }
  return out;
}

std::pair<Matrix, Matrix> csrm_forward(const Matrix& f1, const Matrix& f2,
                                       const CsrmParams& params) {
  validate(params);
  if (!f1.same_shape(f2) || f1.cols() != params.dim()) {
    throw InvalidArgument("csrm_forward: shape mismatch");
  }
  const std::size_t n = f1.rows();
  const std::size_t d = f1.cols();
  auto out1 = detail::csrm_branch<double>(f1.data(), f2.data(), f1.data(), n, d,
                                          view(params.context_t1), view(params.gate_t1));
  auto out2 = detail::csrm_branch<double>(f1.data(), f2.data(), f2.data(), n, d,
                                          view(params.context_t2), view(params.gate_t2));
  return {Matrix(n, d, std::move(out1)), Matrix(n, d, std::move(out2))};
}

Matrix attention_forward(const Matrix& q, const Matrix& k, const Matrix& v) {
  if (q.cols() != k.cols() || k.rows() != v.rows()) {
    throw InvalidArgument("attention_forward: shape mismatch");
  }
  auto out = detail::attention<double>(q.data(), k.data(), v.data(), q.rows(), k.rows(),
                                       q.cols(), v.cols());
  return Matrix(q.rows(), v.cols(), std::move(out));
}

double cross_entropy(const Matrix& probs, std::span<const std::size_t> targets) {
  if (targets.size() != probs.rows()) throw InvalidArgument("cross_entropy: row mismatch");
  for (std::size_t t : targets) {
    if (t >= probs.cols()) throw InvalidArgument("cross_entropy: target out of range");
  }
  return detail::cross_entropy<double>(probs.data(), targets, probs.cols());
}

}  // namespace rsica::kernel::reference
