#include "rsica/kernel/csrm.hpp"

#include <cmath>
#include <string>

#include "rsica/error.hpp"

namespace rsica::kernel {

namespace {

Affine zero_affine(std::size_t dim) { return {Matrix(dim, 2 * dim), Matrix(1, dim)}; }

Affine random_affine(std::size_t dim, std::mt19937_64& rng, double scale) {
  return {random_matrix(dim, 2 * dim, rng, -scale, scale),
          random_matrix(1, dim, rng, -scale, scale)};
}

void check_affine(const Affine& a, std::size_t dim, const char* name) {
  if (a.weight.rows() != dim || a.weight.cols() != 2 * dim || a.bias.rows() != 1 ||
      a.bias.cols() != dim) {
    throw InvalidArgument(std::string("csrm parameter ") + name +
                          " does not match dimension " + std::to_string(dim));
  }
}

Matrix apply(const Affine& a, const Matrix& x) {
  return add_row(matmul_nt(x, a.weight), a.bias);
}

Matrix map(const Matrix& m, double (*f)(double)) {
  Matrix out = m;
  for (double& v : out.data()) v = f(v);
  return out;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double tanh_fn(double z) { return std::tanh(z); }

struct BranchGrads {
  Affine d_context;
  Affine d_gate;
  Matrix d_x;
};

BranchGrads branch_backward(const Affine& context, const Affine& gate, const Matrix& x,
                            const Matrix& c, const Matrix& g, const Matrix& d_out) {
  Matrix d_zc(c.rows(), c.cols());
  Matrix d_zg(c.rows(), c.cols());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double cv = c.data()[i];
    const double gv = g.data()[i];
    const double up = d_out.data()[i];
    d_zc.data()[i] = up * gv * (1.0 - cv * cv);
    d_zg.data()[i] = up * cv * gv * (1.0 - gv);
  }
  Matrix d_x = add(matmul(d_zc, context.weight), matmul(d_zg, gate.weight));
  return {{matmul_tn(d_zc, x), column_sums(d_zc)},
          {matmul_tn(d_zg, x), column_sums(d_zg)},
          std::move(d_x)};
}

}  // namespace

CsrmParams CsrmParams::zeros(std::size_t dim) {
  return {zero_affine(dim), zero_affine(dim), zero_affine(dim), zero_affine(dim)};
}

CsrmParams CsrmParams::random(std::size_t dim, std::mt19937_64& rng, double scale) {
  Affine c1 = random_affine(dim, rng, scale);
  Affine c2 = random_affine(dim, rng, scale);
  Affine g1 = random_affine(dim, rng, scale);
  Affine g2 = random_affine(dim, rng, scale);
  return {std::move(c1), std::move(c2), std::move(g1), std::move(g2)};
}

void validate(const CsrmParams& params) {
  const std::size_t dim = params.dim();
  check_affine(params.context_t1, dim, "context_t1");
  check_affine(params.context_t2, dim, "context_t2");
  check_affine(params.gate_t1, dim, "gate_t1");
  check_affine(params.gate_t2, dim, "gate_t2");
}

Matrix feature_diff(const Matrix& f1, const Matrix& f2) { return subtract(f2, f1); }

CsrmOutput csrm_forward(const Matrix& f1, const Matrix& f2, const CsrmParams& params) {
  validate(params);
  if (!f1.same_shape(f2) || f1.cols() != params.dim()) {
    throw InvalidArgument("csrm_forward: features must both be N x " +
                          std::to_string(params.dim()));
  }
  if (!f1.all_finite() || !f2.all_finite()) {
    throw InvalidArgument("csrm_forward: non-finite input feature");
  }
  const Matrix diff = feature_diff(f1, f2);
  Matrix x1 = hconcat(diff, f1);
  Matrix x2 = hconcat(diff, f2);
  Matrix c1 = map(apply(params.context_t1, x1), tanh_fn);
  Matrix c2 = map(apply(params.context_t2, x2), tanh_fn);
  Matrix g1 = map(apply(params.gate_t1, x1), sigmoid);
  Matrix g2 = map(apply(params.gate_t2, x2), sigmoid);
  Matrix out1 = hadamard(g1, c1);
  Matrix out2 = hadamard(g2, c2);
  return {std::move(out1), std::move(out2),
          CsrmCache{params, std::move(x1), std::move(x2), std::move(c1), std::move(c2),
                    std::move(g1), std::move(g2)}};
}

CsrmGrads csrm_backward(const CsrmCache& cache, const Matrix& d_out_t1,
                        const Matrix& d_out_t2) {
  if (!d_out_t1.same_shape(cache.context_t1) || !d_out_t2.same_shape(cache.context_t2)) {
    throw InvalidArgument("csrm_backward: upstream gradients must match the outputs");
  }
  const std::size_t dim = cache.params.dim();
  BranchGrads b1 = branch_backward(cache.params.context_t1, cache.params.gate_t1,
                                   cache.x_t1, cache.context_t1, cache.gate_t1, d_out_t1);
  BranchGrads b2 = branch_backward(cache.params.context_t2, cache.params.gate_t2,
                                   cache.x_t2, cache.context_t2, cache.gate_t2, d_out_t2);

  // The difference block feeds both branches: diff = F2 - F1.
  const Matrix d_diff = add(column_block(b1.d_x, 0, dim), column_block(b2.d_x, 0, dim));
  Matrix d_f1 = subtract(column_block(b1.d_x, dim, dim), d_diff);
  Matrix d_f2 = add(column_block(b2.d_x, dim, dim), d_diff);

  return {std::move(d_f1), std::move(d_f2),
          CsrmParams{std::move(b1.d_context), std::move(b2.d_context), std::move(b1.d_gate),
                     std::move(b2.d_gate)}};
}

}  // namespace rsica::kernel
