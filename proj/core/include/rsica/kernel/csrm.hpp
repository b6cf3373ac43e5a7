#pragma once

#include <cstddef>
#include <random>

#include "rsica/kernel/matrix.hpp"

namespace rsica::kernel {

// Row-wise affine map x -> x W^T + b with W: D x 2D and b: 1 x D.
struct Affine {
  Matrix weight;
  Matrix bias;
};

// Context and gate maps for each time step.
struct CsrmParams {
  Affine context_t1;
  Affine context_t2;
  Affine gate_t1;
  Affine gate_t2;

  std::size_t dim() const noexcept { return context_t1.bias.cols(); }

  static CsrmParams zeros(std::size_t dim);
  static CsrmParams random(std::size_t dim, std::mt19937_64& rng, double scale = 1.0);
};

// Throws InvalidArgument unless every member fits one D.
void validate(const CsrmParams& params);

// F2 - F1.
Matrix feature_diff(const Matrix& f1, const Matrix& f2);

// Intermediates of one forward pass, enough for the backward pass.
struct CsrmCache {
  CsrmParams params;
  Matrix x_t1;  // [diff | F1], N x 2D
  Matrix x_t2;  // [diff | F2]
  Matrix context_t1;
  Matrix context_t2;
  Matrix gate_t1;
  Matrix gate_t2;
};

struct CsrmOutput {
  Matrix out_t1;  // G1 * C1
  Matrix out_t2;  // G2 * C2
  CsrmCache cache;
};

// C_t = tanh([diff | F_t] W_c^T + b_c), G_t = sigmoid([diff | F_t] W_g^T + b_g),
// F'_t = G_t * C_t. Throws InvalidArgument on shape mismatch or non-finite input.
CsrmOutput csrm_forward(const Matrix& f1, const Matrix& f2, const CsrmParams& params);

struct CsrmGrads {
  Matrix d_f1;
  Matrix d_f2;
  CsrmParams d_params;
};

CsrmGrads csrm_backward(const CsrmCache& cache, const Matrix& d_out_t1,
                        const Matrix& d_out_t2);

}  // namespace rsica::kernel
