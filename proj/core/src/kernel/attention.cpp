#include "rsica/kernel/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rsica/error.hpp"

namespace rsica::kernel {

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out(i, j) = std::exp(m(i, j) - peak);
      total += out(i, j);
    }
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) /= total;
  }
  return out;
}

Matrix attention_forward(const Matrix& q, const Matrix& k, const Matrix& v) {
  if (q.cols() != k.cols()) {
    throw InvalidArgument("attention: query width " + std::to_string(q.cols()) +
                          " differs from key width " + std::to_string(k.cols()));
  }
  if (k.rows() != v.rows()) {
    throw InvalidArgument("attention: " + std::to_string(k.rows()) + " keys but " +
                          std::to_string(v.rows()) + " values");
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  return matmul(softmax_rows(scale(matmul_nt(q, k), inv_sqrt_d)), v);
}

QFormerParams QFormerParams::random(std::size_t queries, std::size_t width,
                                    std::size_t visual_width, std::size_t hidden,
                                    std::mt19937_64& rng, double scale) {
  const auto r = [&](std::size_t rows, std::size_t cols) {
    return random_matrix(rows, cols, rng, -scale, scale);
  };
  Matrix q = r(queries, width);
  Matrix wq = r(width, width);
  Matrix wk = r(width, width);
  Matrix wv = r(width, width);
  Matrix cq = r(width, width);
  Matrix ck = r(visual_width, width);
  Matrix cv = r(visual_width, width);
  Matrix w1 = r(width, hidden);
  Matrix b1 = r(1, hidden);
  Matrix w2 = r(hidden, width);
  Matrix b2 = r(1, width);
  return {std::move(q),  std::move(wq), std::move(wk), std::move(wv),
          std::move(cq), std::move(ck), std::move(cv), std::move(w1),
          std::move(b1), std::move(w2), std::move(b2)};
}

void validate(const QFormerParams& p) {
  const std::size_t d = p.width();
  const std::size_t visual = p.visual_width();
  const std::size_t h = p.ffn_w1.cols();
  const auto expect = [](const Matrix& m, std::size_t rows, std::size_t cols,
                         const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
      throw InvalidArgument(std::string("qformer parameter ") + name + " must be " +
                            std::to_string(rows) + "x" + std::to_string(cols));
    }
  };
  expect(p.self_wq, d, d, "self_wq");
  expect(p.self_wk, d, d, "self_wk");
  expect(p.self_wv, d, d, "self_wv");
  expect(p.cross_wq, d, d, "cross_wq");
  expect(p.cross_wk, visual, d, "cross_wk");
  expect(p.cross_wv, visual, d, "cross_wv");
  expect(p.ffn_w1, d, h, "ffn_w1");
  expect(p.ffn_b1, 1, h, "ffn_b1");
  expect(p.ffn_w2, h, d, "ffn_w2");
  expect(p.ffn_b2, 1, d, "ffn_b2");
}

Matrix qformer_forward(const Matrix& f1, const Matrix& f2, const Matrix& prompt_emb,
                       const QFormerParams& p) {
  validate(p);
  if (!f1.same_shape(f2) || f1.cols() != p.visual_width()) {
    throw InvalidArgument("qformer: visual features must both be N x " +
                          std::to_string(p.visual_width()));
  }
  if (prompt_emb.cols() != p.width()) {
    throw InvalidArgument("qformer: prompt embeddings must be T x " +
                          std::to_string(p.width()));
  }
  const Matrix& q = p.queries;
  const Matrix q_sa =
      attention_forward(matmul(q, p.self_wq), matmul(q, p.self_wk), matmul(q, p.self_wv));

  const Matrix visual = vconcat(f1, f2);
  const Matrix keys = vconcat(matmul(visual, p.cross_wk), prompt_emb);
  const Matrix values = vconcat(matmul(visual, p.cross_wv), prompt_emb);
  const Matrix q_ca = attention_forward(matmul(q_sa, p.cross_wq), keys, values);

  Matrix hidden = add_row(matmul(q_ca, p.ffn_w1), p.ffn_b1);
  for (double& v : hidden.data()) v = std::tanh(v);
  return add_row(matmul(hidden, p.ffn_w2), p.ffn_b2);
}

}  // namespace rsica::kernel
