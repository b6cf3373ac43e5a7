#include "rsica/kernel/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "rsica/error.hpp"
#include "rsica/kernel/csrm.hpp"
#include "rsica/kernel/loss.hpp"
#include "rsica/kernel/matrix.hpp"
#include "scalar_forms.hpp"

namespace rsica::kernel {

namespace {

// Flat layout: F1, F2, then each Affine as weight followed by bias in the
// order context_t1, context_t2, gate_t1, gate_t2.
class CsrmLayout {
 public:
  CsrmLayout(std::size_t n, std::size_t d) : n_(n), d_(d) {}

  std::size_t dimension() const { return 2 * n_ * d_ + 4 * (2 * d_ * d_ + d_); }

  void unpack(std::span<const double> x, Matrix& f1, Matrix& f2, CsrmParams& p) const {
    std::size_t at = 0;
    const auto take = [&](Matrix& m) {
      std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(at), m.size(), m.data().begin());
      at += m.size();
    };
    take(f1);
    take(f2);
    for (Affine* a : {&p.context_t1, &p.context_t2, &p.gate_t1, &p.gate_t2}) {
      take(a->weight);
      take(a->bias);
    }
  }

  std::vector<double> pack(const Matrix& f1, const Matrix& f2, const CsrmParams& p) const {
    std::vector<double> out;
    out.reserve(dimension());
    const auto put = [&](const Matrix& m) {
      out.insert(out.end(), m.data().begin(), m.data().end());
    };
    put(f1);
    put(f2);
    for (const Affine* a : {&p.context_t1, &p.context_t2, &p.gate_t1, &p.gate_t2}) {
      put(a->weight);
      put(a->bias);
    }
    return out;
  }

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }

 private:
  std::size_t n_;
  std::size_t d_;
};

std::vector<long double> widen(const Matrix& m) {
  return {m.data().begin(), m.data().end()};
}

long double dot(std::span<const long double> a, std::span<const long double> b) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

Differentiable make_linear(const OpSpec& spec, std::mt19937_64& rng) {
  const Matrix w = random_matrix(spec.rows, spec.cols, rng);
  const Matrix r = random_matrix(spec.rows, 1, rng);
  Differentiable f;
  f.dimension = spec.cols;
  f.value = [w = widen(w), r = widen(r), rows = spec.rows,
             cols = spec.cols](std::span<const long double> x) {
    long double sum = 0.0L;
    for (std::size_t i = 0; i < rows; ++i) {
      long double wx = 0.0L;
      for (std::size_t j = 0; j < cols; ++j) wx += w[i * cols + j] * x[j];
      sum += r[i] * wx;
    }
    return sum;
  };
  f.gradient = [w, r](std::span<const double>) {
    const Matrix g = matmul_tn(w, r);
    return std::vector<double>(g.data().begin(), g.data().end());
  };
  return f;
}

Differentiable make_csrm(const OpSpec& spec, std::mt19937_64& rng) {
  const CsrmLayout layout(spec.rows, spec.cols);
  const Matrix probe1 = random_matrix(spec.rows, spec.cols, rng);
  const Matrix probe2 = random_matrix(spec.rows, spec.cols, rng);
  Differentiable f;
  f.dimension = layout.dimension();
  f.value = [layout, p1 = widen(probe1), p2 = widen(probe2)](std::span<const long double> x) {
    const std::size_t n = layout.n();
    const std::size_t d = layout.d();
    const std::size_t feat = n * d;
    const std::size_t affine = 2 * d * d + d;
    const auto f1 = x.subspan(0, feat);
    const auto f2 = x.subspan(feat, feat);
    const auto view = [&](std::size_t slot) {
      const auto block = x.subspan(2 * feat + slot * affine, affine);
      return detail::AffineView<long double>{block.subspan(0, 2 * d * d),
                                             block.subspan(2 * d * d, d)};
    };
    const auto out1 = detail::csrm_branch<long double>(f1, f2, f1, n, d, view(0), view(2));
    const auto out2 = detail::csrm_branch<long double>(f1, f2, f2, n, d, view(1), view(3));
    return dot(p1, out1) + dot(p2, out2);
  };
  f.gradient = [layout, probe1, probe2](std::span<const double> x) {
    Matrix f1(layout.n(), layout.d());
    Matrix f2(layout.n(), layout.d());
    CsrmParams p = CsrmParams::zeros(layout.d());
    layout.unpack(x, f1, f2, p);
    const CsrmOutput out = csrm_forward(f1, f2, p);
    const CsrmGrads g = csrm_backward(out.cache, probe1, probe2);
    return layout.pack(g.d_f1, g.d_f2, g.d_params);
  };
  return f;
}

Differentiable make_softmax_ce(const OpSpec& spec, std::mt19937_64& rng) {
  std::vector<std::size_t> targets(spec.rows);
  std::uniform_int_distribution<std::size_t> pick(0, spec.cols - 1);
  for (auto& t : targets) t = pick(rng);
  const std::size_t rows = spec.rows;
  const std::size_t cols = spec.cols;
  Differentiable f;
  f.dimension = rows * cols;
  f.value = [targets, cols](std::span<const long double> x) {
    return detail::softmax_cross_entropy<long double>(x, targets, cols);
  };
  f.gradient = [targets, rows, cols](std::span<const double> x) {
    const Matrix logits(rows, cols, std::vector<double>(x.begin(), x.end()));
    const LossAndGrad lg = softmax_cross_entropy(logits, targets);
    return std::vector<double>(lg.d_logits.data().begin(), lg.d_logits.data().end());
  };
  return f;
}

}  // namespace

double grad_check(const Differentiable& f, std::span<const double> point, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("grad_check: epsilon must be positive and finite");
  }
  if (point.size() != f.dimension) {
    throw InvalidArgument("grad_check: point has " + std::to_string(point.size()) +
                          " coordinates, expected " + std::to_string(f.dimension));
  }
  const std::vector<double> analytic = f.gradient(point);
  std::vector<long double> x(point.begin(), point.end());
  const long double eps = epsilon;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double saved = x[i];
    x[i] = saved + eps;
    const long double up = f.value(x);
    x[i] = saved - eps;
    const long double down = f.value(x);
    x[i] = saved;
    const double numeric = static_cast<double>((up - down) / (2.0L * eps));
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

std::vector<std::string> registered_ops() {
  return {"linear", "csrm", "softmax_cross_entropy"};
}

Differentiable make_op(const OpSpec& spec) {
  if (spec.rows == 0 || spec.cols == 0) {
    throw InvalidArgument("grad_check op '" + spec.name + "' needs a positive shape");
  }
  std::mt19937_64 rng(spec.seed);
  if (spec.name == "linear") return make_linear(spec, rng);
  if (spec.name == "csrm") return make_csrm(spec, rng);
  if (spec.name == "softmax_cross_entropy") return make_softmax_ce(spec, rng);
  throw InvalidArgument("grad_check: op '" + spec.name + "' is not registered");
}

std::vector<double> random_point(const Differentiable& f, std::mt19937_64& rng, double lo,
                                 double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> x(f.dimension);
  for (double& v : x) v = dist(rng);
  return x;
}

double grad_check(const OpSpec& spec, std::span<const double> point, double epsilon) {
  return grad_check(make_op(spec), point, epsilon);
}

}  // namespace rsica::kernel
