#include "rsica/kernel/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "rsica/kernel/attention.hpp"
#include "rsica/kernel/csrm.hpp"
#include "rsica/kernel/grad_check.hpp"
#include "rsica/kernel/loss.hpp"
#include "rsica/kernel/matrix.hpp"
#include "rsica/kernel/scalar_reference.hpp"

namespace rsica::kernel {

namespace {

constexpr double kGradientTolerance = 1e-6;
constexpr double kLinearTolerance = 1e-9;
constexpr double kOracleTolerance = 1e-12;
constexpr double kEpsilon = 1e-6;

constexpr std::size_t kRowChoices[] = {1, 2, 3};
constexpr std::size_t kDimChoices[] = {2, 3, 5};

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

class Suite {
 public:
  explicit Suite(const KernelCheckOptions& options)
      : options_(options), rng_(options.seed) {}

  void record(std::string op, std::string measure, double error, double default_tolerance,
              std::size_t trials) {
    const double tolerance = options_.tolerance.value_or(default_tolerance);
    const bool pass = std::isfinite(error) && error <= tolerance;
    results_.push_back({std::move(op), std::move(measure), error, tolerance, trials, pass});
  }

  void feature_diff_check() {
    double worst = 0.0;
    for (std::size_t t = 0; t < options_.oracle_trials; ++t) {
      const Matrix f1 = random_matrix(pick(rng_, 1, 6), pick(rng_, 1, 8), rng_);
      const Matrix f2 = random_matrix(f1.rows(), f1.cols(), rng_);
      const Matrix diff = feature_diff(f1, f2);
      worst = std::max(worst, max_abs_difference(diff, reference::feature_diff(f1, f2)));
      worst = std::max(worst, max_abs_difference(diff, scale(feature_diff(f2, f1), -1.0)));
    }
    record("feature_diff", "max_abs_error", worst, kOracleTolerance, options_.oracle_trials);
  }

  void csrm_forward_check() {
    double worst = 0.0;
    double violation = 0.0;
    for (std::size_t t = 0; t < options_.oracle_trials; ++t) {
      const std::size_t n = pick(rng_, 1, 4);
      const std::size_t d = pick(rng_, 1, 6);
      const Matrix f1 = random_matrix(n, d, rng_);
      const Matrix f2 = random_matrix(n, d, rng_);
      const CsrmParams p = CsrmParams::random(d, rng_);
      const CsrmOutput out = csrm_forward(f1, f2, p);
      const auto [r1, r2] = reference::csrm_forward(f1, f2, p);
      worst = std::max({worst, max_abs_difference(out.out_t1, r1),
                        max_abs_difference(out.out_t2, r2)});
      violation = std::max(violation, range_violation(out));
    }
    record("csrm_forward", "max_abs_error", worst, kOracleTolerance, options_.oracle_trials);
    record("csrm_ranges", "max_violation", violation, 0.0, options_.oracle_trials);
  }

  void gradient_check(const std::string& op, double tolerance, bool csrm_shapes) {
    double worst = 0.0;
    for (std::size_t t = 0; t < options_.gradient_trials; ++t) {
      OpSpec spec{op, 0, 0, rng_()};
      if (csrm_shapes) {
        spec.rows = kRowChoices[pick(rng_, 0, 2)];
        spec.cols = kDimChoices[pick(rng_, 0, 2)];
      } else {
        spec.rows = pick(rng_, 1, 4);
        spec.cols = pick(rng_, 2, 6);
      }
      const Differentiable f = make_op(spec);
      const std::vector<double> point = random_point(f, rng_);
      worst = std::max(worst, grad_check(f, point, kEpsilon));
    }
    record(op == "csrm" ? "csrm_backward" : op, "max_rel_error", worst, tolerance,
           options_.gradient_trials);
  }

  void softmax_check() {
    double worst = 0.0;
    for (std::size_t t = 0; t < options_.oracle_trials; ++t) {
      const Matrix m = random_matrix(pick(rng_, 1, 6), pick(rng_, 1, 9), rng_, -20.0, 20.0);
      const Matrix s = softmax_rows(m);
      for (std::size_t i = 0; i < s.rows(); ++i) {
        const auto row = s.row(i);
        worst = std::max(worst, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
      }
    }
    record("softmax_rows", "max_abs_error", worst, kOracleTolerance, options_.oracle_trials);
  }

  void attention_check() {
    double worst = 0.0;
    for (std::size_t t = 0; t < options_.oracle_trials; ++t) {
      const std::size_t width = pick(rng_, 1, 6);
      const Matrix q = random_matrix(pick(rng_, 1, 5), width, rng_);
      const Matrix k = random_matrix(pick(rng_, 1, 5), width, rng_);
      const Matrix v = random_matrix(k.rows(), pick(rng_, 1, 6), rng_);
      worst = std::max(worst, max_abs_difference(attention_forward(q, k, v),
                                                 reference::attention_forward(q, k, v)));
    }
    record("attention_forward", "max_abs_error", worst, kOracleTolerance,
           options_.oracle_trials);
  }

  // Swapping rows of the visual key set must not change the output.
  void qformer_check() {
    const std::size_t trials = std::max<std::size_t>(1, options_.oracle_trials / 10);
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t width = pick(rng_, 2, 6);
      const std::size_t visual = pick(rng_, 2, 6);
      const std::size_t n = pick(rng_, 1, 4);
      const QFormerParams p =
          QFormerParams::random(kDefaultQueryCount, width, visual, pick(rng_, 2, 8), rng_);
      const Matrix f1 = random_matrix(n, visual, rng_);
      const Matrix f2 = random_matrix(n, visual, rng_);
      const Matrix prompt = random_matrix(pick(rng_, 1, 4), width, rng_);
      const Matrix out = qformer_forward(f1, f2, prompt, p);
      if (out.rows() != kDefaultQueryCount || out.cols() != width) {
        worst = std::numeric_limits<double>::infinity();
        break;
      }
      // Exchange the two time steps and reverse the rows: a permutation of [F1; F2].
      Matrix r1 = f2;
      Matrix r2 = f1;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < visual; ++j) {
          r1(i, j) = f2(n - 1 - i, j);
          r2(i, j) = f1(n - 1 - i, j);
        }
      }
      worst = std::max(worst, max_abs_difference(out, qformer_forward(r1, r2, prompt, p)));
    }
    record("qformer_forward", "max_abs_error", worst, kOracleTolerance, trials);
  }

  void cross_entropy_check() {
    double worst = 0.0;
    for (std::size_t t = 0; t < options_.oracle_trials; ++t) {
      const Matrix probs =
          softmax_rows(random_matrix(pick(rng_, 1, 6), pick(rng_, 2, 8), rng_, -3.0, 3.0));
      std::vector<std::size_t> targets(probs.rows());
      for (auto& target : targets) target = pick(rng_, 0, probs.cols() - 1);
      worst = std::max(worst, std::abs(cross_entropy(probs, targets) -
                                       reference::cross_entropy(probs, targets)));
    }
    record("cross_entropy", "max_abs_error", worst, kOracleTolerance, options_.oracle_trials);
  }

  std::vector<CheckResult> take() { return std::move(results_); }

 private:
  static double range_violation(const CsrmOutput& out) {
    double v = 0.0;
    const auto& c = out.cache;
    for (const auto* pair : {&c.context_t1, &c.context_t2}) {
      for (double x : pair->data()) v = std::max(v, std::abs(x) >= 1.0 ? std::abs(x) : 0.0);
    }
    for (const auto* pair : {&c.gate_t1, &c.gate_t2}) {
      for (double x : pair->data()) {
        if (!(x > 0.0 && x < 1.0)) v = std::max(v, 1.0);
      }
    }
    const auto gated = [&](const Matrix& out_t, const Matrix& ctx) {
      for (std::size_t i = 0; i < out_t.size(); ++i) {
        v = std::max(v, std::abs(out_t.data()[i]) - std::abs(ctx.data()[i]));
      }
    };
    gated(out.out_t1, c.context_t1);
    gated(out.out_t2, c.context_t2);
    return v;
  }

  KernelCheckOptions options_;
  std::mt19937_64 rng_;
  std::vector<CheckResult> results_;
};

}  // namespace

bool KernelCheckSummary::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

Json KernelCheckSummary::to_json() const {
  Json by_op = Json::object();
  for (const CheckResult& c : checks) {
    by_op[c.op] = {{"measure", c.measure},
                   {"error", c.error},
                   {"tolerance", c.tolerance},
                   {"trials", c.trials},
                   {"pass", c.pass}};
  }
  return Json{{"seed", seed}, {"pass", all_pass()}, {"checks", by_op}};
}

KernelCheckSummary run_kernel_checks(const KernelCheckOptions& options) {
  Suite suite(options);
  suite.feature_diff_check();
  suite.csrm_forward_check();
  suite.gradient_check("csrm", kGradientTolerance, true);
  suite.softmax_check();
  suite.attention_check();
  suite.qformer_check();
  suite.cross_entropy_check();
  suite.gradient_check("softmax_cross_entropy", kGradientTolerance, false);
  suite.gradient_check("linear", kLinearTolerance, false);
  return {options.seed, suite.take()};
}

}  // namespace rsica::kernel
