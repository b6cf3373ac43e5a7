#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rsica::kernel {

// Scalar function of a flat parameter vector with its analytic gradient.
// `value` is evaluated in extended precision so that central differences
// resolve small gradient entries.
struct Differentiable {
  std::size_t dimension = 0;
  std::function<long double(std::span<const long double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

// Central differences per coordinate; returns the largest
// |a - n| / max(|a|, |n|, 1e-8). Throws InvalidArgument for epsilon <= 0
// or a point of the wrong dimension.
double grad_check(const Differentiable& f, std::span<const double> point, double epsilon);

// Registered ops:
//   "linear"                 r . (W x), W: rows x cols
//   "csrm"                   R1 . F'1 + R2 . F'2 over (F1, F2, all parameters)
//   "softmax_cross_entropy"  cross-entropy of softmax(logits), logits: rows x cols
// `seed` fixes the op's constants (W, r, probe matrices R, targets).
struct OpSpec {
  std::string name;
  std::size_t rows = 2;
  std::size_t cols = 3;
  std::uint64_t seed = 0;
};

std::vector<std::string> registered_ops();

// Throws InvalidArgument for an unregistered name or zero shape.
Differentiable make_op(const OpSpec& spec);

std::vector<double> random_point(const Differentiable& f, std::mt19937_64& rng,
                                 double lo = -1.0, double hi = 1.0);

double grad_check(const OpSpec& spec, std::span<const double> point, double epsilon);

}  // namespace rsica::kernel
