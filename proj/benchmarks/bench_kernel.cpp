#include <benchmark/benchmark.h>

#include <random>

#include "rsica/kernel/attention.hpp"
#include "rsica/kernel/csrm.hpp"
#include "rsica/kernel/grad_check.hpp"
#include "rsica/kernel/matrix.hpp"

namespace {

using namespace rsica::kernel;

void BM_CsrmForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(1);
  const Matrix f1 = random_matrix(n, d, rng), f2 = random_matrix(n, d, rng);
  const CsrmParams p = CsrmParams::random(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(csrm_forward(f1, f2, p));
}
BENCHMARK(BM_CsrmForward)->Args({16, 64})->Args({256, 64})->Args({256, 256});

void BM_CsrmBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 rng(2);
  const CsrmParams p = CsrmParams::random(d, rng);
  const CsrmOutput out = csrm_forward(random_matrix(n, d, rng), random_matrix(n, d, rng), p);
  const Matrix r1 = random_matrix(n, d, rng), r2 = random_matrix(n, d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(csrm_backward(out.cache, r1, r2));
}
BENCHMARK(BM_CsrmBackward)->Args({16, 64})->Args({256, 64});

void BM_QFormerForward(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const QFormerParams p = QFormerParams::random(kDefaultQueryCount, 64, 64, 128, rng);
  const Matrix f1 = random_matrix(256, 64, rng), f2 = random_matrix(256, 64, rng);
  const Matrix prompt = random_matrix(8, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(qformer_forward(f1, f2, prompt, p));
}
BENCHMARK(BM_QFormerForward);

void BM_GradCheckCsrm(benchmark::State& state) {
  const Differentiable f = make_op({"csrm", 3, 5, 1});
  std::mt19937_64 rng(4);
  const auto point = random_point(f, rng);
  for (auto _ : state) benchmark::DoNotOptimize(grad_check(f, point, 1e-6));
}
BENCHMARK(BM_GradCheckCsrm);

}  // namespace

BENCHMARK_MAIN();
