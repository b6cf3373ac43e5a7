#include <benchmark/benchmark.h>

#include <random>

#include "rsica/changemap.hpp"

namespace {

// Scattered rectangles of both categories on an empty map.
rsica::ChangeMap blocky_map(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<rsica::CategoryId> labels(static_cast<std::size_t>(size) * size, 0);
  for (int k = 0; k < 40; ++k) {
    const int x0 = static_cast<int>(rng() % size), y0 = static_cast<int>(rng() % size);
    const int w = 1 + static_cast<int>(rng() % 24), h = 1 + static_cast<int>(rng() % 24);
    const auto cat = static_cast<rsica::CategoryId>(1 + rng() % 2);
    for (int y = y0; y < std::min(size, y0 + h); ++y) {
      for (int x = x0; x < std::min(size, x0 + w); ++x) labels[y * size + x] = cat;
    }
  }
  return rsica::ChangeMap(size, size, std::move(labels), rsica::default_categories());
}

void BM_CountByCategory(benchmark::State& state) {
  const rsica::ChangeMap map = blocky_map(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(rsica::count_by_category(map));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_CountByCategory)->Arg(256)->Arg(1024);

void BM_GridCells(benchmark::State& state) {
  const rsica::ChangeMap map = blocky_map(256, 2);
  for (auto _ : state) benchmark::DoNotOptimize(rsica::grid_cells(map, 1));
}
BENCHMARK(BM_GridCells);

void BM_AnalyzeChangeMap(benchmark::State& state) {
  const rsica::ChangeMap map = blocky_map(256, 3);
  for (auto _ : state) benchmark::DoNotOptimize(rsica::analyze_change_map(map, "bench"));
}
BENCHMARK(BM_AnalyzeChangeMap);

}  // namespace

BENCHMARK_MAIN();
