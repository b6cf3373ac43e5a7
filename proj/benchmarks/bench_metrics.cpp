#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "rsica/metrics.hpp"

namespace {

const std::vector<std::string> kWords = {"a",     "road",  "building", "new",   "is",
                                         "built", "the",   "left",     "right", "top",
                                         "of",    "scene", "appears",  "near",  "river"};

rsica::TokenSeq sentence(std::mt19937_64& rng) {
  rsica::TokenSeq s(6 + rng() % 10);
  for (auto& w : s) w = kWords[rng() % kWords.size()];
  return s;
}

void BM_Bleu(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const rsica::TokenSeq cand = sentence(rng);
  std::vector<rsica::TokenSeq> refs;
  for (int i = 0; i < 5; ++i) refs.push_back(sentence(rng));
  for (auto _ : state) benchmark::DoNotOptimize(rsica::bleu(cand, refs));
}
BENCHMARK(BM_Bleu);

void BM_Meteor(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const rsica::TokenSeq cand = sentence(rng);
  std::vector<rsica::TokenSeq> refs;
  for (int i = 0; i < 5; ++i) refs.push_back(sentence(rng));
  for (auto _ : state) benchmark::DoNotOptimize(rsica::meteor(cand, refs));
}
BENCHMARK(BM_Meteor);

void BM_CiderCorpus(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::map<std::string, rsica::TokenSeq> cands;
  std::map<std::string, std::vector<rsica::TokenSeq>> refs;
  for (int i = 0; i < state.range(0); ++i) {
    const std::string id = "p" + std::to_string(i);
    cands[id] = sentence(rng);
    for (int r = 0; r < 5; ++r) refs[id].push_back(sentence(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(rsica::cider_d(cands, refs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CiderCorpus)->Arg(100)->Arg(1000);

void BM_ParseQuantAnswer(benchmark::State& state) {
  const std::vector<std::string> cats = {"road", "building"};
  const std::string text = "There are 3 roads and twelve buildings that changed.";
  for (auto _ : state) benchmark::DoNotOptimize(rsica::parse_quant_answer(text, cats));
}
BENCHMARK(BM_ParseQuantAnswer);

}  // namespace

BENCHMARK_MAIN();
