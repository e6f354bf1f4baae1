#include <benchmark/benchmark.h>

#include "synthbias/corpus.hpp"
#include "synthbias/downstream.hpp"
#include "synthbias/embedding.hpp"
#include "synthbias/generation.hpp"
#include "synthbias/metrics_rule.hpp"
#include "synthbias/random.hpp"
#include "synthbias/statistics.hpp"
#include "synthbias/strategies.hpp"

using namespace synthbias;

namespace {

const Lexicon& lex() {
  static const Lexicon l = load_lexicon();
  return l;
}

Corpus gen1_corpus() {
  const auto seed = build_seed_corpus(0.3, 50, lex(), 1);
  Corpus c;
  c.generation = 1;
  c.instructions = fan_out(seed.instructions, GenParams{}, SimParams{}, lex());
  return c;
}

}  // namespace

static void BM_RuleScore(benchmark::State& state) {
  const auto corpus = gen1_corpus();
  for (auto _ : state) benchmark::DoNotOptimize(corpus_stats(corpus, lex()));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(corpus.size()));
}
BENCHMARK(BM_RuleScore);

static void BM_DeterministicEmbed(benchmark::State& state) {
  auto e = make_embedder(DeterministicEmbedderSpec{static_cast<std::size_t>(state.range(0)), "bench"});
  const auto corpus = gen1_corpus();
  std::vector<std::string> texts;
  for (const auto& in : corpus.instructions) texts.push_back(in.text);
  for (auto _ : state) benchmark::DoNotOptimize(e->embed_batch(texts));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(texts.size()));
}
BENCHMARK(BM_DeterministicEmbed)->Arg(384)->Arg(1536);

static void BM_TrainLogreg(benchmark::State& state) {
  Rng rng(1);
  std::vector<LabeledVector> data;
  for (int i = 0; i < state.range(0); ++i) {
    std::vector<double> raw(384);
    for (auto& v : raw) v = rng.uniform() - 0.5;
    data.push_back({EmbeddingVector::normalize(raw), i % 2, ""});
  }
  for (auto _ : state) benchmark::DoNotOptimize(train_logreg(data, {}));
}
BENCHMARK(BM_TrainLogreg)->Arg(250)->Arg(1250)->Unit(benchmark::kMillisecond);

static void BM_Permutation(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (auto& v : a) v = rng.bernoulli(0.3);
  for (auto& v : b) v = rng.bernoulli(0.35);
  for (auto _ : state) benchmark::DoNotOptimize(permutation_test(a, b, {5000, 3}));
}
BENCHMARK(BM_Permutation)->Arg(250)->Arg(6250)->Unit(benchmark::kMillisecond);

static void BM_SimulatedGeneration(benchmark::State& state) {
  const auto seed = build_seed_corpus(0.3, 50, lex(), 1);
  ExperimentConfig cfg;
  cfg.strategy.kind = static_cast<StrategyKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_generation_step(seed, cfg, lex()));
}
BENCHMARK(BM_SimulatedGeneration)->DenseRange(0, 3);

static void BM_GenderSwap(benchmark::State& state) {
  const auto corpus = gen1_corpus();
  for (auto _ : state) {
    for (const auto& in : corpus.instructions) benchmark::DoNotOptimize(gender_swap_text(in.text, lex()));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(corpus.size()));
}
BENCHMARK(BM_GenderSwap);

BENCHMARK_MAIN();
