#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "synthbias/corpus.hpp"
#include "synthbias/downstream.hpp"
#include "synthbias/embedding.hpp"
#include "synthbias/generation.hpp"
#include "synthbias/lexicon.hpp"

namespace synthbias {

struct Strategy {
  StrategyKind kind = StrategyKind::vanilla;
  double filter_threshold = 0.4;  // used by `filtered` only

  void validate() const;
};

struct SeedCorpusSpec {
  double target_bias = 0.1;
  std::size_t size = 50;
  std::uint64_t rng_seed = 0;
};

struct ExperimentConfig {
  Strategy strategy;
  std::size_t generations = 3;
  GenParams gen_params;
  GeneratorKind generator = SimParams{};
  SeedCorpusSpec seed;
  double embed_margin = kDefaultEmbedMargin;
  std::optional<DownstreamOptions> downstream = DownstreamOptions{};
  std::uint64_t rng_seed = 0;  // size-matched padding stream

  void validate() const;
};

struct GenerationMetrics {
  int generation = 0;
  CorpusStats stats;
  std::optional<double> rule_bias;     // absent when no gendered instruction
  std::optional<double> embed_bias;
  std::vector<std::uint8_t> embed_flags;  // per instruction, corpus order
  std::optional<ProbeReport> downstream;  // absent when not requested or untrainable
};

struct Trajectory {
  StrategyKind strategy = StrategyKind::vanilla;
  double target_bias = 0.0;
  std::vector<Corpus> corpora;            // Gen-0 .. Gen-N
  std::vector<GenerationMetrics> metrics;  // parallel to corpora
};

// Fixed yardsticks shared by every generation of every strategy.
struct MetricContext {
  Embedder* embedder = nullptr;
  GenderPrototypes prototypes;
  std::vector<EmbeddingVector> probe;
};

MetricContext make_metric_context(const Lexicon& lexicon, Embedder& embedder);

// Counterfactual twin. Pronouns swap to their pair (a shared female form
// such as "her" becomes the first listed counterpart before punctuation or
// end of text, the last one otherwise). Occupations change only when the
// text has no pronouns: a bare occupation gains the counter-stereotypical
// qualifier ("nurse" -> "male nurse"), a counter-stereotypical qualifier is
// stripped, a stereotypical one is flipped. In pronoun text, qualifiers
// flip along with the pronouns. Case is preserved.
std::string gender_swap_text(std::string_view text, const Lexicon& lexicon);

// gender_swap_text plus augmented = true, strategy = contrastive.
Instruction gender_swap(const Instruction& instr, const Lexicon& lexicon);

// One recursive step: fan out every instruction, then apply the strategy.
Corpus run_generation_step(const Corpus& corpus, const ExperimentConfig& config,
                           const Lexicon& lexicon);

GenerationMetrics compute_generation_metrics(const Corpus& corpus, const ExperimentConfig& config,
                                             const Lexicon& lexicon, const MetricContext& ctx);

// Persistence hooks for resumable runs. `load(g)` returns a previously
// completed generation; `save` is called once per newly completed one.
struct ExperimentHooks {
  std::function<std::optional<std::pair<Corpus, GenerationMetrics>>(int generation)> load;
  std::function<void(const Corpus&, const GenerationMetrics&)> save;
  // Stop after this generation is complete (used to exercise resumption).
  std::optional<int> stop_after_generation;
};

// Seed corpus, then `generations` steps with metrics after each. Errors
// from generation or strategy steps are rethrown with the generation index
// in the message.
Trajectory run_experiment(const ExperimentConfig& config, const Lexicon& lexicon,
                          const MetricContext& ctx, const ExperimentHooks& hooks = {});

}  // namespace synthbias
