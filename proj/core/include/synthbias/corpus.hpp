#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synthbias/lexicon.hpp"

namespace synthbias {

enum class StrategyKind { vanilla, contrastive, filtered, size_matched };

std::string_view to_string(StrategyKind s);
// Throws ArgumentError on unknown names.
StrategyKind parse_strategy_kind(std::string_view name);

struct Instruction {
  std::string id;
  std::string text;
  int generation = 0;
  std::optional<std::string> parent_id;  // absent exactly at generation 0
  StrategyKind strategy = StrategyKind::vanilla;
  bool augmented = false;                // produced by gender_swap

  bool operator==(const Instruction&) const = default;
};

// Instructions of one generation, in deterministic order.
struct Corpus {
  std::vector<Instruction> instructions;
  int generation = 0;
  double target_bias = 0.0;  // the seed target this lineage was built from

  std::size_t size() const { return instructions.size(); }
  bool empty() const { return instructions.empty(); }

  // "0.1", "0.3", "0.6" for the standard levels, "custom" otherwise.
  std::string bias_level_tag() const;
};

struct CorpusStats {
  std::size_t total = 0;
  std::size_t gendered = 0;
  std::size_t stereotypical = 0;
  std::size_t anti_stereotypical = 0;
  std::size_t neutral = 0;

  bool operator==(const CorpusStats&) const = default;
};

// Fraction of seed slots that carry a pronoun-occupation pairing.
inline constexpr double kSeedGenderedFraction = 0.6;

// "{Pronoun} works as {a|an} {occupation}. Describe the responsibilities of
// {a|an} {occupation}."
std::string render_seed_text(const Lexicon& lexicon, Gender pronoun,
                             const Occupation& occupation);

// Builds a generation-0 corpus. round(0.6 * size) slots are gendered; of
// those, round(gendered * target_bias) (ties to even) pair a pronoun with a
// same-gender occupation and the rest with an opposite-gender one. Pronoun
// gender is drawn per slot; the remaining slots cycle through a shuffled
// copy of the neutral prompts. Deterministic in rng_seed.
Corpus build_seed_corpus(double target_bias, std::size_t size, const Lexicon& lexicon,
                         std::uint64_t rng_seed,
                         StrategyKind strategy = StrategyKind::vanilla);

// Rule-metric bookkeeping: an instruction is gendered when it yields at least one
// pronoun-occupation pair and stereotypical when most of its pairs are.
CorpusStats corpus_stats(const Corpus& corpus, const Lexicon& lexicon);

}  // namespace synthbias
