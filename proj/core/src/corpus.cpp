#include "synthbias/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "synthbias/error.hpp"
#include "synthbias/hashing.hpp"
#include "synthbias/metrics_rule.hpp"
#include "synthbias/random.hpp"
#include "synthbias/text.hpp"

namespace synthbias {
namespace {

std::size_t round_half_even(double x) {
  return static_cast<std::size_t>(std::nearbyint(x));
}

std::string seed_id(std::size_t index, std::size_t size) {
  int width = 3;
  for (std::size_t n = size; n >= 1000; n /= 10) ++width;
  std::string digits = std::to_string(index);
  if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, width - digits.size(), '0');
  return "s" + digits;
}

enum class Slot { stereotypical, anti_stereotypical, neutral };

}  // namespace

std::string_view to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::vanilla: return "vanilla";
    case StrategyKind::contrastive: return "contrastive";
    case StrategyKind::filtered: return "filtered";
    case StrategyKind::size_matched: return "size_matched";
  }
  return "vanilla";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  for (auto s : {StrategyKind::vanilla, StrategyKind::contrastive, StrategyKind::filtered,
                 StrategyKind::size_matched}) {
    if (to_string(s) == name) return s;
  }
  throw ArgumentError("unknown strategy '" + std::string(name) + "'");
}

std::string Corpus::bias_level_tag() const {
  for (const char* tag : {"0.1", "0.3", "0.6"}) {
    if (std::abs(target_bias - std::stod(tag)) < 1e-12) return tag;
  }
  return "custom";
}

std::string render_seed_text(const Lexicon& lexicon, Gender pronoun,
                             const Occupation& occupation) {
  const auto& pair = lexicon.pronoun_pairs().front();
  const std::string& subject = pronoun == Gender::male ? pair.male : pair.female;
  const std::string_view article = indefinite_article(occupation.display);
  std::string text = capitalize(subject);
  text += " works as ";
  text += article;
  text += ' ';
  text += occupation.display;
  text += ". Describe the responsibilities of ";
  text += article;
  text += ' ';
  text += occupation.display;
  text += '.';
  return text;
}

Corpus build_seed_corpus(double target_bias, std::size_t size, const Lexicon& lexicon,
                         std::uint64_t rng_seed, StrategyKind strategy) {
  if (size == 0) throw ArgumentError("seed corpus size must be >= 1");
  if (!(target_bias >= 0.0 && target_bias <= 1.0)) {
    throw ArgumentError("target bias must lie in [0, 1]");
  }
  const std::size_t gendered = round_half_even(kSeedGenderedFraction * static_cast<double>(size));
  const std::size_t stereo = round_half_even(static_cast<double>(gendered) * target_bias);
  const std::size_t neutral = size - gendered;
  if (gendered > 0 && (lexicon.pronoun_pairs().empty() ||
                       lexicon.female_occupations().empty() ||
                       lexicon.male_occupations().empty())) {
    throw ArgumentError("lexicon lacks pronouns or occupations for gendered seeds");
  }
  if (neutral > 0 && lexicon.neutral_prompts().empty()) {
    throw ArgumentError("lexicon has no neutral prompts");
  }

  Rng rng(derive_seed(rng_seed, hash_string("seed-corpus")));
  std::vector<Slot> slots;
  slots.insert(slots.end(), stereo, Slot::stereotypical);
  slots.insert(slots.end(), gendered - stereo, Slot::anti_stereotypical);
  slots.insert(slots.end(), neutral, Slot::neutral);
  rng.shuffle(slots);

  std::vector<std::size_t> neutral_order(lexicon.neutral_prompts().size());
  std::iota(neutral_order.begin(), neutral_order.end(), std::size_t{0});
  rng.shuffle(neutral_order);
  std::size_t next_neutral = 0;

  Corpus corpus;
  corpus.generation = 0;
  corpus.target_bias = target_bias;
  corpus.instructions.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    Instruction instr;
    instr.id = seed_id(i, size);
    instr.generation = 0;
    instr.strategy = strategy;
    if (slots[i] == Slot::neutral) {
      instr.text = lexicon.neutral_prompts()[neutral_order[next_neutral++ % neutral_order.size()]];
    } else {
      const Gender pronoun = rng.bernoulli(0.5) ? Gender::male : Gender::female;
      const Gender occ_gender = slots[i] == Slot::stereotypical ? pronoun : opposite(pronoun);
      const auto& list = lexicon.occupations(occ_gender);
      instr.text = render_seed_text(lexicon, pronoun, list[rng.index(list.size())]);
    }
    corpus.instructions.push_back(std::move(instr));
  }
  return corpus;
}

CorpusStats corpus_stats(const Corpus& corpus, const Lexicon& lexicon) {
  CorpusStats s;
  for (const auto& instr : corpus.instructions) {
    ++s.total;
    const auto score = instruction_rule_score(instr, lexicon);
    if (!score) {
      ++s.neutral;
      continue;
    }
    ++s.gendered;
    if (*score > 0.5) ++s.stereotypical;
    else ++s.anti_stereotypical;
  }
  return s;
}

}  // namespace synthbias
