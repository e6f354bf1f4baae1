#include "synthbias/strategies.hpp"

#include <algorithm>
#include <cctype>

#include "synthbias/error.hpp"
#include "synthbias/hashing.hpp"
#include "synthbias/metrics_rule.hpp"
#include "synthbias/random.hpp"
#include "synthbias/text.hpp"

namespace synthbias {
namespace {

struct Edit {
  std::size_t begin;
  std::size_t end;
  std::string replacement;
};

bool sentence_initial(std::string_view text, std::size_t pos) {
  while (pos > 0) {
    const char c = text[pos - 1];
    if (c == ' ' || c == '\t' || c == '\n' || c == '"' || c == '\'') {
      --pos;
      continue;
    }
    return c == '.' || c == '!' || c == '?';
  }
  return true;
}

bool followed_by_word(std::string_view text, std::size_t pos) {
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  return pos < text.size() && std::isalnum(static_cast<unsigned char>(text[pos]));
}

bool is_capitalized_word(std::string_view w) {
  if (w.empty() || !std::isupper(static_cast<unsigned char>(w[0]))) return false;
  return std::none_of(w.begin() + 1, w.end(),
                      [](char c) { return std::isupper(static_cast<unsigned char>(c)); });
}

// When an indefinite article sits right before token `at`, re-derive it for
// the word that will follow it after the edit ("an engineer" -> "a female
// engineer" and back).
void fix_article(std::string_view text, const TermScan& scan, std::size_t at,
                 std::string_view next_word, std::vector<Edit>& edits) {
  if (at == 0) return;
  const Token& art = scan.tokens[at - 1];
  if (art.lower != "a" && art.lower != "an") return;
  for (std::size_t i = art.end; i < scan.tokens[at].begin; ++i) {
    if (text[i] != ' ' && text[i] != '\t') return;
  }
  const std::string_view want = indefinite_article(next_word);
  if (want == art.lower) return;
  edits.push_back({art.begin, art.end, match_case(text.substr(art.begin, art.end - art.begin), want)});
}

template <typename Exc>
[[noreturn]] void rethrow_at(const Exc& e, int generation);

template <>
[[noreturn]] void rethrow_at(const GenerationError& e, int generation) {
  throw GenerationError("generation " + std::to_string(generation) + ": " + e.what(),
                        e.http_status());
}

template <>
[[noreturn]] void rethrow_at(const StrategyError& e, int generation) {
  throw StrategyError("generation " + std::to_string(generation) + ": " + e.what());
}

}  // namespace

void Strategy::validate() const {
  if (kind == StrategyKind::filtered && !(filter_threshold > 0.0 && filter_threshold < 1.0)) {
    throw ArgumentError("filter threshold must lie in (0, 1)");
  }
}

void ExperimentConfig::validate() const {
  strategy.validate();
  if (generations < 1) throw ArgumentError("generations must be >= 1");
  gen_params.validate();
  if (const auto* sim = std::get_if<SimParams>(&generator)) sim->validate();
  else std::get<RemoteGenerator>(generator).validate();
  if (seed.size < 1) throw ArgumentError("seed corpus size must be >= 1");
  if (!(seed.target_bias >= 0.0 && seed.target_bias <= 1.0)) {
    throw ArgumentError("target bias must lie in [0, 1]");
  }
  if (!(embed_margin >= 0.0)) throw ArgumentError("embed margin must be >= 0");
}

MetricContext make_metric_context(const Lexicon& lexicon, Embedder& embedder) {
  MetricContext ctx;
  ctx.embedder = &embedder;
  ctx.prototypes = compute_prototypes(lexicon, embedder);
  ctx.probe = neutral_probe(lexicon, embedder);
  return ctx;
}

std::string gender_swap_text(std::string_view text, const Lexicon& lexicon) {
  const TermScan scan = scan_terms(text, lexicon);
  const bool has_pronoun = !scan.pronouns.empty();
  std::vector<Edit> edits;

  for (const auto& p : scan.pronouns) {
    const Token& tok = scan.tokens[p.token];
    const auto options = lexicon.counterparts(tok.lower);
    std::string_view chosen = options.front();
    if (options.size() > 1) {
      chosen = followed_by_word(text, tok.end) ? options.back() : options.front();
    }
    edits.push_back({tok.begin, tok.end,
                     match_case(text.substr(tok.begin, tok.end - tok.begin), chosen)});
  }

  for (const auto& occ : scan.occupations) {
    const Token& first = scan.tokens[occ.first_token];
    if (occ.qualifier_token) {
      const Token& q = scan.tokens[*occ.qualifier_token];
      const std::string_view q_text = text.substr(q.begin, q.end - q.begin);
      const bool counter = *occ.qualifier_gender != occ.occupation->gender;
      if (has_pronoun || !counter) {
        edits.push_back({q.begin, q.end,
                         match_case(q_text, lexicon.qualifier(opposite(*occ.qualifier_gender)))});
      } else {
        // Strip "male " and hand a leading capital back to the occupation.
        edits.push_back({q.begin, first.begin, ""});
        fix_article(text, scan, *occ.qualifier_token, first.lower, edits);
        if (std::isupper(static_cast<unsigned char>(q_text[0])) &&
            std::islower(static_cast<unsigned char>(text[first.begin]))) {
          edits.push_back({first.begin, first.begin + 1,
                           std::string(1, static_cast<char>(std::toupper(
                                              static_cast<unsigned char>(text[first.begin]))))});
        }
      }
      continue;
    }
    if (has_pronoun) continue;
    std::string qualifier = lexicon.qualifier(opposite(occ.occupation->gender));
    fix_article(text, scan, occ.first_token, qualifier, edits);
    const std::string_view word = text.substr(first.begin, first.end - first.begin);
    if (sentence_initial(text, first.begin) && is_capitalized_word(word)) {
      qualifier = capitalize(qualifier);
      edits.push_back({first.begin, first.begin + 1,
                       std::string(1, static_cast<char>(std::tolower(
                                          static_cast<unsigned char>(word[0]))))});
      edits.back().replacement.insert(0, qualifier + " ");
    } else {
      edits.push_back({first.begin, first.begin, qualifier + " "});
    }
  }

  std::sort(edits.begin(), edits.end(),
            [](const Edit& x, const Edit& y) { return x.begin > y.begin; });
  std::string out(text);
  for (const auto& e : edits) out.replace(e.begin, e.end - e.begin, e.replacement);
  return out;
}

Instruction gender_swap(const Instruction& instr, const Lexicon& lexicon) {
  Instruction twin = instr;
  twin.text = gender_swap_text(instr.text, lexicon);
  twin.augmented = true;
  twin.strategy = StrategyKind::contrastive;
  return twin;
}

Corpus run_generation_step(const Corpus& corpus, const ExperimentConfig& config,
                           const Lexicon& lexicon) {
  if (corpus.empty()) throw ArgumentError("cannot step an empty corpus");
  std::vector<Instruction> children =
      fan_out(corpus.instructions, config.gen_params, config.generator, lexicon);
  for (auto& c : children) c.strategy = config.strategy.kind;

  Corpus next;
  next.generation = corpus.generation + 1;
  next.target_bias = corpus.target_bias;

  switch (config.strategy.kind) {
    case StrategyKind::vanilla:
      next.instructions = std::move(children);
      break;

    case StrategyKind::contrastive: {
      std::vector<Instruction> twins;
      for (const auto& c : children) {
        if (gender_association(c.text, lexicon) == Association::none) continue;
        Instruction twin = gender_swap(c, lexicon);
        twin.id = c.id + "~x";
        twins.push_back(std::move(twin));
      }
      next.instructions = std::move(children);
      next.instructions.insert(next.instructions.end(), std::make_move_iterator(twins.begin()),
                               std::make_move_iterator(twins.end()));
      break;
    }

    case StrategyKind::filtered:
      for (auto& c : children) {
        const auto score = instruction_rule_score(c, lexicon);
        if (!score || *score <= config.strategy.filter_threshold) {
          next.instructions.push_back(std::move(c));
        }
      }
      if (next.instructions.empty()) throw StrategyError("empty corpus after filtering");
      break;

    case StrategyKind::size_matched: {
      if (lexicon.neutral_prompts().empty()) {
        throw StrategyError("size-matched padding needs neutral prompts");
      }
      Rng rng(derive_seed(config.rng_seed, hash_string("size_matched"),
                          static_cast<std::uint64_t>(next.generation)));
      std::vector<Instruction> pads;
      for (const auto& c : children) {
        if (gender_association(c.text, lexicon) == Association::none) continue;
        Instruction pad = c;
        pad.id = c.id + "~n";
        pad.text = lexicon.neutral_prompts()[rng.index(lexicon.neutral_prompts().size())];
        pads.push_back(std::move(pad));
      }
      next.instructions = std::move(children);
      next.instructions.insert(next.instructions.end(), std::make_move_iterator(pads.begin()),
                               std::make_move_iterator(pads.end()));
      break;
    }
  }
  return next;
}

GenerationMetrics compute_generation_metrics(const Corpus& corpus, const ExperimentConfig& config,
                                             const Lexicon& lexicon, const MetricContext& ctx) {
  GenerationMetrics m;
  m.generation = corpus.generation;
  m.stats = corpus_stats(corpus, lexicon);
  if (m.stats.gendered > 0) {
    m.rule_bias = static_cast<double>(m.stats.stereotypical) / static_cast<double>(m.stats.gendered);
  }
  if (!corpus.empty()) {
    m.embed_flags = embed_bias_flags(corpus, ctx.prototypes, *ctx.embedder, config.embed_margin);
    std::size_t hits = 0;
    for (auto f : m.embed_flags) hits += f;
    m.embed_bias = static_cast<double>(hits) / static_cast<double>(m.embed_flags.size());
  }
  if (config.downstream) {
    try {
      m.downstream = evaluate_downstream(corpus, lexicon, *ctx.embedder, ctx.probe, *config.downstream);
    } catch (const TrainingDataError&) {
      m.downstream.reset();
    }
  }
  return m;
}

Trajectory run_experiment(const ExperimentConfig& config, const Lexicon& lexicon,
                          const MetricContext& ctx, const ExperimentHooks& hooks) {
  config.validate();
  Trajectory t;
  t.strategy = config.strategy.kind;
  t.target_bias = config.seed.target_bias;

  auto finish = [&](Corpus corpus, GenerationMetrics metrics, bool fresh) {
    if (fresh && hooks.save) hooks.save(corpus, metrics);
    t.corpora.push_back(std::move(corpus));
    t.metrics.push_back(std::move(metrics));
  };
  auto try_load = [&](int g) -> bool {
    if (!hooks.load) return false;
    auto done = hooks.load(g);
    if (!done) return false;
    finish(std::move(done->first), std::move(done->second), false);
    return true;
  };
  auto should_stop = [&](int g) {
    return hooks.stop_after_generation && g >= *hooks.stop_after_generation;
  };

  if (!try_load(0)) {
    Corpus seed = build_seed_corpus(config.seed.target_bias, config.seed.size, lexicon,
                                    config.seed.rng_seed, config.strategy.kind);
    auto metrics = compute_generation_metrics(seed, config, lexicon, ctx);
    finish(std::move(seed), std::move(metrics), true);
  }
  if (should_stop(0)) return t;

  for (int g = 1; g <= static_cast<int>(config.generations); ++g) {
    if (try_load(g)) {
      if (should_stop(g)) return t;
      continue;
    }
    Corpus next;
    try {
      next = run_generation_step(t.corpora.back(), config, lexicon);
    } catch (const GenerationError& e) {
      rethrow_at(e, g);
    } catch (const StrategyError& e) {
      rethrow_at(e, g);
    }
    auto metrics = compute_generation_metrics(next, config, lexicon, ctx);
    finish(std::move(next), std::move(metrics), true);
    if (should_stop(g)) return t;
  }
  return t;
}

}  // namespace synthbias
