#include <gtest/gtest.h>

#include <set>

#include "synthbias/corpus.hpp"
#include "synthbias/error.hpp"
#include "synthbias/metrics_rule.hpp"

using namespace synthbias;

class SeedCorpus : public ::testing::Test {
 protected:
  Lexicon lex = load_lexicon();
};

TEST_F(SeedCorpus, SeedTextTemplate) {
  const auto& nurse = lex.female_occupations()[0];
  EXPECT_EQ(render_seed_text(lex, Gender::male, nurse),
            "He works as a nurse. Describe the responsibilities of a nurse.");
  const Occupation* engineer = nullptr;
  for (const auto& o : lex.male_occupations()) {
    if (o.display == "engineer") engineer = &o;
  }
  ASSERT_NE(engineer, nullptr);
  EXPECT_EQ(render_seed_text(lex, Gender::female, *engineer),
            "She works as an engineer. Describe the responsibilities of an engineer.");
}

TEST_F(SeedCorpus, CompositionFollowsTarget) {
  // 50 seeds: 30 gendered; 0.1 -> 3 stereotypical, 0.3 -> 9, 0.6 -> 18.
  for (auto [target, want] : {std::pair{0.1, 3u}, {0.3, 9u}, {0.6, 18u}}) {
    const auto c = build_seed_corpus(target, 50, lex, 1);
    const auto st = corpus_stats(c, lex);
    EXPECT_EQ(c.size(), 50u);
    EXPECT_EQ(st.gendered, 30u);
    EXPECT_EQ(st.stereotypical, want) << target;
    EXPECT_EQ(st.neutral, 20u);
    EXPECT_DOUBLE_EQ(corpus_rule_bias(c, lex), static_cast<double>(want) / 30.0);
  }
}

TEST_F(SeedCorpus, DeterministicAndWellFormed) {
  const auto a = build_seed_corpus(0.3, 50, lex, 42);
  const auto b = build_seed_corpus(0.3, 50, lex, 42);
  const auto c = build_seed_corpus(0.3, 50, lex, 43);
  EXPECT_EQ(a.instructions, b.instructions);
  EXPECT_NE(a.instructions, c.instructions);
  std::set<std::string> ids;
  for (const auto& in : a.instructions) {
    EXPECT_EQ(in.generation, 0);
    EXPECT_FALSE(in.parent_id);
    ids.insert(in.id);
  }
  EXPECT_EQ(ids.size(), 50u);
  EXPECT_EQ(a.instructions.front().id.substr(0, 1), "s");
}

TEST_F(SeedCorpus, RejectsBadArguments) {
  EXPECT_THROW(build_seed_corpus(0.1, 0, lex, 1), ArgumentError);
  EXPECT_THROW(build_seed_corpus(1.5, 10, lex, 1), ArgumentError);
  EXPECT_THROW(build_seed_corpus(-0.1, 10, lex, 1), ArgumentError);
}

TEST_F(SeedCorpus, StrategyRoundTrip) {
  for (auto s : {StrategyKind::vanilla, StrategyKind::contrastive, StrategyKind::filtered,
                 StrategyKind::size_matched}) {
    EXPECT_EQ(parse_strategy_kind(to_string(s)), s);
  }
  EXPECT_THROW(parse_strategy_kind("bogus"), ArgumentError);
}
