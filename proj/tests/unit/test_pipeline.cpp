#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "synthbias/config.hpp"
#include "synthbias/error.hpp"
#include "synthbias/pipeline.hpp"
#include "synthbias/report.hpp"
#include "synthbias/run_store.hpp"

using namespace synthbias;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("synthbias_pipeline_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

GridConfig tiny_config() {
  GridConfig c;
  c.strategies = {StrategyKind::vanilla, StrategyKind::contrastive};
  c.bias_levels = {0.1, 0.6};
  c.seed_corpus_size = 8;
  c.generations = 2;
  c.stats_iterations = 200;
  return c;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST(Config, DefaultsParseAndHash) {
  const auto c = parse_grid_config("{}");
  EXPECT_EQ(c.hash(), GridConfig{}.hash());
  EXPECT_EQ(c.hash().size(), 64u);
  const auto d = parse_grid_config(R"({"seed": 8})");
  EXPECT_NE(d.hash(), c.hash());
  EXPECT_EQ(parse_grid_config(c.canonical_json()).hash(), c.hash());
}

TEST(Config, FullDocument) {
  const auto c = parse_grid_config(R"({
    "name": "t", "seed": 3, "strategies": ["vanilla", "filtered"], "bias_levels": [0.2],
    "seed_corpus_size": 12, "generations": 1,
    "generation": {"temperature": 0.5, "children_per_parent": 2},
    "generator": {"kind": "simulated", "inherent_bias": 0.2, "neutral_parent": "midpoint"},
    "embedder": {"kind": "deterministic_test", "dimension": 64},
    "thresholds": {"embed_margin": 0.2, "filter_threshold": 0.5},
    "downstream": {"enabled": false},
    "statistics": {"iterations": 100, "alpha": 0.1}
  })");
  EXPECT_EQ(c.strategies.size(), 2u);
  EXPECT_EQ(c.gen_params.children_per_parent, 2u);
  EXPECT_EQ(std::get<SimParams>(c.generator).neutral_parent, NeutralParentState::midpoint);
  EXPECT_EQ(std::get<DeterministicEmbedderSpec>(c.embedder).dimension, 64u);
  EXPECT_FALSE(c.downstream);
  EXPECT_DOUBLE_EQ(c.cell(StrategyKind::filtered, 0).strategy.filter_threshold, 0.5);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_grid_config(R"({"sede": 1})"), ConfigError);
  EXPECT_THROW(parse_grid_config("{\n\"seed\": ,\n}"), ConfigError);
  EXPECT_THROW(parse_grid_config(R"({"strategies": ["greedy"]})"), ConfigError);
  EXPECT_THROW(parse_grid_config(R"({"bias_levels": [1.5]})"), ConfigError);
  EXPECT_THROW(parse_grid_config(R"({"generations": 0})"), ConfigError);
  EXPECT_THROW(parse_grid_config(R"({"generator": {"kind": "remote"}})"), ConfigError);
}

TEST(Config, CellsShareSeedsAcrossStrategies) {
  const GridConfig c;
  const auto a = c.cell(StrategyKind::vanilla, 1);
  const auto b = c.cell(StrategyKind::contrastive, 1);
  EXPECT_EQ(a.seed.rng_seed, b.seed.rng_seed);
  EXPECT_DOUBLE_EQ(a.seed.target_bias, 0.3);
  EXPECT_NE(a.seed.rng_seed, c.cell(StrategyKind::vanilla, 0).seed.rng_seed);
}

TEST(RunStore, CorpusAndMetricsRoundTrip) {
  const auto lex = load_lexicon();
  const auto corpus = build_seed_corpus(0.3, 20, lex, 5, StrategyKind::filtered);
  const auto back = corpus_from_jsonl(corpus_to_jsonl(corpus), 0, 0.3);
  EXPECT_EQ(back.instructions, corpus.instructions);
  EXPECT_THROW(corpus_from_jsonl("{\"id\": 1}\n", 0, 0.3), ParseError);

  GenerationMetrics m;
  m.generation = 2;
  m.stats = corpus_stats(corpus, lex);
  m.rule_bias = 0.25;
  m.embed_bias = 0.5;
  m.embed_flags = {0, 1, 0, 1};
  ProbeReport pr;
  pr.bias_down = 0.125;
  pr.accuracy = 0.75;
  pr.probe_size = 20;
  m.downstream = pr;
  const auto m2 = metrics_from_json(metrics_to_json(m));
  EXPECT_EQ(m2.stats, m.stats);
  EXPECT_EQ(m2.rule_bias, m.rule_bias);
  EXPECT_EQ(m2.embed_flags, m.embed_flags);
  ASSERT_TRUE(m2.downstream);
  EXPECT_EQ(m2.downstream->bias_down, 0.125);
  EXPECT_EQ(metrics_to_json(m2), metrics_to_json(m));
}

TEST(RunStore, HashMismatchAndUnknownRun) {
  TempDir dir;
  RunStore store(dir.path());
  const auto lex = load_lexicon();
  const auto cfg = tiny_config();
  const auto m = store.open_run("r1", cfg, lex);
  EXPECT_EQ(m.config_hash, cfg.hash());
  EXPECT_EQ(store.open_run("r1", cfg, lex).config_hash, cfg.hash());
  auto other = cfg;
  other.seed = 99;
  EXPECT_THROW(store.open_run("r1", other, lex), ConfigError);
  EXPECT_THROW(store.manifest("nope"), DataError);
  EXPECT_EQ(store.config("r1").hash(), cfg.hash());
  EXPECT_EQ(default_run_id(cfg.hash()), "run-" + cfg.hash().substr(0, 12));
}

TEST(Pipeline, RunResumeReportStats) {
  TempDir dir;
  const auto cfg = tiny_config();
  RunOptions opts;
  opts.store_root = dir.path();
  opts.stop_after_generation = 1;
  const auto partial = run_grid(cfg, opts);
  EXPECT_FALSE(partial.complete);
  EXPECT_EQ(partial.generations_computed, 8u);

  opts.stop_after_generation.reset();
  const auto full = run_grid(cfg, opts);
  EXPECT_TRUE(full.complete);
  EXPECT_EQ(full.cells, 4u);
  EXPECT_EQ(full.generations_computed, 4u);
  EXPECT_EQ(run_grid(cfg, opts).generations_computed, 0u);

  RunStore store(dir.path());
  const auto stats = run_stats(store, full.run_id);
  ASSERT_EQ(stats.contrasts.size(), 1u);
  EXPECT_EQ(stats.contrasts[0].strategy, StrategyKind::contrastive);
  EXPECT_GT(stats.contrasts[0].test.p_value, 0.0);
  EXPECT_TRUE(store.load_stats(full.run_id));

  const auto bundle = build_report(store, full.run_id);
  EXPECT_EQ(bundle.final_generation, 2);
  EXPECT_EQ(bundle.trajectory.size(), 2u * 2u * 3u);
  ASSERT_EQ(bundle.reductions.size(), 1u);
  EXPECT_EQ(bundle.reductions[0].strategy, StrategyKind::contrastive);
  EXPECT_EQ(bundle.effects.size(), 2u * 2u * 2u);

  const fs::path out = dir.path() / "csv";
  const auto files = write_csv(bundle, out);
  EXPECT_TRUE(fs::exists(out / "trajectory.csv"));
  EXPECT_EQ(count_lines(out / "trajectory.csv"), 1u + 12u);
  EXPECT_TRUE(fs::exists(out / "stats.csv"));
  const auto plots = write_plotdata(bundle, dir.path() / "plot");
  EXPECT_TRUE(fs::exists(dir.path() / "plot" / "fig3_heatmap.csv"));
  EXPECT_FALSE(plots.empty());
}

TEST(Pipeline, EmptyRunHasNoData) {
  TempDir dir;
  RunStore store(dir.path());
  store.open_run("empty", tiny_config(), load_lexicon());
  EXPECT_THROW(build_report(store, "empty"), DataError);
  EXPECT_THROW(run_stats(store, "empty"), DataError);
}

TEST(Report, ReductionPercent) {
  EXPECT_NEAR(reduction_percent(0.424, 0.005), -98.8, 0.05);
  EXPECT_NEAR(reduction_percent(0.140, 0.009), -93.6, 0.05);
  EXPECT_NEAR(reduction_percent(0.057, 0.039), -31.6, 0.05);
  EXPECT_NEAR(reduction_percent(0.207, 0.018), -91.3, 0.05);
  EXPECT_NEAR(reduction_percent(0.207, 0.219), 5.8, 0.05);
  EXPECT_THROW(reduction_percent(0.0, 0.1), ArgumentError);
}
