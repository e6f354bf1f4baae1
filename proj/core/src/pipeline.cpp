#include "synthbias/pipeline.hpp"

#include <numeric>

#include "synthbias/error.hpp"
#include "synthbias/hashing.hpp"
#include "synthbias/statistics.hpp"
#include "synthbias/strategies.hpp"

namespace synthbias {

RunSummary run_grid(const GridConfig& config, const RunOptions& options) {
  config.validate();
  const auto lexicon = load_lexicon(
      config.lexicon ? std::optional<std::filesystem::path>(options.config_dir / *config.lexicon)
                     : std::nullopt);

  RunStore store(options.store_root);
  RunSummary summary;
  summary.run_id = options.run_id.value_or(default_run_id(config.hash()));
  store.open_run(summary.run_id, config, lexicon);
  store.log_event(summary.run_id, "run_start", config.name);

  auto inner = make_embedder(config.embedder);
  std::optional<EmbeddingCache> cache;
  if (config.embedding_cache) cache.emplace(store.embedding_cache_file(inner->identity()));
  else cache.emplace();
  CachingEmbedder embedder(*inner, *cache);
  const auto ctx = make_metric_context(lexicon, embedder);

  auto say = [&](const std::string& msg) {
    if (options.progress) options.progress(msg);
  };

  bool complete = true;
  for (std::size_t level = 0; level < config.bias_levels.size(); ++level) {
    for (auto strategy : config.strategies) {
      const CellKey key{strategy, config.bias_levels[level]};
      const auto cell = config.cell(strategy, level);
      ExperimentHooks hooks;
      hooks.load = [&](int g) { return store.load_generation(summary.run_id, key, g); };
      hooks.save = [&](const Corpus& corpus, const GenerationMetrics& m) {
        store.save_generation(summary.run_id, key, corpus, m);
        store.log_event(summary.run_id, "generation_complete",
                        key.dir_name() + "/gen_" + std::to_string(m.generation));
        ++summary.generations_computed;
        say(key.dir_name() + " gen " + std::to_string(m.generation) + ": " +
            std::to_string(corpus.instructions.size()) + " instructions");
      };
      hooks.stop_after_generation = options.stop_after_generation;
      const auto t = run_experiment(cell, lexicon, ctx, hooks);
      ++summary.cells;
      if (t.metrics.size() != config.generations + 1) complete = false;
    }
  }
  summary.complete = complete;
  store.log_event(summary.run_id, complete ? "run_complete" : "run_paused", "");
  return summary;
}

StatsRecord run_stats(RunStore& store, const std::string& run_id) {
  const auto config = store.config(run_id);
  const int final_gen = static_cast<int>(config.generations);

  // Flags pooled over bias levels, in config order.
  auto pooled = [&](StrategyKind s) -> std::optional<std::vector<double>> {
    std::vector<double> out;
    for (double level : config.bias_levels) {
      const auto m = store.load_metrics(run_id, {s, level}, final_gen);
      if (!m) return std::nullopt;
      for (auto f : m->embed_flags) out.push_back(f);
    }
    return out;
  };
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };

  const auto vanilla = pooled(StrategyKind::vanilla);
  if (!vanilla) throw DataError("run '" + run_id + "' has no completed vanilla cells");

  StatsRecord record;
  record.generation = final_gen;
  record.alpha = config.alpha;
  for (auto s : config.strategies) {
    if (s == StrategyKind::vanilla) continue;
    const auto flags = pooled(s);
    if (!flags) continue;
    StatsContrast c;
    c.strategy = s;
    c.n_strategy = flags->size();
    c.n_vanilla = vanilla->size();
    c.mean_strategy = mean(*flags);
    c.mean_vanilla = mean(*vanilla);
    PermutationOptions opts;
    opts.iterations = config.stats_iterations;
    opts.rng_seed = derive_seed(config.seed, hash_string("permutation"), hash_string(to_string(s)));
    c.test = permutation_test(*flags, *vanilla, opts);
    record.contrasts.push_back(c);
  }
  if (record.contrasts.empty()) {
    throw DataError("run '" + run_id + "' has no completed strategy cells to compare");
  }
  std::vector<double> raw;
  for (const auto& c : record.contrasts) raw.push_back(c.test.p_value);
  const auto fdr = bh_fdr(raw, config.alpha);
  for (std::size_t i = 0; i < record.contrasts.size(); ++i) {
    record.contrasts[i].adjusted_p = fdr.adjusted_p[i];
    record.contrasts[i].rejected = fdr.rejected[i];
  }
  store.save_stats(run_id, record);
  return record;
}

}  // namespace synthbias
