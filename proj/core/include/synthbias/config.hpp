#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synthbias/downstream.hpp"
#include "synthbias/embedding.hpp"
#include "synthbias/generation.hpp"
#include "synthbias/strategies.hpp"

namespace synthbias {

// One experiment grid: every (strategy x bias level) cell shares the seeds,
// generator and yardsticks below. Read from a JSON file; secrets stay in the
// environment (only variable names appear here).
struct GridConfig {
  std::string name = "grid";
  std::uint64_t seed = 7;
  std::vector<StrategyKind> strategies{StrategyKind::vanilla, StrategyKind::contrastive,
                                       StrategyKind::filtered, StrategyKind::size_matched};
  std::vector<double> bias_levels{0.1, 0.3, 0.6};
  std::size_t seed_corpus_size = 50;
  std::size_t generations = 3;
  GenParams gen_params;
  GeneratorKind generator = SimParams{};
  EmbedderKind embedder = DeterministicEmbedderSpec{};
  double embed_margin = kDefaultEmbedMargin;
  double filter_threshold = 0.4;
  std::optional<DownstreamOptions> downstream = DownstreamOptions{};
  std::size_t stats_iterations = 5000;
  double alpha = 0.05;
  std::optional<std::string> lexicon;  // path, relative to the config file
  bool embedding_cache = true;

  // Every field, defaults filled in; the basis of hash().
  std::string canonical_json() const;
  std::string hash() const;

  ExperimentConfig cell(StrategyKind strategy, std::size_t bias_index) const;

  void validate() const;
};

// ConfigError on malformed JSON (with line), unknown keys or invalid values.
GridConfig parse_grid_config(std::string_view json_text);
GridConfig load_grid_config(const std::filesystem::path& path);

std::string bias_level_label(double level);

}  // namespace synthbias
