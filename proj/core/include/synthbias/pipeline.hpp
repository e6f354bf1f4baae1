#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "synthbias/config.hpp"
#include "synthbias/run_store.hpp"

namespace synthbias {

struct RunOptions {
  std::filesystem::path store_root = "store";
  std::optional<std::string> run_id;  // default: derived from the config hash
  std::optional<int> stop_after_generation;
  std::filesystem::path config_dir = ".";  // resolves a relative lexicon path
  std::function<void(const std::string&)> progress;
};

struct RunSummary {
  std::string run_id;
  std::size_t cells = 0;
  std::size_t generations_computed = 0;  // 0 when everything was already stored
  bool complete = false;
};

// Runs every (strategy x bias level) cell, persisting each generation as it
// completes. Re-running resumes from the store and never recomputes a
// completed generation.
RunSummary run_grid(const GridConfig& config, const RunOptions& options);

// Permutation test of final-generation embed flags, each strategy against
// vanilla with bias levels pooled, then Benjamini-Hochberg across the
// contrasts. Writes stats.json. DataError if vanilla or every other strategy
// is missing its final generation.
StatsRecord run_stats(RunStore& store, const std::string& run_id);

}  // namespace synthbias
