#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "synthbias/config.hpp"
#include "synthbias/corpus.hpp"
#include "synthbias/lexicon.hpp"
#include "synthbias/statistics.hpp"
#include "synthbias/strategies.hpp"

namespace synthbias {

// On-disk layout, one directory per run:
//
//   <root>/<run-id>/manifest.json     run id, config and lexicon digests
//   <root>/<run-id>/config.json       canonical config
//   <root>/<run-id>/lexicon.json      canonical lexicon
//   <root>/<run-id>/cells/<strategy>__b<level>/gen_<k>.jsonl
//   <root>/<run-id>/cells/<strategy>__b<level>/gen_<k>.metrics.json
//   <root>/<run-id>/stats.json
//   <root>/<run-id>/timeline.jsonl    wall-clock events, not reproducible
//   <root>/embedding_cache/<embedder>.jsonl
//
// A generation counts as complete once its metrics file exists; the corpus
// file is always written first. Files are written to a temporary name and
// renamed into place.
struct CellKey {
  StrategyKind strategy = StrategyKind::vanilla;
  double bias_level = 0.0;

  std::string dir_name() const;
};

struct Manifest {
  std::string run_id;
  std::string config_hash;
  std::string lexicon_hash;
  std::string name;
};

struct StatsContrast {
  StrategyKind strategy = StrategyKind::vanilla;
  std::size_t n_strategy = 0;
  std::size_t n_vanilla = 0;
  double mean_strategy = 0.0;
  double mean_vanilla = 0.0;
  PermutationResult test;
  double adjusted_p = 1.0;
  bool rejected = false;
};

struct StatsRecord {
  int generation = 0;
  double alpha = 0.05;
  std::vector<StatsContrast> contrasts;
};

std::string default_run_id(const std::string& config_hash);

std::string corpus_to_jsonl(const Corpus& corpus);
Corpus corpus_from_jsonl(const std::string& text, int generation, double target_bias);
std::string metrics_to_json(const GenerationMetrics& m);
GenerationMetrics metrics_from_json(const std::string& text);

class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path run_dir(const std::string& run_id) const;
  bool exists(const std::string& run_id) const;

  // Creates the run, or checks that an existing one was made from the same
  // config and lexicon (ConfigError otherwise).
  Manifest open_run(const std::string& run_id, const GridConfig& config, const Lexicon& lexicon);

  // DataError when the run does not exist.
  Manifest manifest(const std::string& run_id) const;
  GridConfig config(const std::string& run_id) const;
  Lexicon lexicon(const std::string& run_id) const;

  void save_generation(const std::string& run_id, const CellKey& cell, const Corpus& corpus,
                       const GenerationMetrics& metrics);
  std::optional<std::pair<Corpus, GenerationMetrics>> load_generation(const std::string& run_id,
                                                                      const CellKey& cell,
                                                                      int generation) const;
  std::optional<GenerationMetrics> load_metrics(const std::string& run_id, const CellKey& cell,
                                                int generation) const;

  void save_stats(const std::string& run_id, const StatsRecord& stats);
  std::optional<StatsRecord> load_stats(const std::string& run_id) const;

  void log_event(const std::string& run_id, const std::string& event, const std::string& detail);

  std::filesystem::path embedding_cache_file(const std::string& embedder_identity) const;

 private:
  std::filesystem::path cell_dir(const std::string& run_id, const CellKey& cell) const;

  std::filesystem::path root_;
};

// Replaces `path` with `content` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace synthbias
