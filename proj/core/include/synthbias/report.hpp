#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synthbias/run_store.hpp"

namespace synthbias {

// Signed percent change of a strategy's score against the vanilla score at
// the same bias level: negative means less bias. ArgumentError when the
// vanilla score is zero.
double reduction_percent(double vanilla, double strategy);

struct TrajectoryRow {
  StrategyKind strategy = StrategyKind::vanilla;
  double bias_level = 0.0;
  int generation = 0;
  GenerationMetrics metrics;
};

struct DownstreamRow {
  StrategyKind strategy = StrategyKind::vanilla;
  std::vector<std::optional<double>> by_level;  // parallel to bias_levels
  std::optional<double> average;                // mean over levels, if all present
};

struct ReductionRow {
  StrategyKind strategy = StrategyKind::vanilla;
  std::vector<std::optional<double>> by_level;
  std::optional<double> average;  // from the averaged scores, not averaged reductions
};

struct EffectRow {
  StrategyKind strategy = StrategyKind::vanilla;
  double bias_level = 0.0;
  std::string metric;  // "rule" or "embed"
  double first = 0.0;
  double last = 0.0;
  double delta = 0.0;
  std::optional<double> relative_pct;
};

struct ReportBundle {
  std::string run_id;
  int final_generation = 0;
  std::vector<StrategyKind> strategies;
  std::vector<double> bias_levels;
  std::vector<TrajectoryRow> trajectory;
  std::vector<DownstreamRow> downstream;
  std::vector<ReductionRow> reductions;  // one per non-vanilla strategy
  std::vector<EffectRow> effects;
  std::optional<StatsRecord> stats;
};

// Gathers every completed generation of the run. DataError for an unknown
// run or one with no completed generation.
ReportBundle build_report(const RunStore& store, const std::string& run_id);

// trajectory.csv, downstream.csv, effect_sizes.csv and (when stats exist)
// stats.csv. Returns the written paths.
std::vector<std::filesystem::path> write_csv(const ReportBundle& bundle,
                                             const std::filesystem::path& out_dir);

// fig1_<metric>_b<level>.csv (generation x strategy), fig2_effect_sizes.csv,
// fig3_heatmap.csv (strategy x bias level, final-generation embed bias).
std::vector<std::filesystem::path> write_plotdata(const ReportBundle& bundle,
                                                  const std::filesystem::path& out_dir);

}  // namespace synthbias
