#include "synthbias/report.hpp"

#include <charconv>
#include <cmath>
#include <map>

#include "synthbias/error.hpp"

namespace synthbias {
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row(std::move(header)); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      out_ += cells[i];
    }
    out_ += '\n';
  }

  fs::path write(const fs::path& path) const {
    write_file_atomic(path, out_);
    return path;
  }

 private:
  std::string out_;
};

std::optional<double> metric_of(const GenerationMetrics& m, const std::string& metric) {
  return metric == "rule" ? m.rule_bias : m.embed_bias;
}

const GenerationMetrics* find_row(const ReportBundle& b, StrategyKind s, double level, int gen) {
  for (const auto& r : b.trajectory) {
    if (r.strategy == s && r.bias_level == level && r.generation == gen) return &r.metrics;
  }
  return nullptr;
}

}  // namespace

double reduction_percent(double vanilla, double strategy) {
  if (vanilla == 0.0) throw ArgumentError("reduction against a zero vanilla score is undefined");
  return (strategy - vanilla) / vanilla * 100.0;
}

ReportBundle build_report(const RunStore& store, const std::string& run_id) {
  const auto config = store.config(run_id);
  ReportBundle b;
  b.run_id = run_id;
  b.final_generation = static_cast<int>(config.generations);
  b.strategies = config.strategies;
  b.bias_levels = config.bias_levels;

  for (auto s : config.strategies) {
    for (double level : config.bias_levels) {
      for (int g = 0; g <= b.final_generation; ++g) {
        auto m = store.load_metrics(run_id, {s, level}, g);
        if (!m) break;
        b.trajectory.push_back({s, level, g, std::move(*m)});
      }
    }
  }
  if (b.trajectory.empty()) throw DataError("no data: run '" + run_id + "' has no completed generation");

  // Downstream scores at the final generation.
  std::map<StrategyKind, DownstreamRow> scores;
  for (auto s : config.strategies) {
    DownstreamRow row{s, {}, std::nullopt};
    double sum = 0.0;
    bool all = true;
    for (double level : config.bias_levels) {
      const auto* m = find_row(b, s, level, b.final_generation);
      std::optional<double> v;
      if (m && m->downstream) v = m->downstream->bias_down;
      row.by_level.push_back(v);
      if (v) sum += *v;
      else all = false;
    }
    if (all) row.average = sum / static_cast<double>(config.bias_levels.size());
    scores[s] = row;
    b.downstream.push_back(row);
  }
  if (scores.count(StrategyKind::vanilla)) {
    const auto& base = scores[StrategyKind::vanilla];
    auto reduce = [](const std::optional<double>& v, const std::optional<double>& s)
        -> std::optional<double> {
      if (!v || !s || *v == 0.0) return std::nullopt;
      return reduction_percent(*v, *s);
    };
    for (auto s : config.strategies) {
      if (s == StrategyKind::vanilla) continue;
      ReductionRow r{s, {}, reduce(base.average, scores[s].average)};
      for (std::size_t i = 0; i < config.bias_levels.size(); ++i) {
        r.by_level.push_back(reduce(base.by_level[i], scores[s].by_level[i]));
      }
      b.reductions.push_back(r);
    }
  }

  for (auto s : config.strategies) {
    for (double level : config.bias_levels) {
      const auto* first = find_row(b, s, level, 0);
      const auto* last = find_row(b, s, level, b.final_generation);
      if (!first || !last || b.final_generation == 0) continue;
      for (const std::string metric : {"rule", "embed"}) {
        const auto a = metric_of(*first, metric);
        const auto z = metric_of(*last, metric);
        if (!a || !z) continue;
        EffectRow e{s, level, metric, *a, *z, *z - *a, std::nullopt};
        if (*a != 0.0) e.relative_pct = (*z - *a) / *a * 100.0;
        b.effects.push_back(e);
      }
    }
  }

  b.stats = store.load_stats(run_id);
  return b;
}

std::vector<fs::path> write_csv(const ReportBundle& b, const fs::path& out_dir) {
  std::vector<fs::path> written;

  Csv traj({"strategy", "bias_level", "generation", "size", "gendered", "stereotypical",
            "rule_bias", "embed_bias", "downstream_bias", "downstream_accuracy"});
  for (const auto& r : b.trajectory) {
    const auto& m = r.metrics;
    traj.row({std::string(to_string(r.strategy)), num(r.bias_level), std::to_string(r.generation),
              std::to_string(m.stats.total), std::to_string(m.stats.gendered),
              std::to_string(m.stats.stereotypical), num(m.rule_bias), num(m.embed_bias),
              m.downstream ? num(m.downstream->bias_down) : "",
              m.downstream ? num(m.downstream->accuracy) : ""});
  }
  written.push_back(traj.write(out_dir / "trajectory.csv"));

  std::vector<std::string> header{"row"};
  for (double level : b.bias_levels) header.push_back("bias_" + bias_level_label(level));
  header.push_back("average");
  Csv down(header);
  for (const auto& r : b.downstream) {
    std::vector<std::string> cells{std::string(to_string(r.strategy))};
    for (const auto& v : r.by_level) cells.push_back(num(v));
    cells.push_back(num(r.average));
    down.row(cells);
  }
  for (const auto& r : b.reductions) {
    std::vector<std::string> cells{"reduction_pct_" + std::string(to_string(r.strategy))};
    for (const auto& v : r.by_level) cells.push_back(num(v));
    cells.push_back(num(r.average));
    down.row(cells);
  }
  written.push_back(down.write(out_dir / "downstream.csv"));

  Csv eff({"strategy", "bias_level", "metric", "gen_first", "gen_last", "delta", "relative_pct"});
  for (const auto& e : b.effects) {
    eff.row({std::string(to_string(e.strategy)), num(e.bias_level), e.metric, num(e.first),
             num(e.last), num(e.delta), num(e.relative_pct)});
  }
  written.push_back(eff.write(out_dir / "effect_sizes.csv"));

  if (b.stats) {
    Csv st({"comparison", "n_strategy", "n_vanilla", "mean_strategy", "mean_vanilla",
            "observed_stat", "p_value", "adjusted_p", "rejected", "iterations", "exact"});
    for (const auto& c : b.stats->contrasts) {
      st.row({std::string(to_string(c.strategy)) + "_vs_vanilla", std::to_string(c.n_strategy),
              std::to_string(c.n_vanilla), num(c.mean_strategy), num(c.mean_vanilla),
              num(c.test.observed_stat), num(c.test.p_value), num(c.adjusted_p),
              c.rejected ? "true" : "false", std::to_string(c.test.iterations),
              c.test.exact ? "true" : "false"});
    }
    written.push_back(st.write(out_dir / "stats.csv"));
  }
  return written;
}

std::vector<fs::path> write_plotdata(const ReportBundle& b, const fs::path& out_dir) {
  std::vector<fs::path> written;
  std::vector<std::string> strat_header{"generation"};
  for (auto s : b.strategies) strat_header.emplace_back(to_string(s));

  for (const std::string metric : {"embed", "rule"}) {
    for (double level : b.bias_levels) {
      Csv fig(strat_header);
      for (int g = 0; g <= b.final_generation; ++g) {
        std::vector<std::string> cells{std::to_string(g)};
        for (auto s : b.strategies) {
          const auto* m = find_row(b, s, level, g);
          cells.push_back(m ? num(metric_of(*m, metric)) : "");
        }
        fig.row(cells);
      }
      written.push_back(
          fig.write(out_dir / ("fig1_" + metric + "_b" + bias_level_label(level) + ".csv")));
    }
  }

  Csv fig2({"strategy", "bias_level", "embed_effect"});
  for (const auto& e : b.effects) {
    if (e.metric == "embed") fig2.row({std::string(to_string(e.strategy)), num(e.bias_level), num(e.delta)});
  }
  written.push_back(fig2.write(out_dir / "fig2_effect_sizes.csv"));

  std::vector<std::string> heat_header{"strategy"};
  for (double level : b.bias_levels) heat_header.push_back("bias_" + bias_level_label(level));
  Csv fig3(heat_header);
  for (auto s : b.strategies) {
    std::vector<std::string> cells{std::string(to_string(s))};
    for (double level : b.bias_levels) {
      const auto* m = find_row(b, s, level, b.final_generation);
      cells.push_back(m ? num(m->embed_bias) : "");
    }
    fig3.row(cells);
  }
  written.push_back(fig3.write(out_dir / "fig3_heatmap.csv"));
  return written;
}

}  // namespace synthbias
