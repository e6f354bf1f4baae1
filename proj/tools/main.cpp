// synthbias: run recursive-generation bias experiments and report on them.
//
// Exit codes: 0 ok, 2 config or validation error, 3 generation failure,
// 4 data error (unknown run, missing generations).

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "synthbias/config.hpp"
#include "synthbias/error.hpp"
#include "synthbias/lexicon.hpp"
#include "synthbias/pipeline.hpp"
#include "synthbias/report.hpp"
#include "synthbias/run_store.hpp"

namespace fs = std::filesystem;
using namespace synthbias;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitGeneration = 3;
constexpr int kExitData = 4;

int cmd_run(const std::string& config_path, const std::string& store,
            const std::optional<std::string>& run_id, const std::optional<int>& stop_after,
            bool quiet) {
  const auto config = load_grid_config(config_path);
  RunOptions opts;
  opts.store_root = store;
  opts.run_id = run_id;
  opts.stop_after_generation = stop_after;
  opts.config_dir = fs::path(config_path).parent_path();
  if (!quiet) opts.progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
  const auto summary = run_grid(config, opts);
  if (!quiet) {
    std::cerr << summary.cells << " cells, " << summary.generations_computed
              << " generations computed" << (summary.complete ? "" : " (paused)") << '\n';
  }
  std::cout << summary.run_id << '\n';
  return 0;
}

int cmd_report(const std::string& store, const std::string& run_id, const std::string& format,
               const std::optional<std::string>& out) {
  RunStore rs(store);
  const auto bundle = build_report(rs, run_id);
  const fs::path dir = out ? fs::path(*out) : rs.run_dir(run_id) / "report" / format;
  const auto files = format == "csv" ? write_csv(bundle, dir) : write_plotdata(bundle, dir);
  for (const auto& f : files) std::cout << f.string() << '\n';
  return 0;
}

int cmd_stats(const std::string& store, const std::string& run_id) {
  RunStore rs(store);
  const auto record = run_stats(rs, run_id);
  std::cout << "comparison,n_strategy,n_vanilla,observed_stat,p_value,adjusted_p,rejected\n";
  for (const auto& c : record.contrasts) {
    std::cout << to_string(c.strategy) << "_vs_vanilla," << c.n_strategy << ',' << c.n_vanilla
              << ',' << c.test.observed_stat << ',' << c.test.p_value << ',' << c.adjusted_p << ','
              << (c.rejected ? "true" : "false") << '\n';
  }
  return 0;
}

int cmd_lexicon_validate(const std::string& path) {
  const auto lex = load_lexicon(fs::path(path));
  std::cout << "ok " << lex.digest() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive synthetic-data gender bias experiments"};
  app.require_subcommand(1);
  std::string store = "store";
  app.add_option("--store", store, "Run store root directory")->capture_default_str();

  std::string config_path;
  std::optional<std::string> run_id;
  std::optional<int> stop_after;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run (or resume) an experiment grid");
  run->add_option("config", config_path, "Grid config file")->required();
  run->add_option("--run-id", run_id, "Run id (default: derived from the config hash)");
  run->add_option("--stop-after-generation", stop_after, "Pause every cell after this generation")
      ->check(CLI::NonNegativeNumber);
  run->add_flag("-q,--quiet", quiet, "No progress output");

  std::string report_run;
  std::string format = "csv";
  std::optional<std::string> out;
  auto* report = app.add_subcommand("report", "Emit tables or plot data for a run");
  report->add_option("run_id", report_run)->required();
  report->add_option("--format", format)->check(CLI::IsMember({"csv", "plotdata"}))->capture_default_str();
  report->add_option("--out", out, "Output directory (default: <run>/report/<format>)");

  std::string stats_run;
  auto* stats = app.add_subcommand("stats", "Permutation tests of each strategy against vanilla");
  stats->add_option("run_id", stats_run)->required();

  std::string lexicon_path;
  auto* lexicon = app.add_subcommand("lexicon", "Lexicon utilities");
  lexicon->require_subcommand(1);
  auto* validate = lexicon->add_subcommand("validate", "Check a lexicon file");
  validate->add_option("path", lexicon_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, store, run_id, stop_after, quiet);
    if (*report) return cmd_report(store, report_run, format, out);
    if (*stats) return cmd_stats(store, stats_run);
    if (*validate) return cmd_lexicon_validate(lexicon_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ArgumentError& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GenerationError& e) {
    std::cerr << "generation failed: " << e.what() << '\n';
    return kExitGeneration;
  } catch (const StrategyError& e) {
    std::cerr << "generation failed: " << e.what() << '\n';
    return kExitGeneration;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
