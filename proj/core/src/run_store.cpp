#include "synthbias/run_store.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "synthbias/error.hpp"
#include "synthbias/hashing.hpp"

namespace synthbias {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string gen_stem(int generation) { return "gen_" + std::to_string(generation); }

}  // namespace

std::string CellKey::dir_name() const {
  return std::string(to_string(strategy)) + "__b" + bias_level_label(bias_level);
}

std::string default_run_id(const std::string& config_hash) {
  return "run-" + config_hash.substr(0, 12);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& in : corpus.instructions) {
    json row = {{"id", in.id},
                {"parent_id", in.parent_id ? json(*in.parent_id) : json(nullptr)},
                {"generation", in.generation},
                {"strategy", to_string(in.strategy)},
                {"augmented", in.augmented},
                {"text", in.text}};
    out += row.dump();
    out += '\n';
  }
  return out;
}

Corpus corpus_from_jsonl(const std::string& text, int generation, double target_bias) {
  Corpus c;
  c.generation = generation;
  c.target_bias = target_bias;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto row = json::parse(line);
      Instruction in;
      in.id = row.at("id").get<std::string>();
      if (!row.at("parent_id").is_null()) in.parent_id = row.at("parent_id").get<std::string>();
      in.generation = row.at("generation").get<int>();
      in.strategy = parse_strategy_kind(row.at("strategy").get<std::string>());
      in.augmented = row.at("augmented").get<bool>();
      in.text = row.at("text").get<std::string>();
      c.instructions.push_back(std::move(in));
    } catch (const json::exception& e) {
      throw ParseError(std::string("corrupt corpus record: ") + e.what(), lineno);
    }
  }
  return c;
}

std::string metrics_to_json(const GenerationMetrics& m) {
  std::string flags;
  flags.reserve(m.embed_flags.size());
  for (auto f : m.embed_flags) flags.push_back(f ? '1' : '0');
  json doc = {{"generation", m.generation},
              {"stats",
               {{"total", m.stats.total},
                {"gendered", m.stats.gendered},
                {"stereotypical", m.stats.stereotypical},
                {"anti_stereotypical", m.stats.anti_stereotypical},
                {"neutral", m.stats.neutral}}},
              {"rule_bias", optional_number(m.rule_bias)},
              {"embed_bias", optional_number(m.embed_bias)},
              {"embed_flags", flags}};
  if (m.downstream) {
    const auto& d = *m.downstream;
    doc["downstream"] = {{"bias_down", d.bias_down},
                         {"accuracy", optional_number(d.accuracy)},
                         {"probe_size", d.probe_size},
                         {"train_size", d.train_size},
                         {"per_example_gap", d.per_example_gap}};
  } else {
    doc["downstream"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

GenerationMetrics metrics_from_json(const std::string& text) {
  GenerationMetrics m;
  try {
    const auto doc = json::parse(text);
    m.generation = doc.at("generation").get<int>();
    const auto& s = doc.at("stats");
    m.stats.total = s.at("total").get<std::size_t>();
    m.stats.gendered = s.at("gendered").get<std::size_t>();
    m.stats.stereotypical = s.at("stereotypical").get<std::size_t>();
    m.stats.anti_stereotypical = s.at("anti_stereotypical").get<std::size_t>();
    m.stats.neutral = s.at("neutral").get<std::size_t>();
    m.rule_bias = number_or_null(doc.at("rule_bias"));
    m.embed_bias = number_or_null(doc.at("embed_bias"));
    for (char ch : doc.at("embed_flags").get<std::string>()) m.embed_flags.push_back(ch == '1');
    if (!doc.at("downstream").is_null()) {
      const auto& d = doc.at("downstream");
      ProbeReport r;
      r.bias_down = d.at("bias_down").get<double>();
      r.accuracy = number_or_null(d.at("accuracy"));
      r.probe_size = d.at("probe_size").get<std::size_t>();
      r.train_size = d.at("train_size").get<std::size_t>();
      r.per_example_gap = d.at("per_example_gap").get<std::vector<double>>();
      m.downstream = std::move(r);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt metrics record: ") + e.what());
  }
  return m;
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {}

fs::path RunStore::run_dir(const std::string& run_id) const {
  if (run_id.empty() || run_id.find('/') != std::string::npos || run_id == "." || run_id == "..") {
    throw ArgumentError("invalid run id '" + run_id + "'");
  }
  return root_ / run_id;
}

bool RunStore::exists(const std::string& run_id) const {
  return fs::exists(run_dir(run_id) / "manifest.json");
}

fs::path RunStore::cell_dir(const std::string& run_id, const CellKey& cell) const {
  return run_dir(run_id) / "cells" / cell.dir_name();
}

Manifest RunStore::open_run(const std::string& run_id, const GridConfig& config,
                            const Lexicon& lexicon) {
  Manifest want{run_id, config.hash(), lexicon.digest(), config.name};
  if (exists(run_id)) {
    const Manifest have = manifest(run_id);
    if (have.config_hash != want.config_hash) {
      throw ConfigError("run '" + run_id + "' exists with a different config (hash " +
                        have.config_hash.substr(0, 12) + ")");
    }
    if (have.lexicon_hash != want.lexicon_hash) {
      throw ConfigError("run '" + run_id + "' exists with a different lexicon");
    }
    return have;
  }
  const auto dir = run_dir(run_id);
  fs::create_directories(dir / "cells");
  write_file_atomic(dir / "config.json", config.canonical_json() + "\n");
  write_file_atomic(dir / "lexicon.json", lexicon.to_json() + "\n");
  json m = {{"run_id", want.run_id},
            {"config_hash", want.config_hash},
            {"lexicon_hash", want.lexicon_hash},
            {"name", want.name}};
  // The manifest goes last: its presence marks the run as initialized.
  write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
  return want;
}

Manifest RunStore::manifest(const std::string& run_id) const {
  if (!exists(run_id)) throw DataError("unknown run '" + run_id + "'");
  try {
    const auto doc = json::parse(read_file(run_dir(run_id) / "manifest.json"));
    return {doc.at("run_id").get<std::string>(), doc.at("config_hash").get<std::string>(),
            doc.at("lexicon_hash").get<std::string>(), doc.value("name", "")};
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt manifest: ") + e.what());
  }
}

GridConfig RunStore::config(const std::string& run_id) const {
  manifest(run_id);
  return parse_grid_config(read_file(run_dir(run_id) / "config.json"));
}

Lexicon RunStore::lexicon(const std::string& run_id) const {
  manifest(run_id);
  return parse_lexicon(read_file(run_dir(run_id) / "lexicon.json"));
}

void RunStore::save_generation(const std::string& run_id, const CellKey& cell, const Corpus& corpus,
                               const GenerationMetrics& metrics) {
  const auto dir = cell_dir(run_id, cell);
  const auto stem = gen_stem(metrics.generation);
  write_file_atomic(dir / (stem + ".jsonl"), corpus_to_jsonl(corpus));
  write_file_atomic(dir / (stem + ".metrics.json"), metrics_to_json(metrics));
}

std::optional<GenerationMetrics> RunStore::load_metrics(const std::string& run_id,
                                                        const CellKey& cell,
                                                        int generation) const {
  const auto path = cell_dir(run_id, cell) / (gen_stem(generation) + ".metrics.json");
  if (!fs::exists(path)) return std::nullopt;
  return metrics_from_json(read_file(path));
}

std::optional<std::pair<Corpus, GenerationMetrics>> RunStore::load_generation(
    const std::string& run_id, const CellKey& cell, int generation) const {
  auto metrics = load_metrics(run_id, cell, generation);
  if (!metrics) return std::nullopt;
  const auto path = cell_dir(run_id, cell) / (gen_stem(generation) + ".jsonl");
  Corpus corpus = corpus_from_jsonl(read_file(path), generation, cell.bias_level);
  if (corpus.instructions.size() != metrics->stats.total) {
    throw DataError("corpus and metrics disagree for " + cell.dir_name() + " " + gen_stem(generation));
  }
  return std::make_pair(std::move(corpus), std::move(*metrics));
}

void RunStore::save_stats(const std::string& run_id, const StatsRecord& stats) {
  json contrasts = json::array();
  for (const auto& c : stats.contrasts) {
    contrasts.push_back({{"strategy", to_string(c.strategy)},
                         {"baseline", "vanilla"},
                         {"n_strategy", c.n_strategy},
                         {"n_vanilla", c.n_vanilla},
                         {"mean_strategy", c.mean_strategy},
                         {"mean_vanilla", c.mean_vanilla},
                         {"observed_stat", c.test.observed_stat},
                         {"p_value", c.test.p_value},
                         {"iterations", c.test.iterations},
                         {"rng_seed", c.test.rng_seed},
                         {"exact", c.test.exact},
                         {"adjusted_p", c.adjusted_p},
                         {"rejected", c.rejected}});
  }
  json doc = {{"generation", stats.generation}, {"alpha", stats.alpha}, {"contrasts", contrasts}};
  write_file_atomic(run_dir(run_id) / "stats.json", doc.dump(2) + "\n");
}

std::optional<StatsRecord> RunStore::load_stats(const std::string& run_id) const {
  const auto path = run_dir(run_id) / "stats.json";
  if (!fs::exists(path)) return std::nullopt;
  try {
    const auto doc = json::parse(read_file(path));
    StatsRecord r;
    r.generation = doc.at("generation").get<int>();
    r.alpha = doc.at("alpha").get<double>();
    for (const auto& c : doc.at("contrasts")) {
      StatsContrast s;
      s.strategy = parse_strategy_kind(c.at("strategy").get<std::string>());
      s.n_strategy = c.at("n_strategy").get<std::size_t>();
      s.n_vanilla = c.at("n_vanilla").get<std::size_t>();
      s.mean_strategy = c.at("mean_strategy").get<double>();
      s.mean_vanilla = c.at("mean_vanilla").get<double>();
      s.test.observed_stat = c.at("observed_stat").get<double>();
      s.test.p_value = c.at("p_value").get<double>();
      s.test.iterations = c.at("iterations").get<std::size_t>();
      s.test.rng_seed = c.at("rng_seed").get<std::uint64_t>();
      s.test.exact = c.at("exact").get<bool>();
      s.adjusted_p = c.at("adjusted_p").get<double>();
      s.rejected = c.at("rejected").get<bool>();
      r.contrasts.push_back(s);
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt stats record: ") + e.what());
  }
}

void RunStore::log_event(const std::string& run_id, const std::string& event,
                         const std::string& detail) {
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  json row = {{"t_ms", now}, {"event", event}, {"detail", detail}};
  std::ofstream out(run_dir(run_id) / "timeline.jsonl", std::ios::app);
  out << row.dump() << '\n';
}

fs::path RunStore::embedding_cache_file(const std::string& embedder_identity) const {
  return root_ / "embedding_cache" / (sha256_hex(embedder_identity).substr(0, 16) + ".jsonl");
}

}  // namespace synthbias
