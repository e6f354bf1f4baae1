#include "synthbias/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "synthbias/error.hpp"
#include "synthbias/hashing.hpp"

namespace synthbias {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

const json& object_at(const json& doc, const char* key) {
  const auto& node = doc.at(key);
  if (!node.is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
  return node;
}

json generator_json(const GeneratorKind& kind) {
  if (const auto* sim = std::get_if<SimParams>(&kind)) {
    return {{"kind", "simulated"},
            {"inherent_bias", sim->inherent_bias},
            {"pull", sim->pull},
            {"gendered_rate", sim->gendered_rate},
            {"seed", sim->rng_seed},
            {"neutral_parent",
             sim->neutral_parent == NeutralParentState::inherent ? "inherent" : "midpoint"}};
  }
  const auto& r = std::get<RemoteGenerator>(kind);
  return {{"kind", "remote"}, {"endpoint", r.endpoint}, {"model", r.model}, {"token_env", r.token_env}};
}

json embedder_json(const EmbedderKind& kind) {
  if (const auto* det = std::get_if<DeterministicEmbedderSpec>(&kind)) {
    return {{"kind", "deterministic_test"}, {"dimension", det->dimension}, {"salt", det->salt}};
  }
  const auto& r = std::get<RemoteEmbedderSpec>(kind);
  return {{"kind", "remote"},
          {"endpoint", r.endpoint},
          {"model", r.model},
          {"token_env", r.token_env},
          {"batch_size", r.batch_size},
          {"retries", r.retries},
          {"request_timeout_ms", r.request_timeout.count()}};
}

GeneratorKind parse_generator(const json& g) {
  const std::string kind = g.value("kind", "simulated");
  if (kind == "simulated") {
    reject_unknown(g, {"kind", "inherent_bias", "pull", "gendered_rate", "seed", "neutral_parent"},
                   "generator");
    SimParams sim;
    sim.inherent_bias = g.value("inherent_bias", sim.inherent_bias);
    sim.pull = g.value("pull", sim.pull);
    sim.gendered_rate = g.value("gendered_rate", sim.gendered_rate);
    sim.rng_seed = g.value("seed", sim.rng_seed);
    const std::string np = g.value("neutral_parent", "inherent");
    if (np == "inherent") sim.neutral_parent = NeutralParentState::inherent;
    else if (np == "midpoint") sim.neutral_parent = NeutralParentState::midpoint;
    else throw ConfigError("generator.neutral_parent must be 'inherent' or 'midpoint'");
    return sim;
  }
  if (kind == "remote") {
    reject_unknown(g, {"kind", "endpoint", "model", "token_env"}, "generator");
    RemoteGenerator r;
    r.endpoint = g.at("endpoint").get<std::string>();
    r.model = g.at("model").get<std::string>();
    r.token_env = g.value("token_env", "");
    return r;
  }
  throw ConfigError("generator.kind must be 'simulated' or 'remote'");
}

EmbedderKind parse_embedder(const json& e) {
  const std::string kind = e.value("kind", "deterministic_test");
  if (kind == "deterministic_test") {
    reject_unknown(e, {"kind", "dimension", "salt"}, "embedder");
    DeterministicEmbedderSpec d;
    d.dimension = e.value("dimension", d.dimension);
    d.salt = e.value("salt", d.salt);
    return d;
  }
  if (kind == "remote") {
    reject_unknown(e, {"kind", "endpoint", "model", "token_env", "batch_size", "retries",
                       "request_timeout_ms"},
                   "embedder");
    RemoteEmbedderSpec r;
    r.endpoint = e.at("endpoint").get<std::string>();
    r.model = e.at("model").get<std::string>();
    r.token_env = e.value("token_env", "");
    r.batch_size = e.value("batch_size", r.batch_size);
    r.retries = e.value("retries", r.retries);
    r.request_timeout = std::chrono::milliseconds(e.value("request_timeout_ms", r.request_timeout.count()));
    return r;
  }
  throw ConfigError("embedder.kind must be 'deterministic_test' or 'remote'");
}

int line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
}

}  // namespace

std::string bias_level_label(double level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", level);
  return buf;
}

std::string GridConfig::canonical_json() const {
  json doc;
  doc["name"] = name;
  doc["seed"] = seed;
  json strat = json::array();
  for (auto s : strategies) strat.push_back(std::string(to_string(s)));
  doc["strategies"] = strat;
  doc["bias_levels"] = bias_levels;
  doc["seed_corpus_size"] = seed_corpus_size;
  doc["generations"] = generations;
  doc["generation"] = {{"temperature", gen_params.temperature},
                       {"children_per_parent", gen_params.children_per_parent},
                       {"max_new_tokens", gen_params.max_new_tokens},
                       {"request_timeout_ms", gen_params.request_timeout.count()},
                       {"retries", gen_params.retries},
                       {"max_in_flight", gen_params.max_in_flight}};
  doc["generator"] = generator_json(generator);
  doc["embedder"] = embedder_json(embedder);
  doc["thresholds"] = {{"embed_margin", embed_margin}, {"filter_threshold", filter_threshold}};
  if (downstream) {
    doc["downstream"] = {{"enabled", true},
                         {"epochs", downstream->train.epochs},
                         {"learning_rate", downstream->train.learning_rate},
                         {"l2", downstream->train.l2},
                         {"holdout_fraction", downstream->holdout_fraction}};
  } else {
    doc["downstream"] = {{"enabled", false}};
  }
  doc["statistics"] = {{"iterations", stats_iterations}, {"alpha", alpha}};
  doc["lexicon"] = lexicon ? json(*lexicon) : json(nullptr);
  doc["embedding_cache"] = embedding_cache;
  return doc.dump(2);
}

std::string GridConfig::hash() const { return sha256_hex(canonical_json()); }

ExperimentConfig GridConfig::cell(StrategyKind strategy, std::size_t bias_index) const {
  if (bias_index >= bias_levels.size()) throw ArgumentError("bias level index out of range");
  const auto level = static_cast<std::uint64_t>(bias_index);
  ExperimentConfig c;
  c.strategy.kind = strategy;
  c.strategy.filter_threshold = filter_threshold;
  c.generations = generations;
  c.gen_params = gen_params;
  c.generator = generator;
  // Seeds depend on the bias level but not on the strategy, so every
  // strategy at one level starts from the same seed corpus and the
  // simulator produces the same children for the same parents.
  if (auto* sim = std::get_if<SimParams>(&c.generator)) {
    sim->rng_seed = derive_seed(sim->rng_seed ^ seed, hash_string("simulator"), level);
  }
  c.seed = {bias_levels[bias_index], seed_corpus_size,
            derive_seed(seed, hash_string("seed-corpus"), level)};
  c.embed_margin = embed_margin;
  c.downstream = downstream;
  if (c.downstream) c.downstream->split_seed = derive_seed(seed, hash_string("split"), level);
  c.rng_seed = derive_seed(seed, hash_string("padding"), level);
  return c;
}

void GridConfig::validate() const {
  if (strategies.empty()) throw ConfigError("no strategies requested");
  if (std::set<StrategyKind>(strategies.begin(), strategies.end()).size() != strategies.size()) {
    throw ConfigError("strategies listed twice");
  }
  if (bias_levels.empty()) throw ConfigError("no bias levels requested");
  if (std::set<double>(bias_levels.begin(), bias_levels.end()).size() != bias_levels.size()) {
    throw ConfigError("bias levels listed twice");
  }
  if (stats_iterations < 1) throw ConfigError("statistics.iterations must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("statistics.alpha must lie in (0, 1]");
  try {
    for (std::size_t i = 0; i < bias_levels.size(); ++i) cell(strategies.front(), i).validate();
    Strategy{StrategyKind::filtered, filter_threshold}.validate();
    synthbias::validate(embedder);
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

GridConfig parse_grid_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config (line " +
                      std::to_string(line_of_byte(json_text, e.byte == 0 ? 0 : e.byte - 1)) +
                      "): " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  GridConfig cfg;
  try {
    reject_unknown(doc,
                   {"name", "seed", "strategies", "bias_levels", "seed_corpus_size", "generations",
                    "generation", "generator", "embedder", "thresholds", "downstream",
                    "statistics", "lexicon", "embedding_cache"},
                   "config");
    cfg.name = doc.value("name", cfg.name);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("strategies")) {
      cfg.strategies.clear();
      for (const auto& s : doc.at("strategies")) {
        cfg.strategies.push_back(parse_strategy_kind(s.get<std::string>()));
      }
    }
    if (doc.contains("bias_levels")) cfg.bias_levels = doc.at("bias_levels").get<std::vector<double>>();
    cfg.seed_corpus_size = doc.value("seed_corpus_size", cfg.seed_corpus_size);
    cfg.generations = doc.value("generations", cfg.generations);
    if (doc.contains("generation")) {
      const auto& g = object_at(doc, "generation");
      reject_unknown(g, {"temperature", "children_per_parent", "max_new_tokens",
                         "request_timeout_ms", "retries", "max_in_flight"},
                     "generation");
      auto& p = cfg.gen_params;
      p.temperature = g.value("temperature", p.temperature);
      p.children_per_parent = g.value("children_per_parent", p.children_per_parent);
      p.max_new_tokens = g.value("max_new_tokens", p.max_new_tokens);
      p.request_timeout = std::chrono::milliseconds(g.value("request_timeout_ms", p.request_timeout.count()));
      p.retries = g.value("retries", p.retries);
      p.max_in_flight = g.value("max_in_flight", p.max_in_flight);
    }
    if (doc.contains("generator")) cfg.generator = parse_generator(object_at(doc, "generator"));
    if (doc.contains("embedder")) cfg.embedder = parse_embedder(object_at(doc, "embedder"));
    if (doc.contains("thresholds")) {
      const auto& t = object_at(doc, "thresholds");
      reject_unknown(t, {"embed_margin", "filter_threshold"}, "thresholds");
      cfg.embed_margin = t.value("embed_margin", cfg.embed_margin);
      cfg.filter_threshold = t.value("filter_threshold", cfg.filter_threshold);
    }
    if (doc.contains("downstream")) {
      const auto& d = object_at(doc, "downstream");
      reject_unknown(d, {"enabled", "epochs", "learning_rate", "l2", "holdout_fraction"}, "downstream");
      if (d.value("enabled", true)) {
        DownstreamOptions o;
        o.train.epochs = d.value("epochs", o.train.epochs);
        o.train.learning_rate = d.value("learning_rate", o.train.learning_rate);
        o.train.l2 = d.value("l2", o.train.l2);
        o.holdout_fraction = d.value("holdout_fraction", o.holdout_fraction);
        cfg.downstream = o;
      } else {
        cfg.downstream.reset();
      }
    }
    if (doc.contains("statistics")) {
      const auto& s = object_at(doc, "statistics");
      reject_unknown(s, {"iterations", "alpha"}, "statistics");
      cfg.stats_iterations = s.value("iterations", cfg.stats_iterations);
      cfg.alpha = s.value("alpha", cfg.alpha);
    }
    if (doc.contains("lexicon") && !doc.at("lexicon").is_null()) {
      cfg.lexicon = doc.at("lexicon").get<std::string>();
    }
    cfg.embedding_cache = doc.value("embedding_cache", cfg.embedding_cache);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

GridConfig load_grid_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_grid_config(buf.str());
}

}  // namespace synthbias
