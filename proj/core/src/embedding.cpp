#include "synthbias/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "http_json.hpp"
#include "json.hpp"
#include "synthbias/error.hpp"
#include "synthbias/hashing.hpp"
#include "synthbias/random.hpp"
#include "synthbias/text.hpp"

namespace synthbias {
namespace {

using nlohmann::json;

double squared_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

class DeterministicEmbedder final : public Embedder {
 public:
  explicit DeterministicEmbedder(DeterministicEmbedderSpec spec)
      : spec_(std::move(spec)), salt_hash_(hash_string(spec_.salt)) {}

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(embed_one(text));
    return out;
  }

  std::string identity() const override {
    return "deterministic_test/" + std::to_string(spec_.dimension) + "/" + spec_.salt;
  }

 private:
  EmbeddingVector embed_one(const std::string& text) {
    if (text.empty()) throw EmbeddingError("cannot embed empty text");
    const auto keys = token_keys(text);
    if (keys.empty()) throw EmbeddingError("text '" + text + "' has no tokens to embed");
    std::vector<double> sum(spec_.dimension, 0.0);
    for (const auto& key : keys) {
      const auto& tv = token_vector(key);
      for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += tv[d];
    }
    const double n = static_cast<double>(keys.size());
    for (double& x : sum) x /= n;
    return EmbeddingVector::normalize(std::move(sum));
  }

  const std::vector<double>& token_vector(const std::string& key) {
    std::lock_guard lock(mu_);
    auto it = tokens_.find(key);
    if (it != tokens_.end()) return it->second;
    Rng rng(derive_seed(salt_hash_, hash_string(key)));
    std::vector<double> v(spec_.dimension);
    double norm2 = 0.0;
    do {
      for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
      norm2 = squared_norm(v);
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return tokens_.emplace(key, std::move(v)).first->second;
  }

  DeterministicEmbedderSpec spec_;
  std::uint64_t salt_hash_;
  std::mutex mu_;
  std::unordered_map<std::string, std::vector<double>> tokens_;
};

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderSpec spec)
      : spec_(std::move(spec)), endpoint_(parse_endpoint(spec_.endpoint)) {}

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += spec_.batch_size) {
      const std::size_t end = std::min(texts.size(), start + spec_.batch_size);
      std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                     texts.begin() + static_cast<std::ptrdiff_t>(end));
      for (const auto& t : batch) {
        if (t.empty()) throw EmbeddingError("cannot embed empty text");
      }
      for (auto& v : request(batch)) out.push_back(std::move(v));
    }
    return out;
  }

  std::string identity() const override { return "remote/" + spec_.endpoint + "/" + spec_.model; }

 private:
  std::vector<EmbeddingVector> request(const std::vector<std::string>& batch) {
    const std::string payload = json{{"model", spec_.model}, {"input", batch}}.dump();
    const std::string token = detail::token_from_env(spec_.token_env);
    std::string problem;
    for (std::size_t attempt = 0; attempt <= spec_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
      const auto res = detail::post_json(endpoint_, payload, token, spec_.request_timeout);
      if (!res.ok()) {
        problem = res.status ? "HTTP " + std::to_string(res.status) : res.error;
        continue;
      }
      try {
        auto vectors = parse_vectors(json::parse(res.body));
        if (vectors.size() != batch.size()) {
          problem = "expected " + std::to_string(batch.size()) + " vectors, got " +
                    std::to_string(vectors.size());
          continue;
        }
        std::vector<EmbeddingVector> out;
        for (auto& v : vectors) out.push_back(EmbeddingVector::normalize(std::move(v)));
        return out;
      } catch (const json::exception& e) {
        problem = std::string("unparseable embeddings: ") + e.what();
      }
    }
    throw EmbeddingError("embedding request failed after " + std::to_string(spec_.retries + 1) +
                         " attempts: " + problem);
  }

  // Accepts a bare list of vectors, {"embeddings": [...]}, or the
  // {"data": [{"embedding": [...], "index": i}]} shape.
  static std::vector<std::vector<double>> parse_vectors(const json& doc) {
    std::vector<std::vector<double>> out;
    if (doc.is_array()) return doc.get<std::vector<std::vector<double>>>();
    if (doc.contains("embeddings")) return doc.at("embeddings").get<std::vector<std::vector<double>>>();
    const auto& data = doc.at("data");
    out.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t idx = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
      if (idx >= out.size()) throw EmbeddingError("embedding index out of range");
      out[idx] = data[i].at("embedding").get<std::vector<double>>();
    }
    return out;
  }

  RemoteEmbedderSpec spec_;
  Endpoint endpoint_;
};

}  // namespace

EmbeddingVector EmbeddingVector::normalize(std::vector<double> raw) {
  if (raw.empty()) throw EmbeddingError("empty embedding");
  const double n2 = squared_norm(raw);
  if (!std::isfinite(n2)) throw EmbeddingError("non-finite embedding");
  if (n2 == 0.0) throw EmbeddingError("zero embedding vector");
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : raw) x *= inv;
  return EmbeddingVector(std::move(raw));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values) {
  const double n2 = squared_norm(values);
  if (!(std::abs(std::sqrt(n2) - 1.0) <= 1e-9)) {
    throw EmbeddingError("stored embedding is not unit length");
  }
  return EmbeddingVector(std::move(values));
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dimension() != v.dimension()) {
    throw ArgumentError("cosine of vectors with dimensions " + std::to_string(u.dimension()) +
                        " and " + std::to_string(v.dimension()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < u.dimension(); ++i) dot += u[i] * v[i];
  return std::clamp(dot, -1.0, 1.0);
}

void validate(const EmbedderKind& kind) {
  if (const auto* det = std::get_if<DeterministicEmbedderSpec>(&kind)) {
    if (det->dimension < 8) throw ArgumentError("deterministic embedder dimension must be >= 8");
    return;
  }
  const auto& remote = std::get<RemoteEmbedderSpec>(kind);
  parse_endpoint(remote.endpoint);
  if (remote.model.empty()) throw ArgumentError("remote embedder needs a model name");
  if (remote.batch_size < 1) throw ArgumentError("embedding batch size must be >= 1");
}

std::unique_ptr<Embedder> make_embedder(const EmbedderKind& kind) {
  validate(kind);
  if (const auto* det = std::get_if<DeterministicEmbedderSpec>(&kind)) {
    return std::make_unique<DeterministicEmbedder>(*det);
  }
  return std::make_unique<RemoteEmbedder>(std::get<RemoteEmbedderSpec>(kind));
}

EmbeddingVector embed(const std::string& text, const EmbedderKind& kind) {
  return make_embedder(kind)->embed(text);
}

EmbeddingCache::EmbeddingCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(*file_);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      entries_.insert_or_assign(rec.at("key").get<std::string>(),
                                EmbeddingVector::from_unit(rec.at("v").get<std::vector<double>>()));
    } catch (const json::exception&) {
      // A torn final line from an interrupted writer is dropped.
      continue;
    }
  }
}

std::optional<EmbeddingVector> EmbeddingCache::find(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::insert(const std::string& key, const EmbeddingVector& v) {
  std::unique_lock lock(mu_);
  if (!entries_.emplace(key, v).second) return;
  if (file_) {
    std::ofstream out(*file_, std::ios::app);
    json rec = {{"key", key}, {"v", std::vector<double>(v.values().begin(), v.values().end())}};
    out << rec.dump() << '\n';
  }
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::string EmbeddingCache::key_for(const std::string& embedder_identity, const std::string& text) {
  std::string material = embedder_identity;
  material.push_back('\0');
  material += text;
  return sha256_hex(material);
}

std::vector<EmbeddingVector> CachingEmbedder::embed_batch(const std::vector<std::string>& texts) {
  const std::string id = inner_.identity();
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::string> missing;
  std::vector<std::string> missing_keys;
  std::vector<std::size_t> missing_at;
  std::unordered_map<std::string, std::size_t> pending;  // dedupe within the batch
  std::vector<std::pair<std::size_t, std::size_t>> copies;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const std::string key = EmbeddingCache::key_for(id, texts[i]);
    if (auto hit = cache_.find(key)) {
      out[i] = std::move(*hit);
    } else if (auto p = pending.find(key); p != pending.end()) {
      copies.emplace_back(i, p->second);
    } else {
      pending.emplace(key, i);
      missing.push_back(texts[i]);
      missing_keys.push_back(key);
      missing_at.push_back(i);
    }
  }
  if (!missing.empty()) {
    auto fresh = inner_.embed_batch(missing);
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      cache_.insert(missing_keys[k], fresh[k]);
      out[missing_at[k]] = std::move(fresh[k]);
    }
  }
  for (auto [dst, src] : copies) out[dst] = out[src];
  return out;
}

std::string prototype_prompt(const Occupation& occupation) {
  std::string p = "Describe the responsibilities of ";
  p += indefinite_article(occupation.display);
  p += ' ';
  p += occupation.display;
  p += '.';
  return p;
}

GenderPrototypes compute_prototypes(const Lexicon& lexicon, Embedder& embedder) {
  if (lexicon.male_occupations().empty() || lexicon.female_occupations().empty()) {
    throw ArgumentError("prototypes need at least one occupation per gender");
  }
  std::string material;
  auto mean_of = [&](Gender g) {
    std::vector<std::string> prompts;
    for (const auto& occ : lexicon.occupations(g)) prompts.push_back(prototype_prompt(occ));
    for (const auto& p : prompts) {
      material += std::string(to_string(g)) + ":" + p + "\n";
    }
    const auto vectors = embedder.embed_batch(prompts);
    std::vector<double> sum(vectors.front().dimension(), 0.0);
    for (const auto& v : vectors) {
      if (v.dimension() != sum.size()) throw EmbeddingError("embedder changed dimension");
      for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += v[d];
    }
    for (double& x : sum) x /= static_cast<double>(vectors.size());
    return EmbeddingVector::normalize(std::move(sum));
  };
  GenderPrototypes protos;
  protos.male = mean_of(Gender::male);
  protos.female = mean_of(Gender::female);
  if (protos.male.dimension() != protos.female.dimension()) {
    throw EmbeddingError("prototype dimensions differ");
  }
  protos.source_hash = sha256_hex(material);
  return protos;
}

double prototype_margin(const EmbeddingVector& x, const GenderPrototypes& protos) {
  return cosine(x, protos.male) - cosine(x, protos.female);
}

int instruction_embed_bias(const EmbeddingVector& x, const GenderPrototypes& protos,
                           double margin) {
  return std::abs(prototype_margin(x, protos)) > margin ? 1 : 0;
}

std::vector<std::uint8_t> embed_bias_flags(const Corpus& corpus, const GenderPrototypes& protos,
                                           Embedder& embedder, double margin) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& instr : corpus.instructions) texts.push_back(instr.text);
  const auto vectors = embedder.embed_batch(texts);
  std::vector<std::uint8_t> flags;
  flags.reserve(vectors.size());
  for (const auto& v : vectors) {
    flags.push_back(static_cast<std::uint8_t>(instruction_embed_bias(v, protos, margin)));
  }
  return flags;
}

double corpus_embed_bias(const Corpus& corpus, const GenderPrototypes& protos,
                         Embedder& embedder, double margin) {
  if (corpus.empty()) throw ArgumentError("embedding bias of an empty corpus");
  const auto flags = embed_bias_flags(corpus, protos, embedder, margin);
  std::size_t hits = 0;
  for (auto f : flags) hits += f;
  return static_cast<double>(hits) / static_cast<double>(flags.size());
}

}  // namespace synthbias
