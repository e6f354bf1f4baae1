#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "synthbias/corpus.hpp"
#include "synthbias/lexicon.hpp"

namespace synthbias {

// Unit-L2 dense vector. The only way to build one is through normalize(),
// so every instance satisfies the norm invariant.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  // Throws EmbeddingError for an empty, zero or non-finite input.
  static EmbeddingVector normalize(std::vector<double> raw);

  // Adopts values that are already unit length (within 1e-9) without
  // rescaling, so persisted vectors reload bit-for-bit.
  static EmbeddingVector from_unit(std::vector<double> values);

  std::size_t dimension() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  explicit EmbeddingVector(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

// Inner product of two unit vectors. ArgumentError on dimension mismatch.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

// Hash-seeded token vectors averaged over the text: texts that share words
// land close together. Stands in for a sentence encoder in tests and at desk
// scale.
struct DeterministicEmbedderSpec {
  std::size_t dimension = 384;
  std::string salt = "synthbias";
};

// Embeddings API: POST {"model", "input": [...]}, vectors returned in input
// order.
struct RemoteEmbedderSpec {
  std::string endpoint;
  std::string model;
  std::string token_env;
  std::size_t batch_size = 64;
  std::size_t retries = 3;
  std::chrono::milliseconds request_timeout{60'000};
};

using EmbedderKind = std::variant<RemoteEmbedderSpec, DeterministicEmbedderSpec>;

void validate(const EmbedderKind& kind);

class Embedder {
 public:
  virtual ~Embedder() = default;

  // One vector per text, same order. Texts must be non-empty.
  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;

  // Distinguishes embedders whose vectors differ; part of every cache key.
  virtual std::string identity() const = 0;

  EmbeddingVector embed(const std::string& text) { return embed_batch({text}).front(); }
};

std::unique_ptr<Embedder> make_embedder(const EmbedderKind& kind);

// embed(text, kind) for one-off calls.
EmbeddingVector embed(const std::string& text, const EmbedderKind& kind);

// Content-addressed embedding store shared across grid cells. Concurrent
// readers, exclusive writers. With a backing file, new entries are appended
// as JSON lines and reloaded on construction.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path file);

  std::optional<EmbeddingVector> find(const std::string& key) const;
  void insert(const std::string& key, const EmbeddingVector& v);
  std::size_t size() const;

  static std::string key_for(const std::string& embedder_identity, const std::string& text);

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, EmbeddingVector> entries_;
  std::optional<std::filesystem::path> file_;
};

class CachingEmbedder final : public Embedder {
 public:
  CachingEmbedder(Embedder& inner, EmbeddingCache& cache) : inner_(inner), cache_(cache) {}

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
  std::string identity() const override { return inner_.identity(); }

 private:
  Embedder& inner_;
  EmbeddingCache& cache_;
};

struct GenderPrototypes {
  EmbeddingVector male;
  EmbeddingVector female;
  std::string source_hash;  // digest of the prompts both means were built from
};

// "Describe the responsibilities of {a|an} {occupation}."
std::string prototype_prompt(const Occupation& occupation);

// Normalized mean embedding of the prototype prompts of each occupation
// list. ArgumentError when either list is empty.
GenderPrototypes compute_prototypes(const Lexicon& lexicon, Embedder& embedder);

inline constexpr double kDefaultEmbedMargin = 0.35;

// cos(x, v_male) - cos(x, v_female).
double prototype_margin(const EmbeddingVector& x, const GenderPrototypes& protos);

// 1 iff |cos(x, v_male) - cos(x, v_female)| > margin.
int instruction_embed_bias(const EmbeddingVector& x, const GenderPrototypes& protos,
                           double margin = kDefaultEmbedMargin);

// Per-instruction flags, in corpus order.
std::vector<std::uint8_t> embed_bias_flags(const Corpus& corpus, const GenderPrototypes& protos,
                                           Embedder& embedder,
                                           double margin = kDefaultEmbedMargin);

// Mean flag over every instruction, neutral ones included. ArgumentError on
// an empty corpus.
double corpus_embed_bias(const Corpus& corpus, const GenderPrototypes& protos,
                         Embedder& embedder, double margin = kDefaultEmbedMargin);

}  // namespace synthbias
