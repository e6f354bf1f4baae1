#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "synthbias/corpus.hpp"
#include "synthbias/lexicon.hpp"

namespace synthbias {

struct GenParams {
  double temperature = 0.7;
  std::size_t children_per_parent = 5;
  std::size_t max_new_tokens = 128;
  std::chrono::milliseconds request_timeout{60'000};
  std::size_t retries = 3;
  std::size_t max_in_flight = 8;  // concurrent remote requests

  void validate() const;
};

// How the simulator treats a parent without pronoun-occupation pairs.
enum class NeutralParentState {
  inherent,  // child follows the model's own stereotype rate b*
  midpoint,  // s(parent) = 0.5
};

// Bias-dynamics simulator. A gendered child of a parent with stereotype
// indicator s is stereotypical with probability (1 - pull) * s + pull *
// inherent_bias, so repeated generations relax geometrically toward
// inherent_bias.
struct SimParams {
  double inherent_bias = 0.12;
  double pull = 0.35;
  double gendered_rate = 0.6;
  std::uint64_t rng_seed = 0;
  NeutralParentState neutral_parent = NeutralParentState::inherent;

  void validate() const;
};

// OpenAI-style chat-completion server.
struct RemoteGenerator {
  std::string endpoint;   // full URL of the chat-completions route
  std::string model;
  std::string token_env;  // env var holding the bearer token; empty = none

  void validate() const;
};

using GeneratorKind = std::variant<RemoteGenerator, SimParams>;

// The prompt sent to a remote model for each child.
std::string recursion_prompt(std::string_view parent_text);

// Probability that a gendered simulated child of `parent` is stereotypical.
double child_stereotype_probability(const Instruction& parent, const SimParams& sim,
                                    const Lexicon& lexicon);

// Pure function of (sim.rng_seed, parent.id, child_index) plus the parent's
// text. Emits only lexicon vocabulary.
Instruction simulate_child(const Instruction& parent, const SimParams& sim,
                           const Lexicon& lexicon, std::size_t child_index);

// Exactly params.children_per_parent children of `parent`. Remote failures
// surface as GenerationError after params.retries retries.
std::vector<Instruction> generate_children(const Instruction& parent, const GenParams& params,
                                           const GeneratorKind& kind, const Lexicon& lexicon);

// Children of every parent, concatenated in parent order. Remote requests
// run on up to params.max_in_flight threads.
std::vector<Instruction> fan_out(const std::vector<Instruction>& parents,
                                 const GenParams& params, const GeneratorKind& kind,
                                 const Lexicon& lexicon);

}  // namespace synthbias
