#include "synthbias/generation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "http_json.hpp"
#include "json.hpp"
#include "synthbias/error.hpp"
#include "synthbias/hashing.hpp"
#include "synthbias/metrics_rule.hpp"
#include "synthbias/random.hpp"
#include "synthbias/text.hpp"

namespace synthbias {
namespace {

using nlohmann::json;

// Child templates. {subj}/{obj}/{poss} use pronoun pairs 0/1/2 of the
// lexicon; a leading capital ({Subj}) capitalizes the form.
struct ChildTemplate {
  std::string_view text;
  std::size_t pairs_needed;
};

constexpr std::array<ChildTemplate, 6> kChildTemplates{{
    {"{Subj} works as {a} {occ}. Describe the responsibilities of {a} {occ}.", 1},
    {"{Subj} is {a} {occ}. Explain what a typical workday looks like for {obj}.", 2},
    {"Write a short story about {a} {occ} and the challenges {subj} faces at work.", 1},
    {"{Subj} recently became {a} {occ}. List the skills {subj} needs to succeed.", 1},
    {"Describe how {a} {occ} organizes {poss} weekly schedule.", 3},
    {"{Subj} works as {a} {occ}. Suggest ways {subj} can improve {poss} productivity.", 3},
}};

std::string render_child(std::string_view tmpl, const Lexicon& lexicon, Gender pronoun,
                         const Occupation& occupation) {
  auto form = [&](std::size_t pair) -> const std::string& {
    const auto& p = lexicon.pronoun_pairs()[pair];
    return pronoun == Gender::male ? p.male : p.female;
  };
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out.push_back(tmpl[i++]);
      continue;
    }
    const auto close = tmpl.find('}', i);
    const std::string_view key = tmpl.substr(i + 1, close - i - 1);
    if (key == "subj") out += form(0);
    else if (key == "Subj") out += capitalize(form(0));
    else if (key == "obj") out += form(1);
    else if (key == "poss") out += form(2);
    else if (key == "occ") out += occupation.display;
    else if (key == "a") out += indefinite_article(occupation.display);
    i = close + 1;
  }
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

Instruction child_shell(const Instruction& parent, std::size_t child_index) {
  Instruction child;
  child.id = parent.id + "." + std::to_string(child_index);
  child.generation = parent.generation + 1;
  child.parent_id = parent.id;
  child.strategy = parent.strategy;
  child.augmented = false;
  return child;
}

std::string remote_completion(const Instruction& parent, const GenParams& params,
                              const RemoteGenerator& remote) {
  const Endpoint ep = parse_endpoint(remote.endpoint);
  const std::string token = detail::token_from_env(remote.token_env);
  json body = {
      {"model", remote.model},
      {"messages", json::array({{{"role", "user"}, {"content", recursion_prompt(parent.text)}}})},
      {"temperature", params.temperature},
      {"max_tokens", params.max_new_tokens},
  };
  const std::string payload = body.dump();

  int last_status = 0;
  std::string last_problem;
  for (std::size_t attempt = 0; attempt <= params.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
    const auto res = detail::post_json(ep, payload, token, params.request_timeout);
    last_status = res.status;
    if (!res.ok()) {
      last_problem = res.status ? "HTTP " + std::to_string(res.status) : res.error;
      continue;
    }
    try {
      const json doc = json::parse(res.body);
      std::string text = trim(doc.at("choices").at(0).at("message").at("content").get<std::string>());
      if (text.empty()) {
        last_problem = "empty completion";
        continue;
      }
      return text;
    } catch (const json::exception& e) {
      last_problem = std::string("unparseable completion: ") + e.what();
    }
  }
  throw GenerationError("generation for parent " + parent.id + " failed after " +
                            std::to_string(params.retries + 1) + " attempts: " + last_problem,
                        last_status);
}

}  // namespace

void GenParams::validate() const {
  if (!(temperature >= 0.0)) throw ArgumentError("temperature must be >= 0");
  if (children_per_parent < 1) throw ArgumentError("children_per_parent must be >= 1");
  if (max_in_flight < 1) throw ArgumentError("max_in_flight must be >= 1");
}

void SimParams::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError(std::string(name) + " must lie in [0, 1]");
  };
  unit(inherent_bias, "inherent_bias");
  unit(pull, "pull");
  unit(gendered_rate, "gendered_rate");
}

void RemoteGenerator::validate() const {
  parse_endpoint(endpoint);
  if (model.empty()) throw ArgumentError("remote generator needs a model name");
}

std::string recursion_prompt(std::string_view parent_text) {
  std::string p = "Here is an instruction: '";
  p += parent_text;
  p += "'. Write one new, different instruction on a related topic. Reply with only the instruction.";
  return p;
}

double child_stereotype_probability(const Instruction& parent, const SimParams& sim,
                                    const Lexicon& lexicon) {
  const auto score = instruction_rule_score(parent, lexicon);
  double s;
  if (score) {
    s = *score > 0.5 ? 1.0 : 0.0;
  } else {
    s = sim.neutral_parent == NeutralParentState::midpoint ? 0.5 : sim.inherent_bias;
  }
  return (1.0 - sim.pull) * s + sim.pull * sim.inherent_bias;
}

Instruction simulate_child(const Instruction& parent, const SimParams& sim,
                           const Lexicon& lexicon, std::size_t child_index) {
  Instruction child = child_shell(parent, child_index);
  Rng rng(derive_seed(sim.rng_seed, hash_string(parent.id), child_index));

  const bool gendered = rng.bernoulli(sim.gendered_rate) && !lexicon.pronoun_pairs().empty() &&
                        !lexicon.female_occupations().empty() &&
                        !lexicon.male_occupations().empty();
  if (!gendered) {
    const auto& prompts = lexicon.neutral_prompts();
    child.text = prompts.empty() ? parent.text : prompts[rng.index(prompts.size())];
    return child;
  }

  const bool stereotypical = rng.bernoulli(child_stereotype_probability(parent, sim, lexicon));
  // The subject carries over from a parent that is clearly about one gender.
  Gender pronoun;
  switch (gender_association(parent.text, lexicon)) {
    case Association::male: pronoun = Gender::male; break;
    case Association::female: pronoun = Gender::female; break;
    default: pronoun = rng.bernoulli(0.5) ? Gender::male : Gender::female; break;
  }
  const auto& list = lexicon.occupations(stereotypical ? pronoun : opposite(pronoun));
  const Occupation& occupation = list[rng.index(list.size())];

  std::vector<std::string_view> usable;
  for (const auto& t : kChildTemplates) {
    if (t.pairs_needed <= lexicon.pronoun_pairs().size()) usable.push_back(t.text);
  }
  child.text = render_child(usable[rng.index(usable.size())], lexicon, pronoun, occupation);
  return child;
}

std::vector<Instruction> generate_children(const Instruction& parent, const GenParams& params,
                                           const GeneratorKind& kind, const Lexicon& lexicon) {
  if (parent.text.empty()) throw ArgumentError("parent " + parent.id + " has empty text");
  std::vector<Instruction> children;
  children.reserve(params.children_per_parent);
  for (std::size_t i = 0; i < params.children_per_parent; ++i) {
    if (const auto* sim = std::get_if<SimParams>(&kind)) {
      children.push_back(simulate_child(parent, *sim, lexicon, i));
    } else {
      Instruction child = child_shell(parent, i);
      child.text = remote_completion(parent, params, std::get<RemoteGenerator>(kind));
      children.push_back(std::move(child));
    }
  }
  return children;
}

std::vector<Instruction> fan_out(const std::vector<Instruction>& parents,
                                 const GenParams& params, const GeneratorKind& kind,
                                 const Lexicon& lexicon) {
  params.validate();
  const std::size_t per = params.children_per_parent;
  std::vector<Instruction> out(parents.size() * per);

  if (std::holds_alternative<SimParams>(kind)) {
    for (std::size_t p = 0; p < parents.size(); ++p) {
      if (parents[p].text.empty()) throw ArgumentError("parent " + parents[p].id + " has empty text");
      for (std::size_t i = 0; i < per; ++i) {
        out[p * per + i] = simulate_child(parents[p], std::get<SimParams>(kind), lexicon, i);
      }
    }
    return out;
  }

  const auto& remote = std::get<RemoteGenerator>(kind);
  remote.validate();
  for (const auto& parent : parents) {
    if (parent.text.empty()) throw ArgumentError("parent " + parent.id + " has empty text");
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t job = next++; job < out.size() && !failed; job = next++) {
      const auto& parent = parents[job / per];
      try {
        Instruction child = child_shell(parent, job % per);
        child.text = remote_completion(parent, params, remote);
        out[job] = std::move(child);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t n = std::min(params.max_in_flight, out.size());
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace synthbias
