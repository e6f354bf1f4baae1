#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synthbias/corpus.hpp"
#include "synthbias/lexicon.hpp"
#include "synthbias/text.hpp"

namespace synthbias {

// Gendered vocabulary located in one text.
struct TermScan {
  struct PronounHit {
    std::size_t token = 0;
    Gender gender = Gender::male;
  };
  struct OccupationHit {
    std::size_t first_token = 0;
    std::size_t length = 0;
    const Occupation* occupation = nullptr;
    // Set when a "male"/"female" qualifier immediately precedes the
    // occupation ("male nurse").
    std::optional<std::size_t> qualifier_token;
    std::optional<Gender> qualifier_gender;

    // The gender signal this occurrence carries: the qualifier when
    // present, the lexicon association otherwise.
    Gender signal() const { return qualifier_gender.value_or(occupation->gender); }
  };

  std::vector<Token> tokens;
  std::vector<PronounHit> pronouns;
  std::vector<OccupationHit> occupations;
};

TermScan scan_terms(std::string_view text, const Lexicon& lexicon);

struct GenderPair {
  Gender pronoun_gender = Gender::male;
  Gender occupation_gender = Gender::male;
  std::string pronoun;     // the pronoun, or the qualifier standing in for it
  std::string occupation;  // lowercase matched tokens

  bool stereotypical() const { return pronoun_gender == occupation_gender; }
};

// One pair per (pronoun occurrence x unqualified occupation occurrence). A
// qualified occupation pairs only with its qualifier.
std::vector<GenderPair> extract_pairs(std::string_view text, const Lexicon& lexicon);
inline std::vector<GenderPair> extract_pairs(const Instruction& instr, const Lexicon& lexicon) {
  return extract_pairs(instr.text, lexicon);
}

// Stereotypical pairs / all pairs; nullopt when there are no pairs.
std::optional<double> instruction_rule_score(std::string_view text, const Lexicon& lexicon);
inline std::optional<double> instruction_rule_score(const Instruction& instr,
                                                    const Lexicon& lexicon) {
  return instruction_rule_score(instr.text, lexicon);
}

// Majority-stereotypical instructions (score > 0.5) over gendered
// instructions (score present). Throws UndefinedMetricError when the corpus
// has no gendered instruction.
double corpus_rule_bias(const Corpus& corpus, const Lexicon& lexicon);

// Which gender an instruction is about. Pronouns decide when present;
// otherwise the occupation signals do. Disagreeing signals give `mixed`.
enum class Association { none, male, female, mixed };

std::string_view to_string(Association a);
Association gender_association(std::string_view text, const Lexicon& lexicon);

}  // namespace synthbias
