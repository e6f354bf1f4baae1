#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace synthbias {

enum class Gender { male, female };

constexpr Gender opposite(Gender g) {
  return g == Gender::male ? Gender::female : Gender::male;
}

std::string_view to_string(Gender g);

struct PronounPair {
  std::string male;
  std::string female;
  bool operator==(const PronounPair&) const = default;
};

struct Occupation {
  std::string display;               // as written in the lexicon ("CEO")
  std::vector<std::string> tokens;   // lowercase match key ("ceo")
  Gender gender = Gender::female;
};

// Unvalidated lexicon content, as read from a file or built in code.
struct LexiconData {
  std::vector<PronounPair> pronoun_pairs;
  std::vector<std::string> female_occupations;
  std::vector<std::string> male_occupations;
  std::vector<std::string> neutral_prompts;
  std::string male_qualifier = "male";
  std::string female_qualifier = "female";
};

// Gendered vocabulary plus neutral prompt templates. Immutable once built;
// construction enforces the invariants (no occupation in both lists,
// distinct pronoun pairs, no token used as both a male and a female form,
// neutral prompts free of gendered vocabulary).
class Lexicon {
 public:
  static Lexicon create(LexiconData data);

  const std::vector<PronounPair>& pronoun_pairs() const { return pronoun_pairs_; }
  const std::vector<Occupation>& female_occupations() const { return female_; }
  const std::vector<Occupation>& male_occupations() const { return male_; }
  const std::vector<Occupation>& occupations(Gender g) const {
    return g == Gender::male ? male_ : female_;
  }
  const std::vector<std::string>& neutral_prompts() const { return neutral_; }
  const std::string& qualifier(Gender g) const {
    return g == Gender::male ? male_qualifier_ : female_qualifier_;
  }

  // Gender of a lowercase pronoun token, if it is one.
  std::optional<Gender> pronoun_gender(std::string_view lower) const;
  std::optional<Gender> qualifier_gender(std::string_view lower) const;

  // Opposite-gender forms of a pronoun, in lexicon order. Usually one; a
  // female form shared by several pairs ("her" -> him, his) yields several.
  std::vector<std::string_view> counterparts(std::string_view lower) const;

  // Longest occupation whose token sequence starts at tokens[pos]. The last
  // token may carry a plural "s". Returns the occupation and the number of
  // tokens consumed.
  struct OccupationMatch {
    const Occupation* occupation = nullptr;
    std::size_t length = 0;
  };
  std::optional<OccupationMatch> match_occupation(
      const std::vector<std::string>& tokens, std::size_t pos) const;

  // Canonical serialized form (the lexicon file schema) and its digest.
  std::string to_json() const;
  std::string digest() const;

  LexiconData data() const;

 private:
  Lexicon() = default;

  std::vector<PronounPair> pronoun_pairs_;
  std::vector<Occupation> female_;
  std::vector<Occupation> male_;
  std::vector<std::string> neutral_;
  std::string male_qualifier_;
  std::string female_qualifier_;
};

// Text of the shipped default lexicon (core/data/default_lexicon.json,
// embedded at build time).
std::string_view default_lexicon_json();

// Parses lexicon file text. Throws ParseError (with line) on malformed input
// and ValidationError on invariant violations.
Lexicon parse_lexicon(std::string_view json_text);

// Loads the lexicon at `source`, or the shipped default when absent.
Lexicon load_lexicon(const std::optional<std::filesystem::path>& source = std::nullopt);

}  // namespace synthbias
