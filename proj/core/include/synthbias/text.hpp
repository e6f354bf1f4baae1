#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace synthbias {

// A maximal run of ASCII alphanumerics inside a source string. `lower` is the
// matching key; `begin`/`end` index the original bytes so edits can preserve
// everything between tokens.
struct Token {
  std::string lower;
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<Token> tokenize(std::string_view text);

// Lowercased token keys only.
std::vector<std::string> token_keys(std::string_view text);

std::string to_lower(std::string_view s);

// Re-case `replacement` to follow `original`: ALL-CAPS (length > 1) stays
// all caps, a leading capital is kept, otherwise lowercase.
std::string match_case(std::string_view original, std::string_view replacement);

std::string capitalize(std::string_view s);

// "an" before a vowel letter, "a" otherwise.
std::string_view indefinite_article(std::string_view word);

}  // namespace synthbias
