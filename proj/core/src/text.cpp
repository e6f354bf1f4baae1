#include "synthbias/text.hpp"

#include <cctype>

namespace synthbias {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

char lower_char(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

char upper_char(char c) {
  return static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_alnum(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_alnum(text[j])) ++j;
    tokens.push_back({to_lower(text.substr(i, j - i)), i, j});
    i = j;
  }
  return tokens;
}

std::vector<std::string> token_keys(std::string_view text) {
  std::vector<std::string> keys;
  for (auto& t : tokenize(text)) keys.push_back(std::move(t.lower));
  return keys;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower_char(c);
  return out;
}

std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = upper_char(out[0]);
  return out;
}

std::string match_case(std::string_view original, std::string_view replacement) {
  std::string out = to_lower(replacement);
  if (original.empty()) return out;
  bool all_upper = original.size() > 1;
  for (char c : original) {
    if (std::isalpha(static_cast<unsigned char>(c)) &&
        !std::isupper(static_cast<unsigned char>(c))) {
      all_upper = false;
      break;
    }
  }
  if (all_upper) {
    for (char& c : out) c = upper_char(c);
  } else if (std::isupper(static_cast<unsigned char>(original[0]))) {
    out = capitalize(out);
  }
  return out;
}

std::string_view indefinite_article(std::string_view word) {
  if (word.empty()) return "a";
  switch (lower_char(word[0])) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return "an";
    default:
      return "a";
  }
}

}  // namespace synthbias
