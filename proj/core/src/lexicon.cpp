#include "synthbias/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "synthbias/error.hpp"
#include "synthbias/hashing.hpp"
#include "synthbias/text.hpp"

namespace synthbias {
namespace {

using nlohmann::json;

std::string single_token(const std::string& raw, const char* what) {
  auto keys = token_keys(raw);
  if (keys.size() != 1 || keys[0] != to_lower(raw)) {
    throw ValidationError(std::string(what) + " '" + raw +
                          "' must be a single alphanumeric word");
  }
  return keys[0];
}

std::vector<Occupation> build_occupations(const std::vector<std::string>& raw,
                                          Gender gender) {
  std::vector<Occupation> out;
  std::set<std::vector<std::string>> seen;
  for (const auto& display : raw) {
    auto tokens = token_keys(display);
    if (tokens.empty()) {
      throw ValidationError("empty occupation in " + std::string(to_string(gender)) +
                            "_occupations");
    }
    if (!seen.insert(tokens).second) {
      throw ValidationError("occupation '" + display + "' listed twice in " +
                            std::string(to_string(gender)) + "_occupations");
    }
    out.push_back({display, std::move(tokens), gender});
  }
  return out;
}

int line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
}

std::vector<std::string> string_list(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ParseError(std::string("missing key '") + key + "'", 0);
  const auto& node = doc.at(key);
  if (!node.is_array()) throw ParseError(std::string("'") + key + "' must be a list", 0);
  std::vector<std::string> out;
  for (const auto& item : node) {
    if (!item.is_string()) {
      throw ParseError(std::string("'") + key + "' must contain only strings", 0);
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

Lexicon Lexicon::create(LexiconData data) {
  Lexicon lex;

  std::set<std::string> male_forms, female_forms;
  for (const auto& pair : data.pronoun_pairs) {
    PronounPair p{single_token(pair.male, "pronoun"), single_token(pair.female, "pronoun")};
    if (p.male == p.female) {
      throw ValidationError("pronoun pair '" + p.male + "' maps a form onto itself");
    }
    if (std::find(lex.pronoun_pairs_.begin(), lex.pronoun_pairs_.end(), p) !=
        lex.pronoun_pairs_.end()) {
      throw ValidationError("duplicate pronoun pair (" + p.male + ", " + p.female + ")");
    }
    male_forms.insert(p.male);
    female_forms.insert(p.female);
    lex.pronoun_pairs_.push_back(std::move(p));
  }
  for (const auto& m : male_forms) {
    if (female_forms.count(m)) {
      throw ValidationError("pronoun '" + m + "' is listed as both a male and a female form");
    }
  }

  lex.male_qualifier_ = single_token(data.male_qualifier, "qualifier");
  lex.female_qualifier_ = single_token(data.female_qualifier, "qualifier");
  if (lex.male_qualifier_ == lex.female_qualifier_) {
    throw ValidationError("male and female qualifiers must differ");
  }
  for (const auto* q : {&lex.male_qualifier_, &lex.female_qualifier_}) {
    if (male_forms.count(*q) || female_forms.count(*q)) {
      throw ValidationError("qualifier '" + *q + "' collides with a pronoun");
    }
  }

  lex.female_ = build_occupations(data.female_occupations, Gender::female);
  lex.male_ = build_occupations(data.male_occupations, Gender::male);
  for (const auto& f : lex.female_) {
    for (const auto& m : lex.male_) {
      if (f.tokens == m.tokens) {
        throw ValidationError("occupation '" + f.display +
                              "' appears in both female_occupations and male_occupations");
      }
    }
  }
  for (const auto* list : {&lex.female_, &lex.male_}) {
    for (const auto& occ : *list) {
      for (const auto& tok : occ.tokens) {
        if (lex.pronoun_gender(tok) || lex.qualifier_gender(tok)) {
          throw ValidationError("occupation '" + occ.display +
                                "' contains gendered word '" + tok + "'");
        }
      }
    }
  }

  for (const auto& prompt : data.neutral_prompts) {
    auto tokens = token_keys(prompt);
    if (tokens.empty()) throw ValidationError("empty neutral prompt");
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (lex.pronoun_gender(tokens[i]) || lex.qualifier_gender(tokens[i]) ||
          lex.match_occupation(tokens, i)) {
        throw ValidationError("neutral prompt '" + prompt + "' contains gendered word '" +
                              tokens[i] + "'");
      }
    }
  }
  lex.neutral_ = std::move(data.neutral_prompts);
  return lex;
}

std::optional<Gender> Lexicon::pronoun_gender(std::string_view lower) const {
  for (const auto& p : pronoun_pairs_) {
    if (p.male == lower) return Gender::male;
    if (p.female == lower) return Gender::female;
  }
  return std::nullopt;
}

std::optional<Gender> Lexicon::qualifier_gender(std::string_view lower) const {
  if (lower == male_qualifier_) return Gender::male;
  if (lower == female_qualifier_) return Gender::female;
  return std::nullopt;
}

std::vector<std::string_view> Lexicon::counterparts(std::string_view lower) const {
  std::vector<std::string_view> out;
  for (const auto& p : pronoun_pairs_) {
    std::string_view other;
    if (p.male == lower) other = p.female;
    else if (p.female == lower) other = p.male;
    else continue;
    if (std::find(out.begin(), out.end(), other) == out.end()) out.push_back(other);
  }
  return out;
}

std::optional<Lexicon::OccupationMatch> Lexicon::match_occupation(
    const std::vector<std::string>& tokens, std::size_t pos) const {
  std::optional<OccupationMatch> best;
  for (const auto* list : {&female_, &male_}) {
    for (const auto& occ : *list) {
      const std::size_t n = occ.tokens.size();
      if (pos + n > tokens.size()) continue;
      if (best && best->length >= n) continue;
      bool ok = true;
      for (std::size_t k = 0; k < n && ok; ++k) {
        const auto& have = tokens[pos + k];
        const auto& want = occ.tokens[k];
        if (have == want) continue;
        ok = (k + 1 == n) && have.size() == want.size() + 1 &&
             have.compare(0, want.size(), want) == 0 && have.back() == 's';
      }
      if (ok) best = OccupationMatch{&occ, n};
    }
  }
  return best;
}

LexiconData Lexicon::data() const {
  LexiconData d;
  d.pronoun_pairs = pronoun_pairs_;
  for (const auto& o : female_) d.female_occupations.push_back(o.display);
  for (const auto& o : male_) d.male_occupations.push_back(o.display);
  d.neutral_prompts = neutral_;
  d.male_qualifier = male_qualifier_;
  d.female_qualifier = female_qualifier_;
  return d;
}

std::string Lexicon::to_json() const {
  json doc;
  json pairs = json::array();
  for (const auto& p : pronoun_pairs_) pairs.push_back({p.male, p.female});
  doc["pronoun_pairs"] = pairs;
  auto displays = [](const std::vector<Occupation>& list) {
    json arr = json::array();
    for (const auto& o : list) arr.push_back(o.display);
    return arr;
  };
  doc["female_occupations"] = displays(female_);
  doc["male_occupations"] = displays(male_);
  doc["neutral_prompts"] = neutral_;
  doc["qualifier_terms"] = {{"male", male_qualifier_}, {"female", female_qualifier_}};
  return doc.dump(2);
}

std::string Lexicon::digest() const { return sha256_hex(to_json()); }

Lexicon parse_lexicon(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed lexicon: ") + e.what(),
                     line_of_byte(json_text, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!doc.is_object()) throw ParseError("lexicon must be an object", 1);

  LexiconData data;
  if (!doc.contains("pronoun_pairs") || !doc.at("pronoun_pairs").is_array()) {
    throw ParseError("'pronoun_pairs' must be a list of [male, female] pairs", 0);
  }
  for (const auto& item : doc.at("pronoun_pairs")) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_string() || !item[1].is_string()) {
      throw ParseError("'pronoun_pairs' entries must be [male, female] string pairs", 0);
    }
    data.pronoun_pairs.push_back({item[0].get<std::string>(), item[1].get<std::string>()});
  }
  data.female_occupations = string_list(doc, "female_occupations");
  data.male_occupations = string_list(doc, "male_occupations");
  data.neutral_prompts = string_list(doc, "neutral_prompts");
  if (doc.contains("qualifier_terms")) {
    const auto& q = doc.at("qualifier_terms");
    if (!q.is_object() || !q.value("male", json()).is_string() ||
        !q.value("female", json()).is_string()) {
      throw ParseError("'qualifier_terms' must map 'male' and 'female' to strings", 0);
    }
    data.male_qualifier = q.at("male").get<std::string>();
    data.female_qualifier = q.at("female").get<std::string>();
  }
  return Lexicon::create(std::move(data));
}

Lexicon load_lexicon(const std::optional<std::filesystem::path>& source) {
  if (!source) return parse_lexicon(default_lexicon_json());
  std::ifstream in(*source, std::ios::binary);
  if (!in) throw ParseError("cannot open lexicon file " + source->string(), 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_lexicon(buf.str());
}

}  // namespace synthbias
