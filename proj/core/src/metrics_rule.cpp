#include "synthbias/metrics_rule.hpp"

#include "synthbias/error.hpp"

namespace synthbias {
namespace {

bool only_space_between(std::string_view text, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i < to; ++i) {
    if (text[i] != ' ' && text[i] != '\t') return false;
  }
  return true;
}

std::string join_tokens(const std::vector<Token>& tokens, std::size_t first, std::size_t n) {
  std::string out;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) out.push_back(' ');
    out += tokens[first + k].lower;
  }
  return out;
}

Association from_gender(Gender g) {
  return g == Gender::male ? Association::male : Association::female;
}

}  // namespace

TermScan scan_terms(std::string_view text, const Lexicon& lexicon) {
  TermScan scan;
  scan.tokens = tokenize(text);
  std::vector<std::string> keys;
  keys.reserve(scan.tokens.size());
  for (const auto& t : scan.tokens) keys.push_back(t.lower);

  std::size_t i = 0;
  while (i < keys.size()) {
    if (auto m = lexicon.match_occupation(keys, i)) {
      TermScan::OccupationHit hit;
      hit.first_token = i;
      hit.length = m->length;
      hit.occupation = m->occupation;
      if (i > 0) {
        if (auto q = lexicon.qualifier_gender(keys[i - 1]);
            q && only_space_between(text, scan.tokens[i - 1].end, scan.tokens[i].begin)) {
          hit.qualifier_token = i - 1;
          hit.qualifier_gender = q;
        }
      }
      scan.occupations.push_back(hit);
      i += m->length;
      continue;
    }
    if (auto g = lexicon.pronoun_gender(keys[i])) scan.pronouns.push_back({i, *g});
    ++i;
  }
  return scan;
}

std::vector<GenderPair> extract_pairs(std::string_view text, const Lexicon& lexicon) {
  const TermScan scan = scan_terms(text, lexicon);
  std::vector<GenderPair> pairs;
  for (const auto& occ : scan.occupations) {
    const std::string name = join_tokens(scan.tokens, occ.first_token, occ.length);
    if (occ.qualifier_gender) {
      pairs.push_back({*occ.qualifier_gender, occ.occupation->gender,
                       scan.tokens[*occ.qualifier_token].lower, name});
      continue;
    }
    for (const auto& p : scan.pronouns) {
      pairs.push_back({p.gender, occ.occupation->gender, scan.tokens[p.token].lower, name});
    }
  }
  return pairs;
}

std::optional<double> instruction_rule_score(std::string_view text, const Lexicon& lexicon) {
  const auto pairs = extract_pairs(text, lexicon);
  if (pairs.empty()) return std::nullopt;
  std::size_t stereo = 0;
  for (const auto& p : pairs) stereo += p.stereotypical() ? 1 : 0;
  return static_cast<double>(stereo) / static_cast<double>(pairs.size());
}

double corpus_rule_bias(const Corpus& corpus, const Lexicon& lexicon) {
  const CorpusStats stats = corpus_stats(corpus, lexicon);
  if (stats.gendered == 0) {
    throw UndefinedMetricError("rule bias undefined: corpus has no gendered instruction");
  }
  return static_cast<double>(stats.stereotypical) / static_cast<double>(stats.gendered);
}

std::string_view to_string(Association a) {
  switch (a) {
    case Association::none: return "none";
    case Association::male: return "male";
    case Association::female: return "female";
    case Association::mixed: return "mixed";
  }
  return "none";
}

Association gender_association(std::string_view text, const Lexicon& lexicon) {
  const TermScan scan = scan_terms(text, lexicon);
  std::optional<Gender> seen;
  auto fold = [&](Gender g) {
    if (!seen) {
      seen = g;
      return true;
    }
    return *seen == g;
  };
  if (!scan.pronouns.empty()) {
    for (const auto& p : scan.pronouns) {
      if (!fold(p.gender)) return Association::mixed;
    }
    return from_gender(*seen);
  }
  for (const auto& o : scan.occupations) {
    if (!fold(o.signal())) return Association::mixed;
  }
  return seen ? from_gender(*seen) : Association::none;
}

}  // namespace synthbias
