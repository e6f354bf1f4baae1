// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Tolerances are fixed here and never loosened to pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "synthbias/config.hpp"
#include "synthbias/corpus.hpp"
#include "synthbias/downstream.hpp"
#include "synthbias/embedding.hpp"
#include "synthbias/error.hpp"
#include "synthbias/lexicon.hpp"
#include "synthbias/metrics_rule.hpp"
#include "synthbias/pipeline.hpp"
#include "synthbias/random.hpp"
#include "synthbias/run_store.hpp"
#include "synthbias/statistics.hpp"
#include "synthbias/strategies.hpp"
#include "template_text.hpp"

namespace fs = std::filesystem;
using namespace synthbias;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --- 1. rule metric against a regex recount ------------------------------

struct RecountResult {
  std::size_t gendered = 0;
  std::size_t majority = 0;
};

// Independent recount: regexes over the lowercased text, no tokenizer or
// lexicon logic shared with the library.
class RegexRecount {
 public:
  explicit RegexRecount(const LexiconData& d) {
    for (const auto& p : d.pronoun_pairs) {
      pronoun_[p.male] = 'm';
      pronoun_[p.female] = 'f';
    }
    male_q_ = d.male_qualifier;
    female_q_ = d.female_qualifier;
    auto add = [&](const std::vector<std::string>& list, char g) {
      for (const auto& occ : list) {
        std::string body;
        for (char c : occ) {
          body += (c == ' ') ? std::string("[^a-z0-9]+")
                             : std::string(1, static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        occ_.push_back({std::regex("(^|[^a-z0-9])((" + male_q_ + "|" + female_q_ +
                                   ")[ \\t]+)?(" + body + ")s?(?=[^a-z0-9]|$)"),
                        g});
      }
    };
    add(d.female_occupations, 'f');
    add(d.male_occupations, 'm');
  }

  // Stereotypical and total pair counts for one text.
  std::pair<std::size_t, std::size_t> pairs(const std::string& raw) const {
    std::string text = raw;
    for (char& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::vector<char> pronouns;
    static const std::regex word("[a-z0-9]+");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), word); it != std::sregex_iterator(); ++it) {
      auto f = pronoun_.find(it->str());
      if (f != pronoun_.end()) pronouns.push_back(f->second);
    }
    std::size_t stereo = 0, total = 0;
    for (const auto& [re, g] : occ_) {
      for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        const std::string q = (*it)[3].str();
        if (!q.empty()) {
          ++total;
          stereo += ((q == male_q_ ? 'm' : 'f') == g) ? 1 : 0;
        } else {
          for (char p : pronouns) {
            ++total;
            stereo += (p == g) ? 1 : 0;
          }
        }
      }
    }
    return {stereo, total};
  }

  RecountResult corpus(const Corpus& c) const {
    RecountResult r;
    for (const auto& in : c.instructions) {
      const auto [s, t] = pairs(in.text);
      if (t == 0) continue;
      ++r.gendered;
      if (2 * s > t) ++r.majority;
    }
    return r;
  }

 private:
  std::map<std::string, char> pronoun_;
  std::vector<std::pair<std::regex, char>> occ_;
  std::string male_q_, female_q_;
};

Outcome criterion_rule_oracle(const Lexicon& lex) {
  const auto t0 = Clock::now();
  const RegexRecount oracle(lex.data());
  Rng rng(20240101);
  std::size_t mismatches = 0, undefined_ok = 0;
  for (int i = 0; i < 200; ++i) {
    const Corpus c = testing::random_template_corpus(rng, lex, 1 + rng.index(30));
    const auto want = oracle.corpus(c);
    if (want.gendered == 0) {
      try {
        corpus_rule_bias(c, lex);
        ++mismatches;
      } catch (const UndefinedMetricError&) {
        ++undefined_ok;
      }
      continue;
    }
    const double expected = static_cast<double>(want.majority) / static_cast<double>(want.gendered);
    if (corpus_rule_bias(c, lex) != expected) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 5.0,
          std::to_string(mismatches) + " mismatches in 200 corpora, " + fmt("%.2f s", secs)};
}

// --- 2. fan-out size law ---------------------------------------------------

Outcome criterion_fan_out(const Lexicon& lex, const MetricContext& ctx) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.strategy.kind = StrategyKind::vanilla;
  cfg.generations = 3;
  cfg.seed = {0.1, 50, 11};
  cfg.generator = SimParams{.rng_seed = 12};
  cfg.downstream.reset();
  const auto t = run_experiment(cfg, lex, ctx);
  std::vector<std::size_t> sizes;
  for (const auto& c : t.corpora) sizes.push_back(c.size());
  const double secs = seconds_since(t0);
  const std::vector<std::size_t> want{50, 250, 1250, 6250};
  std::string shown;
  for (auto s : sizes) shown += (shown.empty() ? "" : ",") + std::to_string(s);
  return {sizes == want && secs < 30.0, "sizes [" + shown + "], " + fmt("%.2f s", secs)};
}

// --- 3. contrastive balance ------------------------------------------------

Outcome criterion_contrastive_balance(const Lexicon& lex) {
  std::size_t steps = 0, unbalanced = 0, size_mismatch = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (double level : {0.1, 0.3, 0.6}) {
      ExperimentConfig cfg;
      cfg.strategy.kind = StrategyKind::contrastive;
      cfg.seed = {level, 20, seed};
      cfg.generator = SimParams{.rng_seed = seed * 7};
      cfg.rng_seed = seed;
      ExperimentConfig padded = cfg;
      padded.strategy.kind = StrategyKind::size_matched;

      Corpus c = build_seed_corpus(level, 20, lex, seed, StrategyKind::contrastive);
      Corpus p = c;
      for (int g = 1; g <= 3; ++g) {
        c = run_generation_step(c, cfg, lex);
        p = run_generation_step(p, padded, lex);
        std::size_t male = 0, female = 0;
        for (const auto& in : c.instructions) {
          const auto a = gender_association(in.text, lex);
          male += a == Association::male;
          female += a == Association::female;
        }
        ++steps;
        if (male != female) ++unbalanced;
        if (p.size() != c.size()) ++size_mismatch;
        // Continue both lineages from the same parents.
        p = c;
      }
    }
  }
  return {unbalanced == 0 && size_mismatch == 0,
          std::to_string(steps) + " steps, " + std::to_string(unbalanced) + " unbalanced, " +
              std::to_string(size_mismatch) + " size mismatches"};
}

// --- 4. gender-swap involution ---------------------------------------------

Outcome criterion_involution(const Lexicon& lex) {
  Rng rng(424242);
  std::size_t failures = 0;
  std::string example;
  for (int i = 0; i < 500; ++i) {
    const std::string x = testing::random_template_text(rng, lex);
    const std::string back = gender_swap_text(gender_swap_text(x, lex), lex);
    if (back != x) {
      if (failures++ == 0) example = " e.g. '" + x + "' -> '" + back + "'";
    }
  }
  return {failures == 0, std::to_string(failures) + " of 500 not restored" + example};
}

// --- 5. equilibrium dynamics -----------------------------------------------

std::vector<double> mean_rule_trajectory(const Lexicon& lex, double seed_target) {
  std::vector<double> mean(4, 0.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg;
    cfg.generator = SimParams{.inherent_bias = 0.12, .pull = 0.35, .rng_seed = 1000 + seed};
    Corpus c = build_seed_corpus(seed_target, 20, lex, seed);
    mean[0] += corpus_rule_bias(c, lex) / 5.0;
    for (int g = 1; g <= 3; ++g) {
      c = run_generation_step(c, cfg, lex);
      mean[g] += corpus_rule_bias(c, lex) / 5.0;
    }
  }
  return mean;
}

Outcome criterion_equilibrium(const Lexicon& lex) {
  const auto t0 = Clock::now();
  const double b = 0.12;
  const auto low = mean_rule_trajectory(lex, 0.02);
  const auto high = mean_rule_trajectory(lex, 0.60);
  const bool up = low[0] < low[1] && low[1] < low[2] && low[2] < low[3];
  const bool down = high[0] > high[1] && high[1] > high[2] && high[2] > high[3];
  const bool near = std::abs(low[3] - b) <= 0.05 && std::abs(high[3] - b) <= 0.05;
  auto show = [](const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : " -> ") + fmt("%.3f", x);
    return s;
  };
  return {up && down && near && seconds_since(t0) < 60.0,
          "low " + show(low) + ", high " + show(high) + ", " + fmt("%.2f s", seconds_since(t0))};
}

// --- 6. contrastive paradox ------------------------------------------------

Outcome criterion_paradox(const Lexicon& lex, const MetricContext& ctx) {
  double vanilla = 0.0, contrastive = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (auto kind : {StrategyKind::vanilla, StrategyKind::contrastive}) {
      ExperimentConfig cfg;
      cfg.strategy.kind = kind;
      cfg.seed = {0.1, 50, seed};
      cfg.generator = SimParams{.rng_seed = 500 + seed};
      cfg.rng_seed = seed;
      Corpus c = build_seed_corpus(0.1, 50, lex, seed, kind);
      for (int g = 1; g <= 3; ++g) c = run_generation_step(c, cfg, lex);
      DownstreamOptions opts;
      opts.split_seed = seed;
      const auto r = evaluate_downstream(c, lex, *ctx.embedder, ctx.probe, opts);
      (kind == StrategyKind::vanilla ? vanilla : contrastive) += r.bias_down / 5.0;
    }
  }
  return {contrastive < 0.05 && vanilla >= 5.0 * contrastive,
          "contrastive " + fmt("%.4f", contrastive) + ", vanilla " + fmt("%.4f", vanilla) +
              " (ratio " + fmt("%.1f", contrastive > 0 ? vanilla / contrastive : INFINITY) + ")"};
}

// --- 7. logistic regression -------------------------------------------------

Outcome criterion_logreg() {
  Rng rng(77);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t dim = 2 + rng.index(15);
    const std::size_t n = 4 + rng.index(30);
    std::vector<LabeledVector> data;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> raw(dim);
      for (auto& v : raw) v = rng.uniform() * 2.0 - 1.0;
      data.push_back({EmbeddingVector::normalize(raw), static_cast<int>(i % 2), ""});
    }
    std::vector<double> w(dim);
    for (auto& v : w) v = rng.uniform() * 4.0 - 2.0;
    const double b = rng.uniform() - 0.5;
    const double l2 = rng.uniform() * 0.1;
    const auto grad = logistic_gradient(w, b, data, l2);
    const double h = 1e-6;
    for (std::size_t j = 0; j <= dim; ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (j < dim) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd = (logistic_loss(wp, bp, data, l2) - logistic_loss(wm, bm, data, l2)) / (2 * h);
      const double rel = std::abs(grad[j] - fd) / std::max({std::abs(grad[j]), std::abs(fd), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  const std::vector<LabeledVector> two{{EmbeddingVector::normalize({1.0, 0.2}), kLabelMale, "a"},
                                       {EmbeddingVector::normalize({-1.0, 0.2}), kLabelFemale, "b"}};
  const auto model = train_logreg(two, {});
  const double acc = training_accuracy(model, two);
  return {worst < 1e-4 && acc == 1.0,
          "max gradient rel. error " + fmt("%.2e", worst) + ", separable accuracy " + fmt("%.2f", acc)};
}

// --- 8. permutation test -----------------------------------------------------

Outcome criterion_permutation() {
  Rng rng(8080);
  std::size_t instances = 0, outside = 0;
  double worst_z = 0.0;
  const std::vector<std::pair<std::size_t, std::size_t>> shapes{
      {2, 2}, {3, 3}, {2, 6}, {4, 4}, {3, 7}, {5, 5}, {4, 8}, {6, 6}, {5, 9}, {7, 7}, {3, 17}, {2, 40}};
  for (const auto& [na, nb] : shapes) {
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<double> a(na), b(nb);
      const bool binary = rep % 2 == 0;
      for (auto& v : a) v = binary ? static_cast<double>(rng.bernoulli(0.3)) : rng.uniform();
      for (auto& v : b) v = binary ? static_cast<double>(rng.bernoulli(0.6)) : rng.uniform() + 0.2;
      PermutationOptions exact_opts;
      exact_opts.exact_cutoff = 10'000;
      const auto exact = permutation_test(a, b, exact_opts);
      PermutationOptions sampled_opts;
      sampled_opts.exact_cutoff = 0;
      sampled_opts.iterations = 5000;
      sampled_opts.rng_seed = rng.next_u64();
      const auto sampled = permutation_test(a, b, sampled_opts);
      const double p = exact.p_value;
      const double tol = 3.0 * std::sqrt(p * (1.0 - p) / 5000.0);
      const double diff = std::abs(sampled.p_value - p);
      ++instances;
      if (!exact.exact || sampled.exact || diff > tol) ++outside;
      if (tol > 0) worst_z = std::max(worst_z, diff / (tol / 3.0));
    }
  }
  const auto corner = permutation_test(std::vector<double>{0, 0, 0}, std::vector<double>{1, 1, 1});
  return {outside == 0 && corner.p_value == 0.1 && corner.exact,
          std::to_string(outside) + " of " + std::to_string(instances) +
              " outside 3 sigma (worst " + fmt("%.2f", worst_z) + " sigma), {0,0,0} vs {1,1,1} p = " +
              fmt("%.6g", corner.p_value)};
}

// --- 9. BH-FDR ----------------------------------------------------------------

Outcome criterion_bh() {
  const auto all = bh_fdr(std::vector<double>{0.01, 0.02, 0.04}, 0.05);
  const auto none = bh_fdr(std::vector<double>{0.8, 0.9}, 0.05);
  const bool all_rejected = std::all_of(all.rejected.begin(), all.rejected.end(), [](bool r) { return r; });
  const bool none_rejected = std::none_of(none.rejected.begin(), none.rejected.end(), [](bool r) { return r; });
  const std::vector<double> want_all{0.03, 0.03, 0.04};
  const std::vector<double> want_none{0.9, 0.9};
  bool values = true;
  for (std::size_t i = 0; i < 3; ++i) values &= std::abs(all.adjusted_p[i] - want_all[i]) < 1e-12;
  for (std::size_t i = 0; i < 2; ++i) values &= std::abs(none.adjusted_p[i] - want_none[i]) < 1e-12;

  // Monotone: ordering raw p's orders adjusted p's the same way.
  Rng rng(99);
  bool monotone = true;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> p(1 + rng.index(20));
    for (auto& v : p) v = rng.uniform();
    const auto r = bh_fdr(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[i] <= p[j] && r.adjusted_p[i] > r.adjusted_p[j]) monotone = false;
      }
    }
  }
  return {all_rejected && none_rejected && values && monotone,
          std::string("{0.01,0.02,0.04} ") + (all_rejected ? "all rejected" : "NOT all rejected") +
              ", {0.8,0.9} " + (none_rejected ? "none rejected" : "some rejected") +
              (values ? ", adjusted values match" : ", adjusted values differ") +
              (monotone ? ", monotone" : ", NOT monotone")};
}

// --- 10. resumable determinism ---------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "timeline.jsonl") continue;
    files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

std::set<std::string> cache_lines(const fs::path& dir) {
  std::set<std::string> lines;
  if (!fs::exists(dir)) return lines;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::istringstream in(read_file(e.path()));
    std::string line;
    while (std::getline(in, line)) lines.insert(e.path().filename().string() + ":" + line);
  }
  return lines;
}

Outcome criterion_resume() {
  const fs::path base = fs::temp_directory_path() / ("synthbias_accept_" + std::to_string(::getpid()));
  fs::remove_all(base);
  GridConfig cfg;
  cfg.name = "acceptance-resume";
  cfg.seed_corpus_size = 8;
  cfg.stats_iterations = 500;

  RunOptions straight;
  straight.store_root = base / "straight";
  const auto a = run_grid(cfg, straight);

  RunOptions interrupted = straight;
  interrupted.store_root = base / "resumed";
  interrupted.stop_after_generation = 1;
  const auto first = run_grid(cfg, interrupted);
  interrupted.stop_after_generation.reset();
  const auto b = run_grid(cfg, interrupted);

  RunStore sa(straight.store_root), sb(interrupted.store_root);
  run_stats(sa, a.run_id);
  run_stats(sb, b.run_id);

  const auto fa = snapshot(sa.run_dir(a.run_id));
  const auto fb = snapshot(sb.run_dir(b.run_id));
  const bool same_files = fa == fb;
  const bool same_cache = cache_lines(straight.store_root / "embedding_cache") ==
                          cache_lines(interrupted.store_root / "embedding_cache");
  std::size_t trajectories = 0;
  for (const auto& [name, _] : fa) trajectories += name.ends_with("gen_3.metrics.json");
  fs::remove_all(base);
  return {same_files && same_cache && a.run_id == b.run_id && !first.complete && b.complete &&
              trajectories == 12,
          std::to_string(fa.size()) + " files compared, " + (same_files ? "identical" : "DIFFERENT") +
              ", cache " + (same_cache ? "identical" : "DIFFERENT") + ", " +
              std::to_string(trajectories) + " trajectories"};
}

// --- 11. effect-size arithmetic --------------------------------------------

Outcome criterion_effect_sizes() {
  Trajectory t;
  for (int g = 0; g < 4; ++g) {
    GenerationMetrics m;
    m.generation = g;
    m.embed_bias = std::vector<double>{0.080, 0.112, 0.120, 0.109}[g];
    m.rule_bias = std::vector<double>{0.200, 0.167, 0.267, 0.342}[g];
    t.metrics.push_back(m);
  }
  const double de = effect_size(t, TrajectoryMetric::embed);
  const double dr = effect_size(t, TrajectoryMetric::rule);
  const double re = 100.0 * relative_change(0.080, 0.109);
  const double rr = 100.0 * relative_change(0.200, 0.342);
  const bool ok = std::abs(de - 0.029) < 1e-12 && std::abs(dr - 0.142) < 1e-12 &&
                  std::abs(re - 36.0) <= 0.5 && std::abs(rr - 71.0) <= 0.5;
  return {ok, "embed " + fmt("%+.3f", de) + " (" + fmt("%+.2f%%", re) + "), rule " + fmt("%+.3f", dr) +
                  " (" + fmt("%+.2f%%", rr) + ")"};
}

}  // namespace

int main() {
  const Lexicon lex = load_lexicon();
  auto embedder = make_embedder(DeterministicEmbedderSpec{});
  EmbeddingCache cache;
  CachingEmbedder cached(*embedder, cache);
  const MetricContext ctx = make_metric_context(lex, cached);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"rule metric matches independent recount", [&] { return criterion_rule_oracle(lex); }},
      {"fan-out size law 50/250/1250/6250", [&] { return criterion_fan_out(lex, ctx); }},
      {"contrastive exact balance and size-matched parity", [&] { return criterion_contrastive_balance(lex); }},
      {"gender-swap involution", [&] { return criterion_involution(lex); }},
      {"equilibrium dynamics toward inherent bias", [&] { return criterion_equilibrium(lex); }},
      {"contrastive paradox on downstream probe", [&] { return criterion_paradox(lex, ctx); }},
      {"logistic regression gradient and separability", [] { return criterion_logreg(); }},
      {"permutation test exact vs sampled", [] { return criterion_permutation(); }},
      {"Benjamini-Hochberg step-up", [] { return criterion_bh(); }},
      {"interrupted and resumed run is byte-identical", [] { return criterion_resume(); }},
      {"effect-size arithmetic", [] { return criterion_effect_sizes(); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
