#include "synthbias/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "synthbias/error.hpp"
#include "synthbias/hashing.hpp"
#include "synthbias/random.hpp"
#include "synthbias/strategies.hpp"

namespace synthbias {
namespace {

double stat_from_sum(double group_sum, std::size_t group_n, double total, std::size_t n) {
  const double rest_n = static_cast<double>(n - group_n);
  return std::abs(group_sum / static_cast<double>(group_n) - (total - group_sum) / rest_n);
}

bool at_least(double stat, double observed) {
  return stat >= observed - 1e-12 * std::max(1.0, std::abs(observed));
}

// Canonical (first, second) order so that swapping the arguments replays the
// identical computation.
bool precedes(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) return x.size() < y.size();
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

}  // namespace

std::size_t split_count(std::size_t n_a, std::size_t n_b, std::size_t cap) {
  const std::size_t n = n_a + n_b;
  const std::size_t k = std::min(n_a, n_b);
  // C(n, k) built incrementally; C(n-k+i, i) stays integral at every step.
  __extension__ typedef unsigned __int128 wide;
  wide c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > cap) return cap + 1;
  }
  return static_cast<std::size_t>(c);
}

PermutationResult permutation_test(std::span<const double> a, std::span<const double> b,
                                   const PermutationOptions& options) {
  if (a.empty() || b.empty()) throw ArgumentError("permutation test needs two non-empty samples");
  if (precedes(b, a)) std::swap(a, b);

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  const std::size_t k = a.size();  // a is the smaller (or equal) group
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const double observed =
      stat_from_sum(std::accumulate(a.begin(), a.end(), 0.0), k, total, n);

  PermutationResult result;
  result.observed_stat = observed;
  result.rng_seed = options.rng_seed;

  const std::size_t splits = split_count(a.size(), b.size(), options.exact_cutoff);
  if (splits <= options.exact_cutoff) {
    // Walk all k-subsets of positions in lexicographic order.
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::size_t hits = 0, seen = 0;
    while (true) {
      double s = 0.0;
      for (std::size_t i : idx) s += pooled[i];
      ++seen;
      if (at_least(stat_from_sum(s, k, total, n), observed)) ++hits;
      std::size_t i = k;
      while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    result.exact = true;
    result.iterations = seen;
    result.p_value = static_cast<double>(hits) / static_cast<double>(seen);
    return result;
  }

  if (options.iterations == 0) throw ArgumentError("permutation test needs >= 1 iteration");
  // Each iteration draws the first k slots by a partial Fisher-Yates pass
  // over the running arrangement; its random stream depends only on
  // (rng_seed, iteration).
  std::vector<double> work = pooled;
  std::size_t hits = 0;
  for (std::size_t it = 0; it < options.iterations; ++it) {
    Rng rng(derive_seed(options.rng_seed, hash_string("permutation"), it));
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(work[i], work[i + rng.index(n - i)]);
      s += work[i];
    }
    if (at_least(stat_from_sum(s, k, total, n), observed)) ++hits;
  }
  result.iterations = options.iterations;
  result.p_value =
      static_cast<double>(hits + 1) / static_cast<double>(options.iterations + 1);
  return result;
}

FdrResult bh_fdr(std::span<const double> p_values, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in (0, 1]");
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("p-value outside [0, 1]");
  }
  FdrResult r;
  r.alpha = alpha;
  r.raw_p.assign(p_values.begin(), p_values.end());
  const std::size_t m = p_values.size();
  r.adjusted_p.assign(m, 1.0);
  r.rejected.assign(m, false);
  if (m == 0) return r;

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });

  std::size_t k = 0;  // largest rank with p(rank) <= rank * alpha / m
  for (std::size_t rank = 1; rank <= m; ++rank) {
    if (p_values[order[rank - 1]] <= static_cast<double>(rank) * alpha / static_cast<double>(m)) {
      k = rank;
    }
  }
  for (std::size_t rank = 1; rank <= k; ++rank) r.rejected[order[rank - 1]] = true;

  double running = 1.0;
  for (std::size_t rank = m; rank >= 1; --rank) {
    const double scaled =
        p_values[order[rank - 1]] * static_cast<double>(m) / static_cast<double>(rank);
    // max() guards against p * m / m rounding below p.
    running = std::min(running, std::min(1.0, std::max(scaled, p_values[order[rank - 1]])));
    r.adjusted_p[order[rank - 1]] = running;
  }
  return r;
}

double effect_size(const Trajectory& trajectory, TrajectoryMetric metric) {
  const auto& ms = trajectory.metrics;
  if (ms.size() < 2) throw DataError("effect size needs at least two generations");
  auto pick = [&](const GenerationMetrics& g) {
    return metric == TrajectoryMetric::rule ? g.rule_bias : g.embed_bias;
  };
  const auto first = pick(ms.front());
  const auto last = pick(ms.back());
  if (!first || !last) {
    throw DataError(std::string("effect size: ") +
                    (metric == TrajectoryMetric::rule ? "rule" : "embed") +
                    " metric missing at an endpoint");
  }
  return *last - *first;
}

double relative_change(double from, double to) {
  if (from == 0.0) throw ArgumentError("relative change from zero");
  return (to - from) / from;
}

}  // namespace synthbias
