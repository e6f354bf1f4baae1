#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace synthbias {

struct Trajectory;

struct PermutationResult {
  double observed_stat = 0.0;  // |mean(a) - mean(b)|
  double p_value = 1.0;
  std::size_t iterations = 0;  // label splits evaluated
  std::uint64_t rng_seed = 0;
  bool exact = false;          // all splits enumerated
};

struct PermutationOptions {
  std::size_t iterations = 5000;
  std::uint64_t rng_seed = 0;
  // Enumerate every split instead of sampling when C(|a|+|b|, |a|) is at most
  // this many.
  std::size_t exact_cutoff = 10'000;
};

// Two-sided label-permutation test on the absolute mean difference.
// Enumerated: p = #{split stat >= observed} / #splits (the observed split is
// one of them). Sampled: p = (1 + #{stat >= observed}) / (iterations + 1).
// Symmetric in (a, b). ArgumentError when either sample is empty.
PermutationResult permutation_test(std::span<const double> a, std::span<const double> b,
                                   const PermutationOptions& options = {});

// Number of distinct label splits, saturating at `cap` + 1.
std::size_t split_count(std::size_t n_a, std::size_t n_b, std::size_t cap);

struct FdrResult {
  std::vector<double> raw_p;
  std::vector<double> adjusted_p;
  std::vector<bool> rejected;
  double alpha = 0.05;
};

// Benjamini-Hochberg step-up, results in input order. ArgumentError for any p
// outside [0, 1].
FdrResult bh_fdr(std::span<const double> p_values, double alpha = 0.05);

enum class TrajectoryMetric { rule, embed };

// Final-generation value minus the generation-0 value. DataError when the
// metric is missing at either end or there is only one generation.
double effect_size(const Trajectory& trajectory, TrajectoryMetric metric);

// (to - from) / from. ArgumentError when from == 0.
double relative_change(double from, double to);

}  // namespace synthbias
