#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "synthbias/corpus.hpp"
#include "synthbias/embedding.hpp"
#include "synthbias/lexicon.hpp"

namespace synthbias {

inline constexpr int kLabelMale = 1;
inline constexpr int kLabelFemale = 0;

struct LabeledVector {
  EmbeddingVector x;
  int label = kLabelFemale;
  std::string source_id;
};

struct TrainOptions {
  std::size_t epochs = 500;
  double learning_rate = 0.1;
  double l2 = 1e-4;
};

struct TrainingMeta {
  std::size_t epochs = 0;
  double learning_rate = 0.0;
  double l2 = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_history;  // loss before each step, then the final loss
};

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
  TrainingMeta meta;
};

struct ProbeReport {
  double bias_down = 0.0;
  std::optional<double> accuracy;  // held-out accuracy, set by evaluate_downstream
  std::size_t probe_size = 0;
  std::size_t train_size = 0;
  std::vector<double> per_example_gap;  // |p(male) - p(female)| per probe item
};

// Labels every instruction whose gender association is unambiguous (male or
// female); neutral and mixed ones are skipped. TrainingDataError unless both
// labels occur.
std::vector<LabeledVector> build_training_set(const Corpus& corpus, const Lexicon& lexicon,
                                              Embedder& embedder);

// Mean cross-entropy plus (l2 / 2) * |w|^2; the intercept is not penalized.
double logistic_loss(const std::vector<double>& weights, double bias,
                     const std::vector<LabeledVector>& data, double l2);

// Gradient of logistic_loss: d/dw in the first `weights.size()` entries,
// d/db last.
std::vector<double> logistic_gradient(const std::vector<double>& weights, double bias,
                                      const std::vector<LabeledVector>& data, double l2);

// Full-batch gradient descent from zero. TrainingError if the loss stops
// being finite.
LogRegModel train_logreg(const std::vector<LabeledVector>& data, const TrainOptions& options);

// p(male) = sigmoid(w.x + b).
double predict_proba(const LogRegModel& model, const EmbeddingVector& x);

double training_accuracy(const LogRegModel& model, const std::vector<LabeledVector>& data);

// bias_down = mean over the probe of |p(male) - p(female)|.
ProbeReport probe_bias(const LogRegModel& model, const std::vector<EmbeddingVector>& probe);

// The fixed probe: the lexicon's neutral prompts, embedded once.
std::vector<EmbeddingVector> neutral_probe(const Lexicon& lexicon, Embedder& embedder);

struct DownstreamOptions {
  TrainOptions train;
  double holdout_fraction = 0.2;
  std::uint64_t split_seed = 0;
};

// Labels the corpus, holds out a stratified fraction for accuracy, trains on
// the rest and scores the probe.
ProbeReport evaluate_downstream(const Corpus& corpus, const Lexicon& lexicon, Embedder& embedder,
                                const std::vector<EmbeddingVector>& probe,
                                const DownstreamOptions& options);

}  // namespace synthbias
