#include "synthbias/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "synthbias/error.hpp"
#include "synthbias/hashing.hpp"
#include "synthbias/metrics_rule.hpp"
#include "synthbias/random.hpp"

namespace synthbias {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// Row-major design matrix; keeps the epoch loop cache-friendly.
struct Design {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> x;
  std::vector<int> y;

  explicit Design(const std::vector<LabeledVector>& data) : n(data.size()) {
    if (n == 0) throw ArgumentError("empty training data");
    d = data.front().x.dimension();
    x.reserve(n * d);
    y.reserve(n);
    for (const auto& ex : data) {
      if (ex.x.dimension() != d) throw ArgumentError("training vectors differ in dimension");
      if (ex.label != kLabelMale && ex.label != kLabelFemale) {
        throw ArgumentError("labels must be 0 (female) or 1 (male)");
      }
      x.insert(x.end(), ex.x.values().begin(), ex.x.values().end());
      y.push_back(ex.label);
    }
  }

  double logit(std::size_t i, const std::vector<double>& w, double b) const {
    const double* row = &x[i * d];
    double z = b;
    for (std::size_t k = 0; k < d; ++k) z += w[k] * row[k];
    return z;
  }
};

double penalty(const std::vector<double>& w, double l2) {
  double s = 0.0;
  for (double v : w) s += v * v;
  return 0.5 * l2 * s;
}

// Loss at (w, b); when `grad` is non-null also writes the gradient (size d+1).
// The residual is written as -sigmoid(-z) for positives and sigmoid(z) for
// negatives so that flipping every label negates it bit-for-bit.
double loss_and_gradient(const Design& m, const std::vector<double>& w, double b, double l2,
                         std::vector<double>* grad) {
  if (w.size() != m.d) throw ArgumentError("weight dimension does not match data");
  double loss = 0.0;
  if (grad) grad->assign(m.d + 1, 0.0);
  for (std::size_t i = 0; i < m.n; ++i) {
    const double z = m.logit(i, w, b);
    double r;
    if (m.y[i] == kLabelMale) {
      loss += softplus(-z);
      r = -sigmoid(-z);
    } else {
      loss += softplus(z);
      r = sigmoid(z);
    }
    if (grad) {
      const double* row = &m.x[i * m.d];
      for (std::size_t k = 0; k < m.d; ++k) (*grad)[k] += r * row[k];
      (*grad)[m.d] += r;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(m.n);
  if (grad) {
    for (std::size_t k = 0; k < m.d; ++k) (*grad)[k] = (*grad)[k] * inv_n + l2 * w[k];
    (*grad)[m.d] *= inv_n;
  }
  return loss * inv_n + penalty(w, l2);
}

}  // namespace

std::vector<LabeledVector> build_training_set(const Corpus& corpus, const Lexicon& lexicon,
                                              Embedder& embedder) {
  std::vector<std::string> texts;
  std::vector<int> labels;
  std::vector<std::string> ids;
  for (const auto& instr : corpus.instructions) {
    const Association a = gender_association(instr.text, lexicon);
    if (a != Association::male && a != Association::female) continue;
    texts.push_back(instr.text);
    labels.push_back(a == Association::male ? kLabelMale : kLabelFemale);
    ids.push_back(instr.id);
  }
  bool has_male = false, has_female = false;
  for (int l : labels) (l == kLabelMale ? has_male : has_female) = true;
  if (!has_male || !has_female) {
    throw TrainingDataError("training set needs both labels (corpus generation " +
                            std::to_string(corpus.generation) + " has " +
                            std::to_string(labels.size()) + " labeled instructions)");
  }
  auto vectors = embedder.embed_batch(texts);
  std::vector<LabeledVector> out;
  out.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    out.push_back({std::move(vectors[i]), labels[i], std::move(ids[i])});
  }
  return out;
}

double logistic_loss(const std::vector<double>& weights, double bias,
                     const std::vector<LabeledVector>& data, double l2) {
  return loss_and_gradient(Design(data), weights, bias, l2, nullptr);
}

std::vector<double> logistic_gradient(const std::vector<double>& weights, double bias,
                                      const std::vector<LabeledVector>& data, double l2) {
  std::vector<double> g;
  loss_and_gradient(Design(data), weights, bias, l2, &g);
  return g;
}

LogRegModel train_logreg(const std::vector<LabeledVector>& data, const TrainOptions& options) {
  bool has_male = false, has_female = false;
  for (const auto& ex : data) (ex.label == kLabelMale ? has_male : has_female) = true;
  if (!has_male || !has_female) throw TrainingDataError("train_logreg needs both labels");
  if (!(options.learning_rate > 0.0) || !(options.l2 >= 0.0)) {
    throw ArgumentError("learning_rate must be > 0 and l2 >= 0");
  }

  const Design m(data);
  LogRegModel model;
  model.weights.assign(m.d, 0.0);
  model.bias = 0.0;
  model.meta.epochs = options.epochs;
  model.meta.learning_rate = options.learning_rate;
  model.meta.l2 = options.l2;
  model.meta.loss_history.reserve(options.epochs + 1);

  std::vector<double> grad;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const double loss = loss_and_gradient(m, model.weights, model.bias, options.l2, &grad);
    if (!std::isfinite(loss)) {
      throw TrainingError("logistic regression diverged at epoch " + std::to_string(epoch),
                          static_cast<int>(epoch));
    }
    model.meta.loss_history.push_back(loss);
    for (std::size_t k = 0; k < m.d; ++k) model.weights[k] -= options.learning_rate * grad[k];
    model.bias -= options.learning_rate * grad[m.d];
  }
  const double final_loss = loss_and_gradient(m, model.weights, model.bias, options.l2, nullptr);
  if (!std::isfinite(final_loss)) {
    throw TrainingError("logistic regression diverged at epoch " + std::to_string(options.epochs),
                        static_cast<int>(options.epochs));
  }
  model.meta.loss_history.push_back(final_loss);
  model.meta.final_loss = final_loss;
  return model;
}

double predict_proba(const LogRegModel& model, const EmbeddingVector& x) {
  if (x.dimension() != model.weights.size()) {
    throw ArgumentError("input dimension " + std::to_string(x.dimension()) +
                        " does not match model dimension " + std::to_string(model.weights.size()));
  }
  double z = model.bias;
  for (std::size_t k = 0; k < x.dimension(); ++k) z += model.weights[k] * x[k];
  return sigmoid(z);
}

double training_accuracy(const LogRegModel& model, const std::vector<LabeledVector>& data) {
  if (data.empty()) throw ArgumentError("accuracy over an empty set");
  std::size_t correct = 0;
  for (const auto& ex : data) {
    const int predicted = predict_proba(model, ex.x) > 0.5 ? kLabelMale : kLabelFemale;
    correct += predicted == ex.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

ProbeReport probe_bias(const LogRegModel& model, const std::vector<EmbeddingVector>& probe) {
  if (probe.empty()) throw ArgumentError("probe set is empty");
  ProbeReport report;
  report.probe_size = probe.size();
  double sum = 0.0;
  for (const auto& x : probe) {
    const double p_male = predict_proba(model, x);
    const double gap = std::abs(p_male - (1.0 - p_male));
    report.per_example_gap.push_back(gap);
    sum += gap;
  }
  report.bias_down = sum / static_cast<double>(probe.size());
  return report;
}

std::vector<EmbeddingVector> neutral_probe(const Lexicon& lexicon, Embedder& embedder) {
  if (lexicon.neutral_prompts().empty()) throw ArgumentError("lexicon has no neutral prompts");
  return embedder.embed_batch(lexicon.neutral_prompts());
}

ProbeReport evaluate_downstream(const Corpus& corpus, const Lexicon& lexicon, Embedder& embedder,
                                const std::vector<EmbeddingVector>& probe,
                                const DownstreamOptions& options) {
  if (!(options.holdout_fraction >= 0.0 && options.holdout_fraction < 1.0)) {
    throw ArgumentError("holdout_fraction must lie in [0, 1)");
  }
  auto data = build_training_set(corpus, lexicon, embedder);

  Rng rng(derive_seed(options.split_seed, hash_string("holdout"),
                      static_cast<std::uint64_t>(corpus.generation)));
  std::vector<LabeledVector> train, held;
  for (int label : {kLabelFemale, kLabelMale}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].label == label) idx.push_back(i);
    }
    rng.shuffle(idx);
    const auto n_hold = static_cast<std::size_t>(
        std::floor(options.holdout_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      (k < n_hold ? held : train).push_back(data[idx[k]]);
    }
  }
  // Restore corpus order inside each split so training is order-stable.
  std::unordered_map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < data.size(); ++i) rank.emplace(data[i].source_id, i);
  auto by_source = [&](std::vector<LabeledVector>& v) {
    std::sort(v.begin(), v.end(), [&](const LabeledVector& a, const LabeledVector& b) {
      return rank.at(a.source_id) < rank.at(b.source_id);
    });
  };
  by_source(train);
  by_source(held);

  const LogRegModel model = train_logreg(train, options.train);
  ProbeReport report = probe_bias(model, probe);
  report.train_size = train.size();
  report.accuracy = training_accuracy(model, held.empty() ? train : held);
  return report;
}

}  // namespace synthbias
