#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "synthbias/downstream.hpp"
#include "synthbias/error.hpp"
#include "synthbias/random.hpp"

using namespace synthbias;

namespace {

std::vector<LabeledVector> labeled_data(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<LabeledVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> raw(dim);
    for (auto& v : raw) v = rng.uniform() * 2 - 1;
    raw[0] += (i % 2 ? 0.8 : -0.8);
    out.push_back({EmbeddingVector::normalize(raw), static_cast<int>(i % 2), "x" + std::to_string(i)});
  }
  return out;
}

Instruction instr(const std::string& id, const std::string& text) {
  return {id, text, 0, std::nullopt, StrategyKind::vanilla, false};
}

}  // namespace

TEST(Downstream, ZeroModelIsHalf) {
  LogRegModel m;
  m.weights.assign(3, 0.0);
  const auto x = EmbeddingVector::normalize({1, 2, 3});
  EXPECT_DOUBLE_EQ(predict_proba(m, x), 0.5);
  m.bias = std::log(3.0);
  EXPECT_NEAR(predict_proba(m, x), 0.75, 1e-15);
  EXPECT_THROW(predict_proba(m, EmbeddingVector::normalize({1, 0})), ArgumentError);
}

TEST(Downstream, ProbeBiasArithmetic) {
  // Outputs {0.5, 0.9, 0.1} on a 1-d probe: w*x+b with x=1, b=0, w chosen.
  LogRegModel m;
  m.weights = {0.0, std::log(9.0)};
  const std::vector<EmbeddingVector> probe{EmbeddingVector::normalize({1, 0}),
                                           EmbeddingVector::normalize({0, 1}),
                                           EmbeddingVector::normalize({0, -1})};
  const auto r = probe_bias(m, probe);
  EXPECT_NEAR(r.bias_down, (0.0 + 0.8 + 0.8) / 3.0, 1e-12);
  EXPECT_EQ(r.probe_size, 3u);
  EXPECT_THROW(probe_bias(m, {}), ArgumentError);
}

TEST(Downstream, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  for (int inst = 0; inst < 20; ++inst) {
    const auto data = labeled_data(rng, 8 + rng.index(24), 8);
    std::vector<double> w(8);
    for (auto& v : w) v = rng.uniform() - 0.5;
    const double b = rng.uniform() - 0.5, l2 = 0.01;
    const auto g = logistic_gradient(w, b, data, l2);
    ASSERT_EQ(g.size(), 9u);
    const double eps = 1e-5;
    for (std::size_t j = 0; j < 9; ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      (j < 8 ? wp[j] : bp) += eps;
      (j < 8 ? wm[j] : bm) -= eps;
      const double fd = (logistic_loss(wp, bp, data, l2) - logistic_loss(wm, bm, data, l2)) / (2 * eps);
      EXPECT_LT(std::abs(g[j] - fd) / std::max({std::abs(g[j]), std::abs(fd), 1e-8}), 1e-4);
    }
  }
}

TEST(Downstream, LossNonIncreasing) {
  Rng rng(8);
  const auto data = labeled_data(rng, 40, 6);
  TrainOptions opts;
  opts.epochs = 200;
  const auto m = train_logreg(data, opts);
  ASSERT_EQ(m.meta.loss_history.size(), 201u);
  for (std::size_t i = 1; i < m.meta.loss_history.size(); ++i) {
    EXPECT_LE(m.meta.loss_history[i], m.meta.loss_history[i - 1] + 1e-15);
  }
  EXPECT_TRUE(std::isfinite(m.meta.final_loss));
}

TEST(Downstream, SeparablePairReachesFullAccuracy) {
  const std::vector<LabeledVector> two{{EmbeddingVector::normalize({1, 0.3}), kLabelMale, "a"},
                                       {EmbeddingVector::normalize({-1, 0.3}), kLabelFemale, "b"}};
  TrainOptions opts;
  opts.learning_rate = 0.5;
  opts.l2 = 0.0;
  EXPECT_DOUBLE_EQ(training_accuracy(train_logreg(two, opts), two), 1.0);
}

TEST(Downstream, LabelFlipNegatesModelExactly) {
  Rng rng(12);
  auto data = labeled_data(rng, 30, 5);
  auto flipped = data;
  for (auto& d : flipped) d.label = 1 - d.label;
  const auto a = train_logreg(data, {});
  const auto b = train_logreg(flipped, {});
  for (std::size_t j = 0; j < a.weights.size(); ++j) EXPECT_EQ(a.weights[j], -b.weights[j]);
  EXPECT_EQ(a.bias, -b.bias);
  std::vector<EmbeddingVector> probe;
  for (const auto& d : data) probe.push_back(d.x);
  EXPECT_DOUBLE_EQ(probe_bias(a, probe).bias_down, probe_bias(b, probe).bias_down);
}

TEST(Downstream, BalancedCoincidingMeansGiveNoBias) {
  // Each x appears once per label: class means coincide exactly.
  Rng rng(21);
  std::vector<LabeledVector> data;
  std::vector<EmbeddingVector> probe;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> raw(16);
    for (auto& v : raw) v = rng.uniform() * 2 - 1;
    const auto x = EmbeddingVector::normalize(raw);
    data.push_back({x, kLabelMale, ""});
    data.push_back({x, kLabelFemale, ""});
    probe.push_back(x);
  }
  EXPECT_LT(probe_bias(train_logreg(data, {}), probe).bias_down, 0.05);
}

TEST(Downstream, TrainingSetLabelsAndErrors) {
  const auto lex = load_lexicon();
  auto e = make_embedder(DeterministicEmbedderSpec{});
  Corpus neutral;
  neutral.instructions = {instr("a", "Describe teamwork."), instr("b", "Explain how photosynthesis works.")};
  EXPECT_THROW(build_training_set(neutral, lex, *e), TrainingDataError);

  Corpus c;
  c.instructions = {instr("a", "She is a nurse."), instr("b", "He is a pilot."),
                    instr("c", "The engineer met the nurse."), instr("d", "Describe teamwork.")};
  const auto set = build_training_set(c, lex, *e);
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set[0].label, kLabelFemale);
  EXPECT_EQ(set[0].source_id, "a");
  EXPECT_EQ(set[1].label, kLabelMale);
}

TEST(Downstream, TrainingErrorOnDivergence) {
  const std::vector<LabeledVector> two{{EmbeddingVector::normalize({1, 0}), kLabelMale, "a"},
                                       {EmbeddingVector::normalize({-1, 0}), kLabelFemale, "b"}};
  TrainOptions opts;
  opts.learning_rate = 1e308;
  opts.l2 = 1.0;
  EXPECT_THROW(train_logreg(two, opts), TrainingError);
}
