#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include <hyponli/error.hpp>
#include <hyponli/rng.hpp>
#include <hyponli/train.hpp>

#include "test_util.hpp"

using namespace hyponli;
using hyponli::testing::make_instance;

namespace {

const LabelScheme kThree = LabelScheme::three_way();

std::vector<NLIInstance> tiny_split(const std::string& prefix, std::size_t n) {
  std::vector<NLIInstance> out;
  const char* words[] = {"a", "b", "c", "d", "e"};
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(make_instance(prefix + std::to_string(i),
                                std::string(words[i % 5]) + " " + words[(i * 3) % 5], kThree.label(i % 3)));
  }
  return out;
}

HypothesisModel tiny_model(std::uint64_t seed = 1, EncoderKind kind = EncoderKind::bag) {
  Vocabulary v;
  for (const char* w : {"a", "b", "c", "d", "e"}) v.add(w);
  v.freeze();
  ModelConfig c;
  c.encoder = kind;
  c.embedding_dim = 4;
  c.hidden_dim = 3;
  c.mlp_hidden = 5;
  c.seed = seed;
  return HypothesisModel(c, kThree, seeded_random_embeddings(v, 4, seed));
}

bool same_params(const ModelParameters& a, const ModelParameters& b) {
  const auto x = a.blocks();
  const auto y = b.blocks();
  if (x.size() != y.size()) return false;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k].name != y[k].name || x[k].values.size() != y[k].values.size()) return false;
    if (!std::equal(x[k].values.begin(), x[k].values.end(), y[k].values.begin())) return false;
  }
  return true;
}

}  // namespace

TEST(SgdStep, Examples) {
  auto model = tiny_model();
  ModelParameters p = model.parameters();
  const ModelParameters original = p;
  sgd_step(p, Gradients::zeros_like(p), 0.1);
  EXPECT_TRUE(same_params(p, original));

  Gradients g = p;
  g.embeddings.resize(0, 0);
  sgd_step(p, g, 1.0);
  EXPECT_TRUE(p.hidden_weights.isZero());
  EXPECT_TRUE(p.output_bias.isZero());
  EXPECT_EQ(p.embeddings, original.embeddings);

  ModelParameters s;
  s.output_bias = Eigen::VectorXd::Constant(1, 0.5);
  Gradients sg;
  sg.output_bias = Eigen::VectorXd::Constant(1, 0.2);
  sgd_step(s, sg, 0.1);
  EXPECT_DOUBLE_EQ(s.output_bias(0), 0.48);

  Gradients wrong = Gradients::zeros_like(original);
  wrong.hidden_weights.resize(1, 1);
  EXPECT_THROW(sgd_step(p, wrong, 0.1), ShapeError);
  EXPECT_THROW(sgd_step(p, Gradients::zeros_like(original), 0.0), ConfigError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.decay = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.divide_on_decline = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.max_epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Fit, IncreasingDevAccuracyFollowsPureDecay) {
  auto model = tiny_model();
  const auto train = tiny_split("t", 12);
  const auto dev = tiny_split("d", 6);
  const auto result = fit(train, dev, model, TrainConfig{},
                          [](const HypothesisModel&, std::size_t epoch) { return static_cast<double>(epoch); });
  ASSERT_EQ(result.state.history.size(), 21u);
  EXPECT_EQ(result.state.epoch, 20u);
  EXPECT_FALSE(result.state.stopped_by_floor);
  double expected = 0.1;
  for (std::size_t e = 1; e <= 20; ++e) {
    const auto& rec = result.state.history[e];
    EXPECT_EQ(rec.lr, expected) << e;
    expected *= 0.99;
    EXPECT_EQ(rec.lr_next, expected) << e;
    EXPECT_NEAR(rec.lr_next, 0.1 * std::pow(0.99, static_cast<double>(e)), 1e-16);
  }
  EXPECT_EQ(result.state.best_epoch, 20u);
}

TEST(Fit, DecreasingDevAccuracyStopsAtEpochSix) {
  auto model = tiny_model();
  const auto result = fit(tiny_split("t", 12), tiny_split("d", 6), model, TrainConfig{},
                          [](const HypothesisModel&, std::size_t epoch) { return 100.0 - static_cast<double>(epoch); });
  EXPECT_EQ(result.state.epoch, 6u);
  EXPECT_TRUE(result.state.stopped_by_floor);
  double expected = 0.1;
  for (std::size_t e = 1; e <= 6; ++e) {
    EXPECT_EQ(result.state.history[e].lr, expected);
    expected = expected * 0.99 / 5.0;
    EXPECT_EQ(result.state.history[e].lr_next, expected);
  }
  EXPECT_GE(result.state.history[5].lr_next, 1e-5);
  EXPECT_LT(result.state.history[6].lr_next, 1e-5);
  // The untrained model is the best and is what comes back.
  EXPECT_EQ(result.state.best_epoch, 0u);
}

TEST(Fit, MaxEpochsOneRunsExactlyOnce) {
  auto model = tiny_model();
  TrainConfig c;
  c.max_epochs = 1;
  for (double acc : {0.0, 100.0}) {
    const auto r = fit(tiny_split("t", 12), tiny_split("d", 6), model, c,
                       [acc](const HypothesisModel&, std::size_t e) { return e == 0 ? 50.0 : acc; });
    EXPECT_EQ(r.state.epoch, 1u);
    EXPECT_EQ(r.state.history.size(), 2u);
  }
}

TEST(Fit, BestSoFarRuleComparesAgainstBest) {
  const std::vector<double> script = {10, 50, 40, 45, 60};
  auto run = [&](DeclineRule rule) {
    auto model = tiny_model();
    TrainConfig c;
    c.max_epochs = 4;
    c.decline_rule = rule;
    return fit(tiny_split("t", 12), tiny_split("d", 6), model, c,
               [&](const HypothesisModel&, std::size_t e) { return script[e]; });
  };
  const auto prev = run(DeclineRule::previous_epoch);
  const auto best = run(DeclineRule::best_so_far);
  // Epoch 3 (45) rose versus epoch 2 (40) but is below the best (50).
  EXPECT_EQ(prev.state.history[3].lr_next, prev.state.history[3].lr * 0.99);
  EXPECT_EQ(best.state.history[3].lr_next, best.state.history[3].lr * 0.99 / 5.0);
}

TEST(Fit, ReturnsParametersOfBestDevEpoch) {
  const std::vector<double> script = {10, 30, 20, 70, 40, 65, 50};
  auto model = tiny_model(4);
  std::vector<ModelParameters> snapshots;
  TrainConfig c;
  c.max_epochs = 6;
  const auto r = fit(tiny_split("t", 30), tiny_split("d", 6), model, c,
                     [&](const HypothesisModel& m, std::size_t e) {
                       snapshots.push_back(m.parameters());
                       return script[e];
                     });
  EXPECT_EQ(r.state.best_epoch, 3u);
  EXPECT_EQ(r.state.best_dev_acc, 70.0);
  double max_hist = 0.0;
  for (const auto& rec : r.state.history) max_hist = std::max(max_hist, rec.dev_acc);
  EXPECT_EQ(max_hist, r.state.best_dev_acc);
  EXPECT_TRUE(same_params(model.parameters(), snapshots[3]));
  EXPECT_TRUE(same_params(r.params, snapshots[3]));
  EXPECT_FALSE(same_params(snapshots[3], snapshots[6]));
}

TEST(Fit, LearningRateStrictlyPositiveAndNonIncreasing) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> script(21);
    for (auto& v : script) v = std::floor(rng.uniform(0.0, 5.0));
    auto model = tiny_model();
    const auto r = fit(tiny_split("t", 6), tiny_split("d", 3), model, TrainConfig{},
                       [&](const HypothesisModel&, std::size_t e) { return script[e]; });
    for (std::size_t e = 1; e < r.state.history.size(); ++e) {
      EXPECT_GT(r.state.history[e].lr, 0.0);
      EXPECT_LE(r.state.history[e].lr_next, r.state.history[e].lr);
      EXPECT_EQ(r.state.history[e].epoch, e);
    }
    EXPECT_EQ(r.state.stopped_by_floor, r.state.lr < 1e-5);
    EXPECT_TRUE(r.state.stopped_by_floor || r.state.epoch == 20u);
  }
}

TEST(Fit, IdenticalRunsAreBitIdentical) {
  for (auto kind : {EncoderKind::bag, EncoderKind::birnn_maxpool}) {
    auto a = tiny_model(9, kind);
    auto b = tiny_model(9, kind);
    TrainConfig c;
    c.seed = 5;
    c.batch_size = 4;
    c.max_epochs = 5;
    const auto ra = fit(tiny_split("t", 40), tiny_split("d", 9), a, c);
    const auto rb = fit(tiny_split("t", 40), tiny_split("d", 9), b, c);
    ASSERT_EQ(ra.state.history.size(), rb.state.history.size());
    for (std::size_t e = 0; e < ra.state.history.size(); ++e) {
      EXPECT_EQ(ra.state.history[e].train_loss, rb.state.history[e].train_loss);
      EXPECT_EQ(ra.state.history[e].dev_acc, rb.state.history[e].dev_acc);
      EXPECT_EQ(ra.state.history[e].lr, rb.state.history[e].lr);
    }
    EXPECT_TRUE(same_params(a.parameters(), b.parameters()));
  }
}

TEST(Fit, NonFiniteLossAbortsWithState) {
  auto model = tiny_model();
  TrainConfig c;
  c.lr0 = 1e308;
  try {
    fit(tiny_split("t", 30), tiny_split("d", 6), model, c);
    FAIL() << "expected TrainingAborted";
  } catch (const TrainingAborted& e) {
    EXPECT_GE(e.state().history.size(), 1u);
    EXPECT_GE(e.state().epoch, 1u);
  }
}

TEST(TrainingLog, Header) {
  std::ostringstream out;
  const std::vector<EpochRecord> h = {{0, 0.1, 1.1, 33.3, 0.1}, {1, 0.1, 1.0, 40.0, 0.099}};
  write_training_log(out, h);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "epoch,lr,train_loss,dev_acc");
  EXPECT_NE(out.str().find("\n1,1.0000000000e-01,1.00000000,40.0000\n"), std::string::npos);
}
