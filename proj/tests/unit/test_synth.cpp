#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include <hyponli/error.hpp>
#include <hyponli/rng.hpp>
#include <hyponli/stats.hpp>
#include <hyponli/synth.hpp>

using namespace hyponli;

namespace {

SynthSpec unique_per_label(double rate, std::vector<double> prior = {0.4, 0.35, 0.25}) {
  SynthSpec s;
  s.n_labels = prior.size();
  s.label_prior = std::move(prior);
  s.vocab_size = 50;
  s.sentence_length = {3, 8};
  const char* tokens[] = {"outdoors", "tall", "nobody"};
  for (std::size_t l = 0; l < s.n_labels; ++l) s.giveaways.push_back({tokens[l], l, rate});
  s.seed = 13;
  return s;
}

// Optimal hypothesis-only accuracy estimated by sampling from the same
// generative story and predicting with the Bayes rule.
double monte_carlo_bayes(const SynthSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t hits = 0;
  const std::size_t g = spec.giveaways.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = rng.categorical(spec.label_prior);
    std::uint64_t pattern = 0;
    for (std::size_t j = 0; j < g; ++j) {
      if (spec.giveaways[j].target_label == label && rng.bernoulli(spec.giveaways[j].rate)) pattern |= 1ULL << j;
    }
    std::size_t best = 0;
    double best_joint = -1.0;
    for (std::size_t l = 0; l < spec.n_labels; ++l) {
      double joint = spec.label_prior[l];
      for (std::size_t j = 0; j < g; ++j) {
        const double r = spec.giveaways[j].target_label == l ? spec.giveaways[j].rate : 0.0;
        joint *= (pattern >> j) & 1 ? r : 1 - r;
      }
      if (joint > best_joint) {
        best_joint = joint;
        best = l;
      }
    }
    hits += best == label;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace

TEST(SynthSpec, Validation) {
  EXPECT_NO_THROW(unique_per_label(0.5).validate());
  auto s = unique_per_label(0.5);
  s.label_prior = {0.5, 0.5, 0.5};
  EXPECT_THROW(s.validate(), ConfigError);
  s = unique_per_label(0.5);
  s.giveaways[1].token = "outdoors";
  s.sentence_length = {5, 2};
  s.giveaways[0].rate = 1.5;
  const auto v = s.violations();
  EXPECT_EQ(v.size(), 3u);
  try {
    s.validate();
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("repeated"), std::string::npos);
    EXPECT_NE(msg.find("exceeds max"), std::string::npos);
    EXPECT_NE(msg.find("outside [0, 1]"), std::string::npos);
  }
  s = unique_per_label(0.5);
  s.giveaways[0].token = "w7";
  EXPECT_THROW(s.validate(), ConfigError);
  s.giveaways[0].token = "w50";  // outside the 50-word background vocabulary
  EXPECT_NO_THROW(s.validate());
}

TEST(Generate, RateOneAndRateZero) {
  const auto full = unique_per_label(1.0);
  const auto items = generate(full, 2000);
  for (const auto& inst : items) {
    const auto toks = tokenize(inst.hypothesis).tokens;
    const auto& mine = full.giveaways[static_cast<std::size_t>(inst.label.index)].token;
    EXPECT_EQ(std::count(toks.begin(), toks.end(), mine), 1);
  }
  const auto none = generate(unique_per_label(0.0), 2000);
  for (const auto& inst : none) {
    for (const auto& t : tokenize(inst.hypothesis)) EXPECT_EQ(t[0], 'w');
  }
}

TEST(Generate, InjectionFrequencyWithinThreeSigma) {
  const auto spec = unique_per_label(0.5);
  const auto items = generate(spec, 10000);
  std::vector<std::size_t> n(3, 0), injected(3, 0);
  for (const auto& inst : items) {
    const auto l = static_cast<std::size_t>(inst.label.index);
    ++n[l];
    const auto toks = tokenize(inst.hypothesis).tokens;
    injected[l] += std::count(toks.begin(), toks.end(), spec.giveaways[l].token) > 0;
  }
  for (std::size_t l = 0; l < 3; ++l) {
    const double mean = 0.5 * static_cast<double>(n[l]);
    const double sigma = std::sqrt(static_cast<double>(n[l]) * 0.25);
    EXPECT_LE(std::abs(static_cast<double>(injected[l]) - mean), 3 * sigma) << l;
  }
}

TEST(Generate, DeterministicAndLengthBounded) {
  const auto spec = unique_per_label(0.3);
  const auto a = generate(spec, 500);
  const auto b = generate(spec, 500);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(same_fields(a[i], b[i]));
    const auto len = tokenize(a[i].hypothesis).size();
    EXPECT_GE(len, 3u);
    EXPECT_LE(len, 9u);
    EXPECT_FALSE(a[i].premise.empty());
  }
  EXPECT_THROW(generate(spec, 0), ConfigError);
}

TEST(GenerateSplits, IndependentStreamsAndSizes) {
  const auto ds = generate_splits(unique_per_label(0.6), 100, 20, 30);
  EXPECT_EQ(ds.split("train").size(), 100u);
  EXPECT_EQ(ds.split("dev").size(), 20u);
  EXPECT_EQ(ds.split("test").size(), 30u);
  EXPECT_NE(ds.split("train")[0].hypothesis, ds.split("dev")[0].hypothesis);
  EXPECT_NO_THROW(ds.validate());
}

TEST(BayesAccuracy, TrivialCases) {
  auto s = unique_per_label(0.5);
  s.giveaways.clear();
  EXPECT_NEAR(bayes_accuracy(s), 40.0, 1e-12);
  EXPECT_NEAR(bayes_accuracy(unique_per_label(1.0)), 100.0, 1e-12);
  EXPECT_NEAR(bayes_accuracy(unique_per_label(0.0)), 40.0, 1e-12);
}

TEST(BayesAccuracy, EnumerationAgreesWithMonteCarlo) {
  SynthSpec s;
  s.n_labels = 2;
  s.label_prior = {0.5, 0.5};
  s.giveaways = {{"g", 0, 0.4}};
  // Absent: P(0)=0.5*0.6=0.3 < P(1)=0.5 -> predict 1; present -> 0. Total 0.2 + 0.5.
  EXPECT_NEAR(bayes_accuracy(s), 70.0, 1e-12);
  EXPECT_NEAR(monte_carlo_bayes(s, 1000000, 1), bayes_accuracy(s), 0.1);

  const auto three = unique_per_label(0.6);
  EXPECT_NEAR(bayes_accuracy(three), 76.0, 1e-12);
  EXPECT_NEAR(monte_carlo_bayes(three, 1000000, 2), 76.0, 0.15);
}

TEST(BayesAccuracy, NeverBelowPriorAndMonotoneInRate) {
  for (double a = 0.0; a <= 1.0001; a += 0.1) {
    double previous = -1.0;
    for (double b = 0.0; b <= 1.0001; b += 0.1) {
      auto s = unique_per_label(0.0);
      s.giveaways[0].rate = std::min(a, 1.0);
      s.giveaways[2].rate = std::min(b, 1.0);
      s.giveaways.push_back({"extra", 2, 0.3});
      const double acc = bayes_accuracy(s);
      EXPECT_GE(acc, 40.0 - 1e-9);
      EXPECT_GE(acc, previous - 1e-9);
      previous = acc;
    }
  }
}

TEST(BayesAccuracy, RateOneTokensRankFirstWithScoreOne) {
  const auto spec = unique_per_label(1.0);
  const auto items = generate(spec, 3000);
  const auto counts = count_corpus(items, spec.scheme());
  const auto lists = giveaway_words(counts);
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& list = lists.at(spec.scheme().label(l));
    ASSERT_FALSE(list.empty());
    EXPECT_EQ(list[0].token, spec.giveaways[l].token);
    EXPECT_EQ(list[0].score, 1.0);
  }
}

TEST(SynthSpecJson, RoundTripAndErrors) {
  const auto spec = unique_per_label(0.25);
  const auto back = parse_synth_spec(synth_spec_json(spec));
  EXPECT_EQ(back.label_prior, spec.label_prior);
  EXPECT_EQ(back.giveaways.size(), 3u);
  EXPECT_EQ(back.giveaways[2].token, "nobody");
  EXPECT_EQ(back.giveaways[2].target_label, 2u);
  EXPECT_EQ(back.giveaways[1].rate, 0.25);
  EXPECT_EQ(back.seed, 13u);
  EXPECT_EQ(synth_spec_json(back), synth_spec_json(spec));
  EXPECT_THROW(parse_synth_spec("{"), ConfigError);
  EXPECT_THROW(parse_synth_spec(R"({"label_prior":[0.9,0.9,0.9]})"), ConfigError);
  EXPECT_THROW(parse_synth_spec(R"({"giveaways":[{"token":"x","label":"bogus","rate":0.1}]})"), ConfigError);
  const auto by_index = parse_synth_spec(R"({"giveaways":[{"token":"x","label":1,"rate":0.1}]})");
  EXPECT_EQ(by_index.giveaways[0].target_label, 1u);
}
