#include <sstream>

#include <gtest/gtest.h>

#include <hyponli/error.hpp>
#include <hyponli/stats.hpp>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace hyponli;
using hyponli::testing::make_instance;

namespace {

const LabelScheme kThree = LabelScheme::three_way();
const Label& E() { return kThree.label(0); }
const Label& N() { return kThree.label(1); }
const Label& C() { return kThree.label(2); }

std::vector<NLIInstance> six_sentences() {
  return {make_instance("1", "a a b", E()),        make_instance("2", "b c", N()),
          make_instance("3", "c c c d", C()),      make_instance("4", "a d", E()),
          make_instance("5", "d d", C()),          make_instance("6", "b a c", N())};
}

}  // namespace

TEST(CountCorpus, OccurrenceVersusPresence) {
  const std::vector<NLIInstance> one = {make_instance("1", "a a b", E())};
  const auto c = count_corpus(one, kThree);
  EXPECT_EQ(c.count_wl("a", E()), 2u);
  EXPECT_EQ(c.presence_wl("a", E()), 1u);
  EXPECT_EQ(c.count_w("a"), 2u);
  EXPECT_EQ(c.count_w("zzz"), 0u);
  EXPECT_EQ(c.n_sentences(), 1u);
}

TEST(CountCorpus, EmptyInput) {
  const auto c = count_corpus({}, kThree);
  EXPECT_EQ(c.n_sentences(), 0u);
  EXPECT_EQ(c.n_types(), 0u);
  for (const auto& l : kThree.labels()) EXPECT_EQ(c.count_l(l), 0u);
}

TEST(CountCorpus, PremisesAreNotCounted) {
  const std::vector<NLIInstance> one = {make_instance("1", "b", E(), "premiseword premiseword")};
  const auto c = count_corpus(one, kThree);
  EXPECT_EQ(c.count_w("premiseword"), 0u);
}

TEST(CountCorpus, SixSentenceFixtureMatchesTally) {
  const auto items = six_sentences();
  const auto c = count_corpus(items, kThree);
  const auto t = oracle::tally(items);
  EXPECT_EQ(c.n_types(), t.occ.size());
  for (const auto& [tok, occ] : t.occ) {
    for (int l = 0; l < 3; ++l) {
      EXPECT_EQ(c.count_wl(tok, kThree.label(l)), occ[l]) << tok;
      EXPECT_EQ(c.presence_wl(tok, kThree.label(l)), t.presence.at(tok)[l]) << tok;
    }
  }
  EXPECT_EQ(c.count_wl("c", C()), 3u);
  EXPECT_EQ(c.presence_wl("c", C()), 1u);
}

TEST(CountCorpus, ShardedEqualsSerial) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto items = oracle::random_corpus(rng, kThree, 200, 30);
    const auto serial = count_corpus(items, kThree);
    for (std::size_t shards : {1u, 2u, 3u, 7u, 500u}) {
      EXPECT_TRUE(equivalent(serial, count_corpus_sharded(items, kThree, shards)));
    }
  }
}

TEST(CountCorpus, InvariantsOnRandomCorpora) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto items = oracle::random_corpus(rng, kThree, 50, 20);
    const auto c = count_corpus(items, kThree);
    std::uint64_t sentences = 0;
    for (const auto& l : kThree.labels()) sentences += c.count_l(l);
    EXPECT_EQ(sentences, c.n_sentences());
    for (std::size_t id = 0; id < c.n_types(); ++id) {
      const auto& tok = c.token(id);
      std::uint64_t sum = 0;
      double psum = 0.0;
      for (const auto& l : kThree.labels()) {
        sum += c.count_wl(tok, l);
        EXPECT_LE(c.presence_wl(tok, l), c.count_l(l));
        const double pl = p_label_given_word(c, tok, l);
        EXPECT_GE(pl, 0.0);
        EXPECT_LE(pl, 1.0);
        psum += pl;
      }
      EXPECT_EQ(sum, c.count_w(tok));
      EXPECT_NEAR(psum, 1.0, 1e-12);
    }
  }
}

TEST(PLabelGivenWord, Examples) {
  std::vector<NLIInstance> items;
  for (int i = 0; i < 4; ++i) items.push_back(make_instance(std::to_string(i), "nobody", C()));
  items.push_back(make_instance("x", "sleep sleep sleep", C()));
  items.push_back(make_instance("y", "sleep", N()));
  const auto c = count_corpus(items, kThree);
  EXPECT_EQ(p_label_given_word(c, "nobody", C()), 1.0);
  EXPECT_EQ(p_label_given_word(c, "sleep", C()), 0.75);
  EXPECT_EQ(p_label_given_word(c, "sleep", N()), 0.25);
  EXPECT_EQ(p_label_given_word(c, "sleep", E()), 0.0);
  EXPECT_THROW(p_label_given_word(c, "unseen", E()), std::out_of_range);
}

TEST(GiveawayWords, ScoreAndThreshold) {
  std::vector<NLIInstance> items;
  for (int i = 0; i < 9; ++i) items.push_back(make_instance("c" + std::to_string(i), "sleep", C()));
  items.push_back(make_instance("n", "sleep", N()));
  for (int i = 0; i < 4; ++i) items.push_back(make_instance("r" + std::to_string(i), "rare", E()));
  const auto c = count_corpus(items, kThree);
  const auto lists = giveaway_words(c);
  ASSERT_TRUE(lists.contains(C()));
  ASSERT_EQ(lists.at(C()).size(), 1u);
  EXPECT_EQ(lists.at(C())[0].token, "sleep");
  EXPECT_DOUBLE_EQ(lists.at(C())[0].score, 0.9);
  EXPECT_EQ(lists.at(C())[0].frequency, 10u);
  for (const auto& [label, v] : lists) {
    for (const auto& e : v) EXPECT_NE(e.token, "rare");
  }
}

TEST(GiveawayWords, ArgmaxTiesGoToLowestIndex) {
  const std::vector<NLIInstance> items = {make_instance("1", "t", N()), make_instance("2", "t", C())};
  const auto c = count_corpus(items, kThree);
  const auto lists = giveaway_words(c, 1, 10);
  ASSERT_TRUE(lists.contains(N()));
  EXPECT_EQ(lists.at(N())[0].token, "t");
  EXPECT_FALSE(lists.contains(C()) && !lists.at(C()).empty());
}

TEST(GiveawayWords, MatchesBruteForceOnRandomCorpora) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto items = oracle::random_corpus(rng, kThree, 50, 20);
    const auto c = count_corpus(items, kThree);
    const auto t = oracle::tally(items);
    const std::uint64_t min_freq = 1 + rng.below(4);
    const auto got = giveaway_words(c, min_freq, 5);
    const auto want = oracle::giveaways(t, 3, min_freq, 5);
    for (const auto& l : kThree.labels()) {
      const auto g = got.contains(l) ? got.at(l) : std::vector<GiveawayEntry>{};
      const auto w = want.contains(l.index) ? want.at(l.index) : std::vector<oracle::Giveaway>{};
      ASSERT_EQ(g.size(), w.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(g[i].token, w[i].token);
        EXPECT_EQ(g[i].score, w[i].score);
        EXPECT_EQ(g[i].frequency, w[i].freq);
        EXPECT_GE(g[i].frequency, min_freq);
      }
    }
  }
}

TEST(ThresholdGrid, ExactPointsAndValidation) {
  const auto g = threshold_grid(0.01);
  ASSERT_EQ(g.size(), 101u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(g[29], 29.0 / 100.0);
  EXPECT_THROW(threshold_grid(0.0), ConfigError);
  EXPECT_THROW(threshold_grid(0.6), ConfigError);
}

TEST(CoverageCurve, EndpointsAndBruteForce) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto items = oracle::random_corpus(rng, kThree, 50, 20);
    const auto c = count_corpus(items, kThree);
    const auto t = oracle::tally(items);
    for (const auto mode : {CoverageMode::max_label, CoverageMode::gold_label}) {
      for (const auto& l : kThree.labels()) {
        const auto curve = coverage_curve(c, l, 0.05, mode);
        ASSERT_EQ(curve.grid.size(), curve.y.size());
        EXPECT_EQ(curve.y.front(), c.count_l(l));
        for (std::size_t i = 0; i < curve.grid.size(); ++i) {
          EXPECT_EQ(curve.y[i],
                    oracle::coverage(items, t, l.index, curve.grid[i], mode == CoverageMode::gold_label));
          if (i > 0) EXPECT_LE(curve.y[i], curve.y[i - 1]);
        }
        EXPECT_EQ(coverage_count(c, l, 1.0 + 1e-9, mode), 0u);
      }
    }
  }
}

TEST(CoverageCurve, GridPointHitsExactScore) {
  // p(E|w) = 29/100 exactly at the 0.29 grid point.
  std::vector<NLIInstance> items;
  for (int i = 0; i < 29; ++i) items.push_back(make_instance("e" + std::to_string(i), "w", E()));
  for (int i = 0; i < 71; ++i) items.push_back(make_instance("n" + std::to_string(i), "w", N()));
  const auto c = count_corpus(items, kThree);
  const auto curve = coverage_curve(c, E(), 0.01, CoverageMode::gold_label);
  EXPECT_EQ(curve.y[29], 29u);
  EXPECT_EQ(curve.y[30], 0u);
}

TEST(MajorityAccuracy, Examples) {
  const std::vector<NLIInstance> een = {make_instance("1", "h", E()), make_instance("2", "h", E()),
                                        make_instance("3", "h", N())};
  EXPECT_NEAR(majority_accuracy(een, E()), 66.6667, 1e-4);
  EXPECT_THROW(majority_accuracy({}, E()), ConfigError);

  const auto two = LabelScheme::two_way();
  Rng rng(60);
  std::vector<NLIInstance> items;
  std::size_t zeros = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t l = rng.uniform() < 0.6 ? 0 : 1;
    zeros += l == 0;
    items.push_back(make_instance(std::to_string(i), "h", two.label(l)));
  }
  EXPECT_DOUBLE_EQ(majority_accuracy(items, two.label(0)), 100.0 * zeros / 10000.0);
  EXPECT_NEAR(majority_accuracy(items, two.label(0)), 60.0, 1.5);
}

TEST(StatsCsv, DocumentedHeaders) {
  const auto items = six_sentences();
  const auto c = count_corpus(items, kThree);
  std::ostringstream g, cov, counts;
  write_giveaways_csv(g, giveaway_words(c, 1, 10));
  const std::vector<CoverageCurve> curves = {coverage_curve(c, E())};
  write_coverage_csv(cov, curves);
  write_counts_csv(counts, c);
  EXPECT_EQ(g.str().substr(0, g.str().find('\n')), "label,token,score,freq");
  EXPECT_EQ(cov.str().substr(0, cov.str().find('\n')), "label,x,y");
  EXPECT_EQ(counts.str().substr(0, counts.str().find('\n')), "label,sentences,tokens,types");
  EXPECT_NE(cov.str().find("entailment,0.0000,2\n"), std::string::npos);
}
