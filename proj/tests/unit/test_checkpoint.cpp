#include <sstream>

#include <gtest/gtest.h>

#include <hyponli/checkpoint.hpp>
#include <hyponli/error.hpp>

#include "test_util.hpp"

using namespace hyponli;

namespace {

HypothesisModel model_of(EncoderKind kind, bool finetune) {
  Vocabulary v;
  for (const char* w : {"a", "b", "Nobody", "sleeping", "."}) v.add(w);
  v.freeze();
  ModelConfig c;
  c.encoder = kind;
  c.embedding_dim = 6;
  c.hidden_dim = 3;
  c.mlp_hidden = 4;
  c.n_labels = 2;
  c.seed = 77;
  c.finetune_embeddings = finetune;
  return HypothesisModel(c, LabelScheme::two_way(), seeded_random_embeddings(v, 6, 3));
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  for (auto kind : {EncoderKind::bag, EncoderKind::birnn_maxpool}) {
    const auto m = model_of(kind, kind == EncoderKind::bag);
    std::stringstream buf;
    write_checkpoint(buf, m);
    const std::string first = buf.str();
    const auto back = read_checkpoint(buf);
    EXPECT_EQ(back.config().encoder, kind);
    EXPECT_EQ(back.config().seed, 77u);
    EXPECT_EQ(back.config().finetune_embeddings, kind == EncoderKind::bag);
    EXPECT_EQ(back.scheme(), m.scheme());
    EXPECT_EQ(back.vocabulary(), m.vocabulary());
    const auto a = m.parameters().blocks();
    const auto b = back.parameters().blocks();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].name, b[k].name);
      EXPECT_TRUE(std::equal(a[k].values.begin(), a[k].values.end(), b[k].values.begin()));
    }
    const auto pa = m.predict("Nobody is sleeping .");
    const auto pb = back.predict("Nobody is sleeping .");
    EXPECT_EQ(pa.logits, pb.logits);
    std::stringstream again;
    write_checkpoint(again, back);
    EXPECT_EQ(again.str(), first);
  }
}

TEST(Checkpoint, LayoutHeader) {
  std::stringstream buf;
  write_checkpoint(buf, model_of(EncoderKind::bag, false));
  std::string line;
  std::getline(buf, line);
  EXPECT_EQ(line, "hyponli-checkpoint 1");
  std::getline(buf, line);
  EXPECT_EQ(line, "encoder bag");
}

TEST(Checkpoint, CorruptInputIsParseError) {
  std::stringstream buf;
  write_checkpoint(buf, model_of(EncoderKind::bag, false));
  std::string text = buf.str();
  std::istringstream wrong_magic("not-a-checkpoint\n");
  EXPECT_THROW(read_checkpoint(wrong_magic), ParseError);
  std::istringstream truncated(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_checkpoint(truncated), ParseError);
  EXPECT_THROW(read_checkpoint(std::filesystem::path("/nonexistent/model.ckpt")), ConfigError);
}
