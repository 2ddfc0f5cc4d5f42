#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include <hyponli/model.hpp>
#include <hyponli/rng.hpp>
#include <hyponli/stats.hpp>
#include <hyponli/synth.hpp>
#include <hyponli/text.hpp>

using namespace hyponli;

namespace {

std::vector<NLIInstance> corpus(std::size_t n) {
  SynthSpec s;
  s.vocab_size = 2000;
  s.sentence_length = {5, 15};
  s.giveaways = {{"outdoors", 0, 0.3}, {"tall", 1, 0.3}, {"nobody", 2, 0.3}};
  s.seed = 1;
  return generate(s, n);
}

void BM_Tokenize(benchmark::State& state) {
  const std::string text = "A man, wearing a \"tall\" hat, isn't sleeping outdoors near the dog's (red) ball.";
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize);

void BM_CountCorpus(benchmark::State& state) {
  const auto items = corpus(static_cast<std::size_t>(state.range(0)));
  const auto scheme = LabelScheme::three_way();
  for (auto _ : state) benchmark::DoNotOptimize(count_corpus(items, scheme));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CountCorpus)->Arg(1000)->Arg(10000);

void BM_CountCorpusSharded(benchmark::State& state) {
  const auto items = corpus(10000);
  const auto scheme = LabelScheme::three_way();
  const auto shards = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(count_corpus_sharded(items, scheme, shards));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_CountCorpusSharded)->Arg(2)->Arg(4);

struct Fixture {
  ModelConfig config;
  ModelParameters params;
  std::vector<Example> batch;

  explicit Fixture(EncoderKind kind) {
    Vocabulary v;
    for (int i = 0; i < 1000; ++i) v.add("w" + std::to_string(i));
    v.freeze();
    config.encoder = kind;
    config.embedding_dim = 50;
    config.hidden_dim = 64;
    config.mlp_hidden = 64;
    params = init_parameters(config, seeded_random_embeddings(v, 50, 1));
    Rng rng(2);
    for (int i = 0; i < 64; ++i) {
      Example ex;
      for (int k = 0; k < 12; ++k) ex.ids.push_back(static_cast<int>(rng.below(1001)));
      ex.label = static_cast<int>(rng.below(3));
      batch.push_back(ex);
    }
  }
};

void BM_Encode(benchmark::State& state) {
  const Fixture f(static_cast<EncoderKind>(state.range(0)));
  for (auto _ : state) {
    for (const auto& ex : f.batch) benchmark::DoNotOptimize(encode(ex.ids, f.params, f.config));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}
BENCHMARK(BM_Encode)
    ->Arg(static_cast<int>(EncoderKind::bag))
    ->Arg(static_cast<int>(EncoderKind::birnn_maxpool))
    ->ArgName("encoder");

void BM_LossAndGradients(benchmark::State& state) {
  const Fixture f(static_cast<EncoderKind>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradients(f.batch, f.params, f.config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}
BENCHMARK(BM_LossAndGradients)
    ->Arg(static_cast<int>(EncoderKind::bag))
    ->Arg(static_cast<int>(EncoderKind::birnn_maxpool))
    ->ArgName("encoder");

}  // namespace

BENCHMARK_MAIN();
