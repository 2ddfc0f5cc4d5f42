#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyponli/corpus.hpp"

namespace hyponli {

struct InjectedToken {
  std::string token;
  std::size_t target_label = 0;
  double rate = 0.0;  // probability of insertion into a hypothesis of the target label
};

struct LengthRange {
  std::size_t min = 3;
  std::size_t max = 8;
};

// Background tokens are "w0" .. "w{vocab_size-1}", drawn uniformly and
// independently of the label; injected tokens carry all the signal.
struct SynthSpec {
  std::size_t n_labels = 3;
  std::vector<double> label_prior = {0.4, 0.35, 0.25};
  std::size_t vocab_size = 200;
  LengthRange sentence_length;
  std::vector<InjectedToken> giveaways;
  std::uint64_t seed = 0;

  // Every violated invariant, one message each.
  std::vector<std::string> violations() const;
  // Throws ConfigError listing all violations.
  void validate() const;
  LabelScheme scheme() const;
  static std::string background_token(std::size_t i);
};

std::vector<NLIInstance> generate(const SynthSpec& spec, std::size_t n, const std::string& id_prefix = "synth");

// train/dev/test drawn from independent streams derived from spec.seed.
Dataset generate_splits(const SynthSpec& spec, std::size_t n_train, std::size_t n_dev, std::size_t n_test);

// Accuracy (percent) of the optimal hypothesis-only classifier, by
// enumerating which injected tokens are present.
double bayes_accuracy(const SynthSpec& spec);

// JSON: {"n_labels", "label_prior", "vocab_size", "sentence_length": [min, max],
// "giveaways": [{"token", "label" (name or index), "rate"}], "seed"}.
SynthSpec parse_synth_spec(const std::string& json_text);
SynthSpec load_synth_spec(const std::filesystem::path& path);
std::string synth_spec_json(const SynthSpec& spec);

}  // namespace hyponli
