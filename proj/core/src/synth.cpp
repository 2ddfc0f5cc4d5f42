#include "hyponli/synth.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "hyponli/error.hpp"
#include "hyponli/rng.hpp"

namespace hyponli {
namespace {

using nlohmann::ordered_json;

std::string sentence_of(std::vector<std::string> words) {
  std::string s;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) s += ' ';
    s += words[i];
  }
  return s;
}

std::vector<std::string> background(const SynthSpec& spec, Rng& rng) {
  const std::size_t span = spec.sentence_length.max - spec.sentence_length.min + 1;
  const std::size_t len = spec.sentence_length.min + rng.below(span);
  std::vector<std::string> words;
  words.reserve(len + spec.giveaways.size());
  for (std::size_t i = 0; i < len; ++i) words.push_back(SynthSpec::background_token(rng.below(spec.vocab_size)));
  return words;
}

}  // namespace

std::string SynthSpec::background_token(std::size_t i) { return "w" + std::to_string(i); }

std::vector<std::string> SynthSpec::violations() const {
  std::vector<std::string> out;
  if (n_labels != 2 && n_labels != 3) out.push_back(fmt::format("n_labels must be 2 or 3, got {}", n_labels));
  if (label_prior.size() != n_labels) {
    out.push_back(fmt::format("label_prior has {} entries for {} labels", label_prior.size(), n_labels));
  }
  double sum = 0.0;
  for (double p : label_prior) {
    if (!(p >= 0.0 && p <= 1.0)) out.push_back(fmt::format("prior entry {} is outside [0, 1]", p));
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) out.push_back(fmt::format("label_prior sums to {}, not 1", sum));
  if (vocab_size < 1) out.push_back("vocab_size must be at least 1");
  if (sentence_length.min < 1) out.push_back("sentence_length min must be at least 1");
  if (sentence_length.min > sentence_length.max) {
    out.push_back(fmt::format("sentence_length min {} exceeds max {}", sentence_length.min, sentence_length.max));
  }
  std::set<std::string> seen;
  for (const auto& g : giveaways) {
    if (g.token.empty() || g.token.find_first_of(" \t\r\n") != std::string::npos) {
      out.push_back(fmt::format("giveaway token '{}' must be a single nonempty word", g.token));
    }
    if (!seen.insert(g.token).second) out.push_back(fmt::format("giveaway token '{}' is repeated", g.token));
    if (g.token.size() > 1 && g.token[0] == 'w' &&
        g.token.find_first_not_of("0123456789", 1) == std::string::npos) {
      const auto idx = std::stoull(g.token.substr(1));
      if (idx < vocab_size && background_token(idx) == g.token) {
        out.push_back(fmt::format("giveaway token '{}' is in the background vocabulary", g.token));
      }
    }
    if (g.target_label >= n_labels) {
      out.push_back(fmt::format("giveaway '{}' targets label {} of {}", g.token, g.target_label, n_labels));
    }
    if (!(g.rate >= 0.0 && g.rate <= 1.0)) {
      out.push_back(fmt::format("giveaway '{}' rate {} is outside [0, 1]", g.token, g.rate));
    }
  }
  return out;
}

void SynthSpec::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid synthetic spec:";
  for (const auto& m : v) msg += "\n  - " + m;
  throw ConfigError(msg);
}

LabelScheme SynthSpec::scheme() const {
  return n_labels == 2 ? LabelScheme::two_way() : LabelScheme::three_way();
}

std::vector<NLIInstance> generate(const SynthSpec& spec, std::size_t n, const std::string& id_prefix) {
  spec.validate();
  if (n < 1) throw ConfigError("generate needs n >= 1");
  const LabelScheme scheme = spec.scheme();
  Rng rng(spec.seed);
  std::vector<NLIInstance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = rng.categorical(spec.label_prior);
    auto words = background(spec, rng);
    for (const auto& g : spec.giveaways) {
      if (g.target_label != label) continue;
      if (rng.bernoulli(g.rate)) {
        const auto pos = rng.below(words.size() + 1);
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), g.token);
      }
    }
    NLIInstance inst;
    inst.instance_id = fmt::format("{}-{}", id_prefix, i);
    inst.premise = sentence_of(background(spec, rng));
    inst.hypothesis = sentence_of(std::move(words));
    inst.label = scheme.label(label);
    out.push_back(std::move(inst));
  }
  return out;
}

Dataset generate_splits(const SynthSpec& spec, std::size_t n_train, std::size_t n_dev, std::size_t n_test) {
  Dataset ds;
  ds.name = "synthetic";
  ds.scheme = spec.scheme();
  const std::pair<const char*, std::size_t> parts[] = {{"train", n_train}, {"dev", n_dev}, {"test", n_test}};
  for (const auto& [name, n] : parts) {
    SynthSpec child = spec;
    child.seed = derive_seed(spec.seed, std::string_view(name));
    ds.splits[name] = generate(child, n, fmt::format("synth-{}", name));
  }
  return ds;
}

double bayes_accuracy(const SynthSpec& spec) {
  spec.validate();
  const std::size_t g = spec.giveaways.size();
  if (g > 24) throw ConfigError("bayes_accuracy enumerates 2^k patterns; too many giveaways");
  double total = 0.0;
  for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << g); ++pattern) {
    double best = 0.0;
    for (std::size_t l = 0; l < spec.n_labels; ++l) {
      double joint = spec.label_prior[l];
      for (std::size_t j = 0; j < g; ++j) {
        const auto& tok = spec.giveaways[j];
        const double r = tok.target_label == l ? tok.rate : 0.0;
        joint *= (pattern >> j) & 1U ? r : 1.0 - r;
      }
      best = std::max(best, joint);
    }
    total += best;
  }
  return 100.0 * total;
}

SynthSpec parse_synth_spec(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    throw ConfigError(std::string("synthetic spec is not valid JSON: ") + e.what());
  }
  SynthSpec spec;
  try {
    spec.n_labels = j.value("n_labels", spec.n_labels);
    if (j.contains("label_prior")) spec.label_prior = j.at("label_prior").get<std::vector<double>>();
    spec.vocab_size = j.value("vocab_size", spec.vocab_size);
    if (j.contains("sentence_length")) {
      const auto& len = j.at("sentence_length");
      if (!len.is_array() || len.size() != 2) throw ConfigError("sentence_length must be [min, max]");
      spec.sentence_length = {len[0].get<std::size_t>(), len[1].get<std::size_t>()};
    }
    spec.seed = j.value("seed", spec.seed);
    const LabelScheme scheme = spec.n_labels == 2 ? LabelScheme::two_way() : LabelScheme::three_way();
    for (const auto& g : j.value("giveaways", ordered_json::array())) {
      InjectedToken tok;
      tok.token = g.at("token").get<std::string>();
      const auto& label = g.at("label");
      tok.target_label = label.is_string() ? static_cast<std::size_t>(scheme.at(label.get<std::string>()).index)
                                           : label.get<std::size_t>();
      tok.rate = g.at("rate").get<double>();
      spec.giveaways.push_back(std::move(tok));
    }
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("malformed synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synthetic spec " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_synth_spec(text.str());
}

std::string synth_spec_json(const SynthSpec& spec) {
  ordered_json j;
  j["n_labels"] = spec.n_labels;
  j["label_prior"] = spec.label_prior;
  j["vocab_size"] = spec.vocab_size;
  j["sentence_length"] = {spec.sentence_length.min, spec.sentence_length.max};
  const LabelScheme scheme = spec.scheme();
  j["giveaways"] = ordered_json::array();
  for (const auto& g : spec.giveaways) {
    j["giveaways"].push_back({{"token", g.token},
                              {"label", g.target_label < scheme.size() ? scheme.label(g.target_label).name
                                                                       : std::to_string(g.target_label)},
                              {"rate", g.rate}});
  }
  j["seed"] = spec.seed;
  return j.dump(2);
}

}  // namespace hyponli
