#pragma once

// Deliberately naive recomputations used as test oracles. Nothing here shares
// code with the library beyond the tokenizer and the data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <hyponli/corpus.hpp>
#include <hyponli/model.hpp>
#include <hyponli/rng.hpp>
#include <hyponli/text.hpp>

namespace hyponli::oracle {

struct Tally {
  std::map<std::string, std::array<std::uint64_t, 3>> occ;
  std::map<std::string, std::array<std::uint64_t, 3>> presence;
  std::array<std::uint64_t, 3> sentences{};
};

inline Tally tally(const std::vector<NLIInstance>& items) {
  Tally t;
  for (const auto& inst : items) {
    const auto l = static_cast<std::size_t>(inst.label.index);
    ++t.sentences[l];
    std::set<std::string> seen;
    for (const auto& tok : tokenize(inst.hypothesis)) {
      ++t.occ[tok][l];
      t.presence[tok];
      if (seen.insert(tok).second) ++t.presence[tok][l];
    }
  }
  return t;
}

inline std::uint64_t total(const std::array<std::uint64_t, 3>& a) { return a[0] + a[1] + a[2]; }

inline double p(const Tally& t, const std::string& tok, int label) {
  const auto& a = t.occ.at(tok);
  return static_cast<double>(a[static_cast<std::size_t>(label)]) / static_cast<double>(total(a));
}

inline double max_p(const Tally& t, const std::string& tok) {
  return std::max({p(t, tok, 0), p(t, tok, 1), p(t, tok, 2)});
}

struct Giveaway {
  std::string token;
  int label;
  double score;
  std::uint64_t freq;
};

inline std::map<int, std::vector<Giveaway>> giveaways(const Tally& t, int n_labels, std::uint64_t min_freq,
                                                      std::size_t top_k) {
  std::map<int, std::vector<Giveaway>> lists;
  for (const auto& [tok, a] : t.occ) {
    const auto f = total(a);
    if (f < min_freq) continue;
    int best = 0;
    for (int l = 1; l < n_labels; ++l) {
      if (a[static_cast<std::size_t>(l)] > a[static_cast<std::size_t>(best)]) best = l;
    }
    lists[best].push_back({tok, best, p(t, tok, best), f});
  }
  for (auto& [label, v] : lists) {
    std::sort(v.begin(), v.end(), [](const Giveaway& a, const Giveaway& b) {
      return std::tie(b.freq, b.score, a.token) < std::tie(a.freq, a.score, b.token);
    });
    if (v.size() > top_k) v.resize(top_k);
  }
  return lists;
}

// Rescans every sentence of the label at threshold x.
inline std::uint64_t coverage(const std::vector<NLIInstance>& items, const Tally& t, int label, double x,
                              bool gold_mode) {
  std::uint64_t y = 0;
  for (const auto& inst : items) {
    if (inst.label.index != label) continue;
    if (x <= 0.0) {
      ++y;
      continue;
    }
    for (const auto& tok : tokenize(inst.hypothesis)) {
      const double s = gold_mode ? p(t, tok, label) : max_p(t, tok);
      if (s >= x) {
        ++y;
        break;
      }
    }
  }
  return y;
}

// Small random corpus: up to max_sentences hypotheses over a vocabulary of
// up to max_vocab words, uniformly random labels.
inline std::vector<NLIInstance> random_corpus(Rng& rng, const LabelScheme& scheme, std::size_t max_sentences,
                                              std::size_t max_vocab) {
  const std::size_t n = 1 + rng.below(max_sentences);
  const std::size_t v = 1 + rng.below(max_vocab);
  std::vector<NLIInstance> out;
  for (std::size_t i = 0; i < n; ++i) {
    NLIInstance inst;
    inst.instance_id = "r" + std::to_string(i);
    inst.premise = "ignored";
    const std::size_t len = rng.below(9);
    for (std::size_t k = 0; k < len; ++k) {
      if (k) inst.hypothesis += ' ';
      inst.hypothesis += "w" + std::to_string(rng.below(v));
    }
    inst.label = scheme.label(rng.below(scheme.size()));
    out.push_back(std::move(inst));
  }
  return out;
}

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Step-by-step scalar LSTM, gates in input, forget, output, candidate order.
inline std::vector<std::vector<double>> scalar_lstm(const LstmWeights& w, const std::vector<std::vector<double>>& xs) {
  const auto H = static_cast<std::size_t>(w.recurrent.cols());
  const auto D = static_cast<std::size_t>(w.input.cols());
  std::vector<double> h(H, 0.0), c(H, 0.0);
  std::vector<std::vector<double>> states;
  for (const auto& x : xs) {
    std::vector<double> z(4 * H);
    for (std::size_t k = 0; k < 4 * H; ++k) {
      double s = w.bias(static_cast<Eigen::Index>(k));
      for (std::size_t d = 0; d < D; ++d) s += w.input(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d)) * x[d];
      for (std::size_t j = 0; j < H; ++j) {
        s += w.recurrent(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * h[j];
      }
      z[k] = s;
    }
    for (std::size_t j = 0; j < H; ++j) {
      const double i = sig(z[j]);
      const double f = sig(z[H + j]);
      const double o = sig(z[2 * H + j]);
      const double g = std::tanh(z[3 * H + j]);
      c[j] = f * c[j] + i * g;
      h[j] = o * std::tanh(c[j]);
    }
    states.push_back(h);
  }
  return states;
}

// For each of the 2H pooled units, the timestep whose hidden state is the
// maximum (earliest on ties). Backward-direction steps count from the end.
inline std::vector<std::size_t> maxpool_argmax(const TokenIds& ids, const ModelParameters& p) {
  std::vector<std::vector<double>> xs;
  for (int id : ids) {
    std::vector<double> x(static_cast<std::size_t>(p.embeddings.rows()));
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = p.embeddings(static_cast<Eigen::Index>(d), id);
    xs.push_back(x);
  }
  const auto fwd = scalar_lstm(p.forward, xs);
  std::reverse(xs.begin(), xs.end());
  const auto bwd = scalar_lstm(p.backward, xs);
  const std::size_t H = fwd.front().size();
  std::vector<std::size_t> arg(2 * H, 0);
  for (std::size_t t = 1; t < fwd.size(); ++t) {
    for (std::size_t j = 0; j < H; ++j) {
      if (fwd[t][j] > fwd[arg[j]][j]) arg[j] = t;
      if (bwd[t][j] > bwd[arg[H + j]][j]) arg[H + j] = t;
    }
  }
  return arg;
}

}  // namespace hyponli::oracle
