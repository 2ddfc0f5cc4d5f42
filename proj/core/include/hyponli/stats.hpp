#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hyponli/corpus.hpp"
#include "hyponli/text.hpp"

namespace hyponli {

using Tokenizer = std::function<TokenizedSentence(std::string_view)>;

// Hypothesis-side co-occurrence counts behind p(l|w) = count(w,l) / count(w).
//
// Occurrence counts (count_wl, count_w) count every token occurrence.
// Presence counts (presence_wl) count sentences, at most once per sentence.
// The distinct tokens of every sentence are kept as well, since coverage
// curves ask whether a sentence contains *some* word above a threshold.
class LabelWordCounts {
 public:
  struct Sentence {
    int label = -1;
    std::vector<std::uint32_t> token_ids;  // distinct, first-occurrence order
  };

  explicit LabelWordCounts(LabelScheme scheme);

  void add_sentence(const TokenizedSentence& tokens, const Label& label);
  // Elementwise addition; other's sentences are appended after ours.
  void merge(const LabelWordCounts& other);

  const LabelScheme& scheme() const noexcept { return scheme_; }
  std::size_t n_labels() const noexcept { return scheme_.size(); }
  std::uint64_t n_sentences() const noexcept { return sentences_.size(); }
  std::uint64_t count_l(const Label& label) const;

  // All three return 0 for unseen tokens.
  std::uint64_t count_w(std::string_view token) const;
  std::uint64_t count_wl(std::string_view token, const Label& label) const;
  std::uint64_t presence_wl(std::string_view token, const Label& label) const;

  std::size_t n_types() const noexcept { return tokens_.size(); }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::optional<std::size_t> token_id(std::string_view token) const;
  std::span<const std::uint64_t> occurrences(std::size_t id) const;
  std::span<const std::uint64_t> presence(std::size_t id) const;
  std::uint64_t total(std::size_t id) const { return totals_.at(id); }
  std::span<const Sentence> sentences() const noexcept { return sentences_; }

 private:
  std::size_t intern(std::string_view token);

  LabelScheme scheme_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> ids_;
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> occ_;       // n_types x n_labels
  std::vector<std::uint64_t> presence_;  // n_types x n_labels
  std::vector<std::uint64_t> totals_;
  std::vector<std::uint64_t> label_counts_;
  std::vector<Sentence> sentences_;
};

// Same tokens with the same counts, and the same sentence sequence.
bool equivalent(const LabelWordCounts& a, const LabelWordCounts& b);

// Counts hypotheses only. Instances must carry labels from `scheme`.
LabelWordCounts count_corpus(std::span<const NLIInstance> instances, const LabelScheme& scheme,
                             const Tokenizer& tokenizer = tokenize);
// Contiguous shards counted on separate threads and merged in order.
LabelWordCounts count_corpus_sharded(std::span<const NLIInstance> instances,
                                     const LabelScheme& scheme, std::size_t n_shards,
                                     const Tokenizer& tokenizer = tokenize);

// count_wl / count_w. Throws std::out_of_range for tokens never seen.
double p_label_given_word(const LabelWordCounts& counts, std::string_view token, const Label& label);

struct GiveawayEntry {
  std::string token;
  Label label;
  double score = 0.0;
  std::uint64_t frequency = 0;
};

// Per label: tokens with count_w >= min_freq whose argmax label (lowest index
// on ties) is that label, by frequency desc, then score desc, then token.
std::map<Label, std::vector<GiveawayEntry>> giveaway_words(const LabelWordCounts& counts,
                                                           std::uint64_t min_freq = 5,
                                                           std::size_t top_k = 10);

enum class CoverageMode {
  max_label,   // max over l of p(l|w) >= x
  gold_label,  // p(curve label | w) >= x
};

struct CoverageCurve {
  Label label;
  std::vector<double> grid;
  std::vector<std::uint64_t> y;
};

// Thresholds 0, step, ..., 1. When 1/step is an integer the grid points are
// i/n exactly, so a word with p(l|w) = 0.29 lands on the 0.29 point.
std::vector<double> threshold_grid(double step);

// Sentences of the gold label containing at least one word whose score is >= x.
// Every sentence counts at x <= 0.
std::uint64_t coverage_count(const LabelWordCounts& counts, const Label& label, double x,
                             CoverageMode mode = CoverageMode::max_label);
CoverageCurve coverage_curve(const LabelWordCounts& counts, const Label& label,
                             double grid_step = 0.01, CoverageMode mode = CoverageMode::max_label);

// 100 * share of the split whose gold label is `maj`.
double majority_accuracy(std::span<const NLIInstance> eval_split, const Label& maj);

// CSV: label,token,score,freq
void write_giveaways_csv(std::ostream& out, const std::map<Label, std::vector<GiveawayEntry>>& lists);
// CSV: label,x,y
void write_coverage_csv(std::ostream& out, std::span<const CoverageCurve> curves);
// CSV: label,sentences,tokens,types
void write_counts_csv(std::ostream& out, const LabelWordCounts& counts);

}  // namespace hyponli
