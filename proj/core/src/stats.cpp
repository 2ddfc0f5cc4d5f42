#include "hyponli/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include <fmt/format.h>

#include "hyponli/csv.hpp"
#include "hyponli/error.hpp"

namespace hyponli {

LabelWordCounts::LabelWordCounts(LabelScheme scheme)
    : scheme_(std::move(scheme)), label_counts_(scheme_.size(), 0) {}

std::size_t LabelWordCounts::intern(std::string_view token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const std::size_t id = tokens_.size();
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  occ_.resize(occ_.size() + n_labels(), 0);
  presence_.resize(presence_.size() + n_labels(), 0);
  totals_.push_back(0);
  return id;
}

void LabelWordCounts::add_sentence(const TokenizedSentence& tokens, const Label& label) {
  if (!scheme_.contains(label)) {
    throw ConfigError(fmt::format("label '{}' is not part of scheme '{}'", label.name, scheme_.id()));
  }
  const auto l = static_cast<std::size_t>(label.index);
  Sentence sentence{label.index, {}};
  for (const auto& tok : tokens) {
    const std::size_t id = intern(tok);
    ++occ_[id * n_labels() + l];
    ++totals_[id];
    if (std::find(sentence.token_ids.begin(), sentence.token_ids.end(), id) == sentence.token_ids.end()) {
      sentence.token_ids.push_back(static_cast<std::uint32_t>(id));
      ++presence_[id * n_labels() + l];
    }
  }
  ++label_counts_[l];
  sentences_.push_back(std::move(sentence));
}

void LabelWordCounts::merge(const LabelWordCounts& other) {
  if (!(other.scheme_ == scheme_)) throw ConfigError("cannot merge counts over different schemes");
  std::vector<std::size_t> remap(other.tokens_.size());
  for (std::size_t i = 0; i < other.tokens_.size(); ++i) remap[i] = intern(other.tokens_[i]);
  for (std::size_t i = 0; i < other.tokens_.size(); ++i) {
    const std::size_t id = remap[i];
    for (std::size_t l = 0; l < n_labels(); ++l) {
      occ_[id * n_labels() + l] += other.occ_[i * n_labels() + l];
      presence_[id * n_labels() + l] += other.presence_[i * n_labels() + l];
    }
    totals_[id] += other.totals_[i];
  }
  for (std::size_t l = 0; l < n_labels(); ++l) label_counts_[l] += other.label_counts_[l];
  for (const auto& s : other.sentences_) {
    Sentence copy{s.label, {}};
    copy.token_ids.reserve(s.token_ids.size());
    for (auto id : s.token_ids) copy.token_ids.push_back(static_cast<std::uint32_t>(remap[id]));
    sentences_.push_back(std::move(copy));
  }
}

std::uint64_t LabelWordCounts::count_l(const Label& label) const {
  return label_counts_.at(static_cast<std::size_t>(label.index));
}

std::optional<std::size_t> LabelWordCounts::token_id(std::string_view token) const {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  return std::nullopt;
}

std::uint64_t LabelWordCounts::count_w(std::string_view token) const {
  auto id = token_id(token);
  return id ? totals_[*id] : 0;
}

std::uint64_t LabelWordCounts::count_wl(std::string_view token, const Label& label) const {
  auto id = token_id(token);
  return id ? occurrences(*id)[static_cast<std::size_t>(label.index)] : 0;
}

std::uint64_t LabelWordCounts::presence_wl(std::string_view token, const Label& label) const {
  auto id = token_id(token);
  return id ? presence(*id)[static_cast<std::size_t>(label.index)] : 0;
}

std::span<const std::uint64_t> LabelWordCounts::occurrences(std::size_t id) const {
  if (id >= tokens_.size()) throw std::out_of_range("token id out of range");
  return std::span<const std::uint64_t>(occ_).subspan(id * n_labels(), n_labels());
}

std::span<const std::uint64_t> LabelWordCounts::presence(std::size_t id) const {
  if (id >= tokens_.size()) throw std::out_of_range("token id out of range");
  return std::span<const std::uint64_t>(presence_).subspan(id * n_labels(), n_labels());
}

bool equivalent(const LabelWordCounts& a, const LabelWordCounts& b) {
  if (!(a.scheme() == b.scheme()) || a.n_types() != b.n_types() || a.n_sentences() != b.n_sentences()) {
    return false;
  }
  for (const auto& l : a.scheme().labels()) {
    if (a.count_l(l) != b.count_l(l)) return false;
  }
  std::vector<std::size_t> to_b(a.n_types());
  for (std::size_t i = 0; i < a.n_types(); ++i) {
    auto j = b.token_id(a.token(i));
    if (!j) return false;
    to_b[i] = *j;
    if (a.total(i) != b.total(*j)) return false;
    auto ao = a.occurrences(i), bo = b.occurrences(*j);
    auto ap = a.presence(i), bp = b.presence(*j);
    if (!std::equal(ao.begin(), ao.end(), bo.begin()) || !std::equal(ap.begin(), ap.end(), bp.begin())) {
      return false;
    }
  }
  for (std::size_t s = 0; s < a.n_sentences(); ++s) {
    const auto& sa = a.sentences()[s];
    const auto& sb = b.sentences()[s];
    if (sa.label != sb.label || sa.token_ids.size() != sb.token_ids.size()) return false;
    for (std::size_t k = 0; k < sa.token_ids.size(); ++k) {
      if (to_b[sa.token_ids[k]] != sb.token_ids[k]) return false;
    }
  }
  return true;
}

LabelWordCounts count_corpus(std::span<const NLIInstance> instances, const LabelScheme& scheme,
                             const Tokenizer& tokenizer) {
  LabelWordCounts counts(scheme);
  for (const auto& inst : instances) counts.add_sentence(tokenizer(inst.hypothesis), inst.label);
  return counts;
}

LabelWordCounts count_corpus_sharded(std::span<const NLIInstance> instances,
                                     const LabelScheme& scheme, std::size_t n_shards,
                                     const Tokenizer& tokenizer) {
  n_shards = std::max<std::size_t>(1, std::min(n_shards, std::max<std::size_t>(1, instances.size())));
  std::vector<LabelWordCounts> shards(n_shards, LabelWordCounts(scheme));
  std::vector<std::exception_ptr> errors(n_shards);
  {
    std::vector<std::jthread> workers;
    const std::size_t per = (instances.size() + n_shards - 1) / n_shards;
    for (std::size_t s = 0; s < n_shards; ++s) {
      const std::size_t lo = std::min(instances.size(), s * per);
      const std::size_t hi = std::min(instances.size(), lo + per);
      workers.emplace_back([&, s, lo, hi] {
        try {
          shards[s] = count_corpus(instances.subspan(lo, hi - lo), scheme, tokenizer);
        } catch (...) {
          errors[s] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  LabelWordCounts merged(scheme);
  for (const auto& shard : shards) merged.merge(shard);
  return merged;
}

double p_label_given_word(const LabelWordCounts& counts, std::string_view token, const Label& label) {
  auto id = counts.token_id(token);
  if (!id) throw std::out_of_range("token '" + std::string(token) + "' never occurs in the counts");
  return static_cast<double>(counts.occurrences(*id)[static_cast<std::size_t>(label.index)]) /
         static_cast<double>(counts.total(*id));
}

namespace {

// argmax label (lowest index on ties) and its count.
std::pair<std::size_t, std::uint64_t> top_label(std::span<const std::uint64_t> occ) {
  std::size_t best = 0;
  for (std::size_t l = 1; l < occ.size(); ++l) {
    if (occ[l] > occ[best]) best = l;
  }
  return {best, occ[best]};
}

double word_score(const LabelWordCounts& counts, std::size_t id, std::size_t label,
                  CoverageMode mode) {
  const auto occ = counts.occurrences(id);
  const double total = static_cast<double>(counts.total(id));
  if (mode == CoverageMode::gold_label) return static_cast<double>(occ[label]) / total;
  return static_cast<double>(top_label(occ).second) / total;
}

std::vector<double> sentence_scores(const LabelWordCounts& counts, const Label& label,
                                    CoverageMode mode) {
  const auto l = static_cast<std::size_t>(label.index);
  std::vector<double> word(counts.n_types());
  for (std::size_t id = 0; id < counts.n_types(); ++id) word[id] = word_score(counts, id, l, mode);
  std::vector<double> scores;
  for (const auto& s : counts.sentences()) {
    if (s.label != label.index) continue;
    double best = 0.0;
    for (auto id : s.token_ids) best = std::max(best, word[id]);
    scores.push_back(best);
  }
  return scores;
}

}  // namespace

std::map<Label, std::vector<GiveawayEntry>> giveaway_words(const LabelWordCounts& counts,
                                                           std::uint64_t min_freq, std::size_t top_k) {
  if (min_freq < 1) throw ConfigError("min_freq must be at least 1");
  std::map<Label, std::vector<GiveawayEntry>> lists;
  for (const auto& l : counts.scheme().labels()) lists[l];

  for (std::size_t id = 0; id < counts.n_types(); ++id) {
    const std::uint64_t freq = counts.total(id);
    if (freq < min_freq) continue;
    const auto [best, hits] = top_label(counts.occurrences(id));
    const Label& label = counts.scheme().label(best);
    lists[label].push_back(GiveawayEntry{counts.token(id), label,
                                         static_cast<double>(hits) / static_cast<double>(freq), freq});
  }
  for (auto& [label, entries] : lists) {
    std::sort(entries.begin(), entries.end(), [](const GiveawayEntry& a, const GiveawayEntry& b) {
      if (a.frequency != b.frequency) return a.frequency > b.frequency;
      if (a.score != b.score) return a.score > b.score;
      return a.token < b.token;
    });
    if (entries.size() > top_k) entries.resize(top_k);
  }
  return lists;
}

std::vector<double> threshold_grid(double step) {
  if (!(step > 0.0) || step > 0.5) throw ConfigError(fmt::format("grid step {} outside (0, 0.5]", step));
  std::vector<double> grid;
  const double inv = 1.0 / step;
  const double n = std::round(inv);
  if (std::abs(n * step - 1.0) < 1e-9) {
    const auto steps = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i <= steps; ++i) grid.push_back(static_cast<double>(i) / n);
    return grid;
  }
  for (std::size_t i = 0;; ++i) {
    const double x = static_cast<double>(i) * step;
    if (x > 1.0) break;
    grid.push_back(x);
  }
  if (grid.back() < 1.0) grid.push_back(1.0);
  return grid;
}

std::uint64_t coverage_count(const LabelWordCounts& counts, const Label& label, double x,
                             CoverageMode mode) {
  const auto scores = sentence_scores(counts, label, mode);
  if (x <= 0.0) return scores.size();
  return static_cast<std::uint64_t>(std::count_if(scores.begin(), scores.end(),
                                                  [x](double s) { return s >= x; }));
}

CoverageCurve coverage_curve(const LabelWordCounts& counts, const Label& label, double grid_step,
                             CoverageMode mode) {
  CoverageCurve curve{label, threshold_grid(grid_step), {}};
  auto scores = sentence_scores(counts, label, mode);
  std::sort(scores.begin(), scores.end());
  curve.y.reserve(curve.grid.size());
  for (double x : curve.grid) {
    if (x <= 0.0) {
      curve.y.push_back(scores.size());
      continue;
    }
    const auto first = std::lower_bound(scores.begin(), scores.end(), x);
    curve.y.push_back(static_cast<std::uint64_t>(scores.end() - first));
  }
  return curve;
}

double majority_accuracy(std::span<const NLIInstance> eval_split, const Label& maj) {
  if (eval_split.empty()) throw ConfigError("majority accuracy of an empty split is undefined");
  const auto hits = std::count_if(eval_split.begin(), eval_split.end(),
                                  [&](const NLIInstance& inst) { return inst.label == maj; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(eval_split.size());
}

void write_giveaways_csv(std::ostream& out, const std::map<Label, std::vector<GiveawayEntry>>& lists) {
  out << "label,token,score,freq\n";
  for (const auto& [label, entries] : lists) {
    for (const auto& e : entries) {
      out << csv_field(label.name) << ',' << csv_field(e.token) << ',' << fmt::format("{:.6f}", e.score)
          << ',' << e.frequency << '\n';
    }
  }
}

void write_coverage_csv(std::ostream& out, std::span<const CoverageCurve> curves) {
  out << "label,x,y\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
      out << csv_field(c.label.name) << ',' << fmt::format("{:.4f}", c.grid[i]) << ',' << c.y[i] << '\n';
    }
  }
}

void write_counts_csv(std::ostream& out, const LabelWordCounts& counts) {
  out << "label,sentences,tokens,types\n";
  std::vector<std::uint64_t> tokens(counts.n_labels(), 0), types(counts.n_labels(), 0);
  for (std::size_t id = 0; id < counts.n_types(); ++id) {
    const auto occ = counts.occurrences(id);
    for (std::size_t l = 0; l < counts.n_labels(); ++l) {
      tokens[l] += occ[l];
      types[l] += occ[l] > 0 ? 1 : 0;
    }
  }
  std::uint64_t all_tokens = 0;
  for (const auto& l : counts.scheme().labels()) {
    const auto i = static_cast<std::size_t>(l.index);
    all_tokens += tokens[i];
    out << csv_field(l.name) << ',' << counts.count_l(l) << ',' << tokens[i] << ',' << types[i] << '\n';
  }
  out << "ALL," << counts.n_sentences() << ',' << all_tokens << ',' << counts.n_types() << '\n';
}

}  // namespace hyponli
