#include "hyponli/eval.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <numeric>

#include <fmt/format.h>

#include "hyponli/csv.hpp"
#include "hyponli/error.hpp"
#include "hyponli/stats.hpp"

namespace hyponli {
namespace {

void check_aligned(std::size_t n_pred, std::size_t n_gold) {
  if (n_pred != n_gold) {
    throw ShapeError(fmt::format("{} predictions for {} gold labels", n_pred, n_gold));
  }
  if (n_pred == 0) throw ShapeError("accuracy over zero instances is undefined");
}

double percent(std::size_t hits, std::size_t total) {
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

std::string pct_text(const std::optional<double>& pct) {
  return pct ? signed_fixed(*pct, 2) : std::string("undefined");
}

}  // namespace

std::vector<Label> gold_labels(std::span<const NLIInstance> instances) {
  std::vector<Label> gold;
  gold.reserve(instances.size());
  for (const auto& inst : instances) gold.push_back(inst.label);
  return gold;
}

double accuracy(std::span<const Prediction> predictions, std::span<const Label> gold) {
  check_aligned(predictions.size(), gold.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += predictions[i].label == gold[i] ? 1 : 0;
  return percent(hits, gold.size());
}

Delta delta_report(double hyp_acc, double maj_acc) {
  if (maj_acc < 0.0) throw ConfigError("majority accuracy must be nonnegative");
  Delta d;
  d.abs_delta = hyp_acc - maj_acc;
  if (maj_acc > 0.0) d.pct_delta = 100.0 * d.abs_delta / maj_acc;
  return d;
}

std::map<Label, double> per_class_accuracy(std::span<const Prediction> predictions,
                                           std::span<const Label> gold) {
  check_aligned(predictions.size(), gold.size());
  std::map<Label, std::pair<std::size_t, std::size_t>> tally;  // hits, total
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto& [hits, total] = tally[gold[i]];
    ++total;
    hits += predictions[i].label == gold[i] ? 1 : 0;
  }
  std::map<Label, double> out;
  for (const auto& [label, t] : tally) out[label] = percent(t.first, t.second);
  return out;
}

std::map<std::string, GroupAccuracy> per_group_accuracy(std::span<const Prediction> predictions,
                                                        std::span<const Label> gold,
                                                        std::span<const std::string> groups,
                                                        GroupMajority mode,
                                                        std::optional<Label> global_majority) {
  check_aligned(predictions.size(), gold.size());
  if (groups.size() != gold.size()) throw ShapeError("group keys are not aligned with instances");
  if (mode == GroupMajority::global && !global_majority) {
    throw ConfigError("global group majority requires a majority label");
  }
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);

  std::map<std::string, GroupAccuracy> out;
  for (const auto& [key, idx] : members) {
    GroupAccuracy g;
    g.size = idx.size();
    if (mode == GroupMajority::global) {
      g.majority = *global_majority;
    } else {
      std::map<Label, std::size_t> counts;
      for (auto i : idx) ++counts[gold[i]];
      // std::map iterates in label-index order, so the first maximum wins ties.
      std::size_t best = 0;
      for (const auto& [label, c] : counts) {
        if (c > best) {
          best = c;
          g.majority = label;
        }
      }
    }
    std::size_t hits = 0, maj_hits = 0;
    for (auto i : idx) {
      hits += predictions[i].label == gold[i] ? 1 : 0;
      maj_hits += gold[i] == g.majority ? 1 : 0;
    }
    g.hyp_acc = percent(hits, idx.size());
    g.maj_acc = percent(maj_hits, idx.size());
    g.pct_delta = delta_report(g.hyp_acc, g.maj_acc).pct_delta;
    out.emplace(key, g);
  }
  return out;
}

bool constant_prediction_check(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw ShapeError("no predictions");
  return std::all_of(predictions.begin(), predictions.end(),
                     [&](const Prediction& p) { return p.label == predictions.front().label; });
}

std::string random_sentence(Rng& rng) {
  static constexpr std::array<const char*, 24> kWords = {
      "the",   "a",      "man",    "woman",  "dog",    "is",     "was",   "near",
      "park",  "red",    "quickly", "table", "river",  "under",  "two",   "people",
      "old",   "street", "singing", "blue",  "house",  "tree",   "with",  "child"};
  const std::size_t len = 3 + rng.below(10);
  std::string s;
  for (std::size_t i = 0; i < len; ++i) {
    if (i) s += ' ';
    s += kWords[rng.below(kWords.size())];
  }
  return s;
}

bool prediction_invariance_audit(const HypothesisModel& model, std::span<const NLIInstance> instances,
                                 const Perturbation& perturb, std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& inst : instances) {
    const NLIInstance changed = perturb(inst, rng);
    const Prediction a = model.predict(inst.hypothesis);
    const Prediction b = model.predict(changed.hypothesis);
    if (!(a.label == b.label) || a.logits.size() != b.logits.size() ||
        std::memcmp(a.logits.data(), b.logits.data(), a.logits.size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

bool premise_invariance_audit(const HypothesisModel& model, std::span<const NLIInstance> instances,
                              std::uint64_t perturbation_seed) {
  return prediction_invariance_audit(
      model, instances,
      [](const NLIInstance& inst, Rng& rng) {
        NLIInstance copy = inst;
        copy.premise = random_sentence(rng);
        return copy;
      },
      perturbation_seed);
}

std::size_t ConfusionSample::total() const {
  std::size_t n = 0;
  for (const auto& [key, ids] : cells) n += ids.size();
  return n;
}

ConfusionSample confusion_sample(std::span<const NLIInstance> instances,
                                 std::span<const Prediction> predictions, std::size_t n_per_cell,
                                 std::uint64_t seed) {
  if (n_per_cell < 1) throw ConfigError("n_per_cell must be at least 1");
  check_aligned(predictions.size(), instances.size());
  std::map<std::pair<Label, Label>, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    members[{instances[i].label, predictions[i].label}].push_back(i);
  }
  ConfusionSample sample;
  sample.n_per_cell = n_per_cell;
  sample.seed = seed;
  for (auto& [cell, idx] : members) {
    // One stream per cell so a cell's draw does not depend on the others.
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cell.first.index * 16 + cell.second.index)));
    rng.shuffle(idx);
    if (idx.size() > n_per_cell) idx.resize(n_per_cell);
    std::sort(idx.begin(), idx.end());
    auto& ids = sample.cells[cell];
    for (auto i : idx) ids.push_back(instances[i].instance_id);
  }
  return sample;
}

void write_confusion_sample(std::ostream& out, const ConfusionSample& sample,
                            std::span<const NLIInstance> instances) {
  std::map<std::string, const NLIInstance*> by_id;
  for (const auto& inst : instances) by_id.emplace(inst.instance_id, &inst);
  out << "id\tgold\tpredicted\thypothesis\tjudgment\n";
  for (const auto& [cell, ids] : sample.cells) {
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw ConfigError("sampled id " + id + " is not in the instance list");
      out << id << '\t' << cell.first.name << '\t' << cell.second.name << '\t' << it->second->hypothesis
          << "\t\n";
    }
  }
}

EvalReport build_report(const std::string& split, std::span<const NLIInstance> instances,
                        std::span<const Prediction> predictions, const LabelScheme& scheme,
                        const Label& train_majority, GroupMajority group_mode) {
  check_aligned(predictions.size(), instances.size());
  const auto gold = gold_labels(instances);

  EvalReport r;
  r.split = split;
  r.n = instances.size();
  r.train_majority = train_majority;
  r.hyp_only_acc = accuracy(predictions, gold);
  r.maj_acc = majority_accuracy(instances, train_majority);
  const Delta d = delta_report(r.hyp_only_acc, r.maj_acc);
  r.abs_delta = d.abs_delta;
  r.pct_delta = d.pct_delta;
  r.split_majority = majority_label(instances, scheme);
  r.split_maj_acc = majority_accuracy(instances, r.split_majority);

  const auto per_class = per_class_accuracy(predictions, gold);
  for (const auto& [label, acc] : per_class) {
    ClassBreakdown b;
    b.support = static_cast<std::size_t>(std::count(gold.begin(), gold.end(), label));
    b.hyp_acc = acc;
    b.maj_acc = percent(b.support, gold.size());
    r.per_class[scheme.label(static_cast<std::size_t>(label.index))] = b;
  }

  const bool grouped = std::all_of(instances.begin(), instances.end(),
                                   [](const NLIInstance& i) { return i.group_key.has_value(); });
  if (grouped) {
    std::vector<std::string> groups;
    groups.reserve(instances.size());
    for (const auto& inst : instances) groups.push_back(*inst.group_key);
    r.per_group = per_group_accuracy(predictions, gold, groups, group_mode, train_majority);
  }
  r.constant_prediction = constant_prediction_check(predictions);
  return r;
}

void write_report_markdown(std::ostream& out, const std::string& title,
                           std::span<const EvalReport> reports,
                           std::span<const std::string> provenance) {
  out << "# " << title << "\n\n";
  out << "| Split | N | Hyp-Only | MAJ | |Δ| | Δ% |\n";
  out << "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& r : reports) {
    out << fmt::format("| {} | {} | {} | {} | {} | {} |\n", r.split, r.n, fixed(r.hyp_only_acc, 2),
                       fixed(r.maj_acc, 2), signed_fixed(r.abs_delta, 2), pct_text(r.pct_delta));
  }
  out << "\nMAJ scores the train-majority label on each split.\n";
  for (const auto& r : reports) {
    out << fmt::format("\n## {}\n\n", r.split);
    out << fmt::format("- train-majority label: {} (MAJ {})\n", r.train_majority.name, fixed(r.maj_acc, 2));
    out << fmt::format("- split's own majority label: {} (MAJ {}){}\n", r.split_majority.name,
                       fixed(r.split_maj_acc, 2),
                       r.majority_modes_differ() ? " **differs from train majority**" : "");
    out << fmt::format("- constant prediction: {}\n", r.constant_prediction ? "yes" : "no");
    if (r.premise_invariant) {
      out << fmt::format("- premise invariance audit: {}\n", *r.premise_invariant ? "pass" : "FAIL");
    }
    out << "\n| Label | Support | Hyp-Only | MAJ | |Δ| | Δ% |\n|---|---:|---:|---:|---:|---:|\n";
    for (const auto& [label, b] : r.per_class) {
      const Delta d = delta_report(b.hyp_acc, b.maj_acc);
      out << fmt::format("| {} | {} | {} | {} | {} | {} |\n", label.name, b.support, fixed(b.hyp_acc, 2),
                         fixed(b.maj_acc, 2), signed_fixed(d.abs_delta, 2), pct_text(d.pct_delta));
    }
    if (r.per_group) {
      out << "\n| Group | N | Majority | Hyp-Only | MAJ | Δ% |\n|---|---:|---|---:|---:|---:|\n";
      for (const auto& [key, g] : *r.per_group) {
        out << fmt::format("| {} | {} | {} | {} | {} | {} |\n", key, g.size, g.majority.name,
                           fixed(g.hyp_acc, 2), fixed(g.maj_acc, 2), pct_text(g.pct_delta));
      }
    }
  }
  if (!provenance.empty()) {
    out << "\n## Run configuration\n\n```\n";
    for (const auto& line : provenance) out << line << '\n';
    out << "```\n";
  }
}

void write_report_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "split,kind,key,n,hyp_acc,maj_acc,abs_delta,pct_delta,split_maj_acc,constant_prediction,"
         "premise_invariant\n";
  auto num = [](double v) { return fmt::format("{:.6f}", v); };
  auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  for (const auto& r : reports) {
    out << csv_field(r.split) << ",overall," << csv_field(r.train_majority.name) << ',' << r.n << ','
        << num(r.hyp_only_acc) << ',' << num(r.maj_acc) << ',' << num(r.abs_delta) << ','
        << opt(r.pct_delta) << ',' << num(r.split_maj_acc) << ',' << (r.constant_prediction ? 1 : 0)
        << ',' << (r.premise_invariant ? (*r.premise_invariant ? "1" : "0") : "") << '\n';
    for (const auto& [label, b] : r.per_class) {
      const Delta d = delta_report(b.hyp_acc, b.maj_acc);
      out << csv_field(r.split) << ",class," << csv_field(label.name) << ',' << b.support << ','
          << num(b.hyp_acc) << ',' << num(b.maj_acc) << ',' << num(d.abs_delta) << ',' << opt(d.pct_delta)
          << ",,,\n";
    }
    if (r.per_group) {
      for (const auto& [key, g] : *r.per_group) {
        out << csv_field(r.split) << ",group," << csv_field(key) << ',' << g.size << ',' << num(g.hyp_acc)
            << ',' << num(g.maj_acc) << ',' << num(g.hyp_acc - g.maj_acc) << ',' << opt(g.pct_delta)
            << ",,,\n";
      }
    }
  }
}

}  // namespace hyponli
