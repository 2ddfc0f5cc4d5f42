#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyponli/corpus.hpp"
#include "hyponli/model.hpp"
#include "hyponli/rng.hpp"

namespace hyponli {

std::vector<Label> gold_labels(std::span<const NLIInstance> instances);

// 100 * matches / total. Throws ShapeError on length mismatch or empty input.
double accuracy(std::span<const Prediction> predictions, std::span<const Label> gold);

struct Delta {
  double abs_delta = 0.0;            // percentage points
  std::optional<double> pct_delta;   // relative increase in percent; unset when maj == 0
};

Delta delta_report(double hyp_acc, double maj_acc);

// Accuracy over the instances of each gold label; labels without gold
// instances are omitted.
std::map<Label, double> per_class_accuracy(std::span<const Prediction> predictions,
                                           std::span<const Label> gold);

enum class GroupMajority {
  within_group,  // each group's own most frequent gold label
  global,        // one label for every group (normally the train majority)
};

struct GroupAccuracy {
  std::size_t size = 0;
  Label majority;
  double hyp_acc = 0.0;
  double maj_acc = 0.0;
  std::optional<double> pct_delta;
};

// `global_majority` is required for GroupMajority::global.
std::map<std::string, GroupAccuracy> per_group_accuracy(
    std::span<const Prediction> predictions, std::span<const Label> gold,
    std::span<const std::string> groups, GroupMajority mode = GroupMajority::within_group,
    std::optional<Label> global_majority = std::nullopt);

// True iff every prediction carries the same label.
bool constant_prediction_check(std::span<const Prediction> predictions);

using Perturbation = std::function<NLIInstance(const NLIInstance&, Rng&)>;

// A random filler sentence of 3-12 words.
std::string random_sentence(Rng& rng);

// True iff predictions are identical (labels and logits, bitwise) before and
// after applying `perturb` to every instance.
bool prediction_invariance_audit(const HypothesisModel& model, std::span<const NLIInstance> instances,
                                 const Perturbation& perturb, std::uint64_t seed);

// Every premise replaced by a random sentence.
bool premise_invariance_audit(const HypothesisModel& model, std::span<const NLIInstance> instances,
                              std::uint64_t perturbation_seed);

struct ConfusionSample {
  std::map<std::pair<Label, Label>, std::vector<std::string>> cells;  // (gold, predicted) -> ids
  std::size_t n_per_cell = 0;
  std::uint64_t seed = 0;

  std::size_t total() const;
};

// Up to n_per_cell ids drawn without replacement from each (gold, predicted)
// cell; sampled ids keep their corpus order.
ConfusionSample confusion_sample(std::span<const NLIInstance> instances,
                                 std::span<const Prediction> predictions, std::size_t n_per_cell,
                                 std::uint64_t seed);

// TSV for manual annotation: id, gold, predicted, hypothesis, judgment (blank).
void write_confusion_sample(std::ostream& out, const ConfusionSample& sample,
                            std::span<const NLIInstance> instances);

struct ClassBreakdown {
  std::size_t support = 0;
  double hyp_acc = 0.0;
  // Share of the split carrying this gold label, i.e. what a constant
  // predictor of that label scores overall.
  double maj_acc = 0.0;
};

struct EvalReport {
  std::string split;
  std::size_t n = 0;
  Label train_majority;
  double hyp_only_acc = 0.0;
  double maj_acc = 0.0;  // train-majority label scored on this split
  double abs_delta = 0.0;
  std::optional<double> pct_delta;
  Label split_majority;  // this split's own most frequent gold label
  double split_maj_acc = 0.0;
  std::map<Label, ClassBreakdown> per_class;
  std::optional<std::map<std::string, GroupAccuracy>> per_group;
  bool constant_prediction = false;
  std::optional<bool> premise_invariant;

  bool majority_modes_differ() const { return !(train_majority == split_majority); }
};

// Groups are reported when every instance of the split has a group key.
EvalReport build_report(const std::string& split, std::span<const NLIInstance> instances,
                        std::span<const Prediction> predictions, const LabelScheme& scheme,
                        const Label& train_majority,
                        GroupMajority group_mode = GroupMajority::within_group);

// Table-style report; `provenance` lines go into a trailing code block.
void write_report_markdown(std::ostream& out, const std::string& title,
                           std::span<const EvalReport> reports,
                           std::span<const std::string> provenance);
// split,kind,key,n,hyp_acc,maj_acc,abs_delta,pct_delta,split_maj_acc,constant_prediction,premise_invariant
void write_report_csv(std::ostream& out, std::span<const EvalReport> reports);

}  // namespace hyponli
