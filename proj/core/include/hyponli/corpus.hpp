#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hyponli {

// A class tag. Ordering and equality follow the index within its scheme.
struct Label {
  int index = -1;
  std::string name;

  friend bool operator==(const Label& a, const Label& b) { return a.index == b.index; }
  friend std::strong_ordering operator<=>(const Label& a, const Label& b) {
    return a.index <=> b.index;
  }
};

// Ordered set of 2 or 3 labels with pairwise distinct, nonempty names.
class LabelScheme {
 public:
  LabelScheme(std::string id, std::vector<std::string> names);

  // entailment, neutral, contradiction
  static LabelScheme three_way();
  // entailed, not-entailed
  static LabelScheme two_way();

  const std::string& id() const noexcept { return id_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::span<const Label> labels() const noexcept { return labels_; }
  const Label& label(std::size_t index) const { return labels_.at(index); }

  std::optional<Label> find(std::string_view name) const;
  // Throws ConfigError when the name is not part of the scheme.
  const Label& at(std::string_view name) const;
  bool contains(const Label& label) const noexcept;

  friend bool operator==(const LabelScheme& a, const LabelScheme& b) {
    return a.id_ == b.id_ && a.names() == b.names();
  }

  std::vector<std::string> names() const;

 private:
  std::string id_;
  std::vector<Label> labels_;
};

struct NLIInstance {
  std::string instance_id;
  std::string premise;
  std::string hypothesis;
  Label label;
  std::optional<std::string> group_key;
  std::optional<int> ordinal;
};

bool same_fields(const NLIInstance& a, const NLIInstance& b);

struct Dataset {
  std::string name;
  LabelScheme scheme = LabelScheme::three_way();
  std::map<std::string, std::vector<NLIInstance>> splits;

  // Throws std::out_of_range naming the missing split.
  const std::vector<NLIInstance>& split(const std::string& split_name) const;
  bool has_split(const std::string& split_name) const { return splits.contains(split_name); }
  // Throws ConfigError if any instance carries a label outside the scheme.
  void validate() const;
};

// Record keys for JSONL ingestion. Optional keys are left empty when a format
// has no such field. `premise` may name several keys joined with '+', in
// which case their values are concatenated with a single space (MPE-style
// multi-caption premises); an array value is joined the same way.
struct FieldMap {
  std::string premise = "premise";
  std::string hypothesis = "hypothesis";
  // Empty: the label is derived from the ordinal field with the JOCI mapping.
  std::string label = "label";
  std::string group = "group";
  std::string ordinal = "ordinal";
  std::string id = "id";
  // Raw label value -> scheme label name, applied before scheme lookup.
  std::map<std::string, std::string> label_aliases;

  static FieldMap native();
  // sentence1 / sentence2 / gold_label / pairID
  static FieldMap snli();
  // native keys, label taken from the ordinal 1-5 score
  static FieldMap joci();
  // Throws ConfigError for an unknown preset name.
  static FieldMap preset(std::string_view name);
};

// Column roles for TSV ingestion. Tab is the only delimiter; nothing is quoted.
struct ColumnSpec {
  std::optional<std::size_t> premise = 0;
  std::size_t hypothesis = 1;
  std::optional<std::size_t> label = 2;
  std::optional<std::size_t> group;
  std::optional<std::size_t> ordinal;
  std::optional<std::size_t> id;
  // 0 means "one past the largest role index".
  std::size_t n_columns = 0;
  bool has_header = false;
  std::map<std::string, std::string> label_aliases;

  std::size_t expected_columns() const;
};

struct ReadResult {
  std::vector<NLIInstance> instances;
  // Records whose label is not in the scheme (e.g. SNLI's "-").
  std::size_t skipped_unlabeled = 0;
  // Records with an empty hypothesis.
  std::size_t skipped_empty = 0;

  std::size_t skipped() const noexcept { return skipped_unlabeled + skipped_empty; }
};

ReadResult read_jsonl(const std::filesystem::path& path, const FieldMap& fields,
                      const LabelScheme& scheme);
ReadResult read_tsv(const std::filesystem::path& path, const ColumnSpec& columns,
                    const LabelScheme& scheme);

// Native keys (id, premise, hypothesis, label, group, ordinal); optional
// fields are omitted when absent.
void write_jsonl(const std::filesystem::path& path, std::span<const NLIInstance> instances);
std::string to_jsonl_line(const NLIInstance& instance);

// 1 -> contradiction, 2..4 -> neutral, 5 -> entailment in the three-way scheme.
Label joci_label(int ordinal);
// Throws ConfigError naming the instance when an ordinal is missing or out of range.
std::vector<NLIInstance> remap_joci_ordinal(std::span<const NLIInstance> instances);

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;

  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

// dev and test are floored; the remainder goes to train.
SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios);

Dataset random_split(std::span<const NLIInstance> instances, const LabelScheme& scheme,
                     std::uint64_t seed, const SplitRatios& ratios = {},
                     std::string name = "dataset");

// Most frequent gold label; ties go to the lowest label index.
Label majority_label(std::span<const NLIInstance> instances, const LabelScheme& scheme);

}  // namespace hyponli
