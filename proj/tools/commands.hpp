#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <hyponli/corpus.hpp>
#include <hyponli/eval.hpp>
#include <hyponli/model.hpp>
#include <hyponli/stats.hpp>
#include <hyponli/train.hpp>

namespace hyponli::cli {

// Everything a subcommand needs. Component seeds (embeddings, init, shuffling,
// audits, splitting) are all derived from `seed`.
struct RunConfig {
  std::string subcommand;

  std::filesystem::path train;
  std::filesystem::path dev;
  std::filesystem::path test;
  std::filesystem::path input;  // split, audit-sample
  std::string format = "native";  // native, snli, mnli, joci, tsv
  std::string scheme = "3way";    // 3way, 2way

  std::filesystem::path embeddings;  // empty: seeded random vectors
  std::size_t embedding_dim = 50;
  ModelConfig model;
  TrainConfig training;

  std::filesystem::path out_dir;
  std::uint64_t seed = 0;

  std::uint64_t min_freq = 5;
  std::size_t top_k = 10;
  double grid_step = 0.01;
  CoverageMode coverage_mode = CoverageMode::max_label;
  std::size_t threads = 1;

  GroupMajority group_majority = GroupMajority::within_group;

  std::filesystem::path synth_spec;
  std::size_t n_train = 10000;
  std::size_t n_dev = 1000;
  std::size_t n_test = 1000;
  std::optional<std::uint64_t> synth_seed;

  std::filesystem::path checkpoint;
  std::size_t n_per_cell = 50;

  SplitRatios ratios;

  LabelScheme label_scheme() const;
  // "key = value" lines for reports. The output directory is left out so
  // that identical runs into different directories produce identical files.
  std::vector<std::string> provenance() const;
};

// Reads one split in the configured format; skipped records are reported on stderr.
std::vector<NLIInstance> load_instances(const RunConfig& config, const std::filesystem::path& path);

// Writes into a sibling staging directory; promote() swaps it into place.
// An unpromoted staging directory is removed on destruction.
class StagedOutput {
 public:
  explicit StagedOutput(std::filesystem::path final_dir);
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;
  ~StagedOutput();

  const std::filesystem::path& dir() const noexcept { return staging_; }
  std::filesystem::path file(const std::string& name) const { return staging_ / name; }
  void promote();
  // Moves the staging directory to `target` instead, e.g. to keep a failure dump.
  void keep_as(const std::filesystem::path& target);

 private:
  std::filesystem::path final_;
  std::filesystem::path staging_;
  bool done_ = false;
};

// Thrown when training stops on a non-finite loss; carries where the state dump went.
class TrainingFailed : public std::runtime_error {
 public:
  TrainingFailed(const std::string& what, std::filesystem::path dump)
      : std::runtime_error(what), dump_(std::move(dump)) {}
  const std::filesystem::path& dump_path() const noexcept { return dump_; }

 private:
  std::filesystem::path dump_;
};

// Each returns the promoted output directory.
std::filesystem::path cmd_stats(const RunConfig& config);
std::filesystem::path cmd_train_eval(const RunConfig& config);
std::filesystem::path cmd_synth(const RunConfig& config);
std::filesystem::path cmd_audit_sample(const RunConfig& config);
std::filesystem::path cmd_split(const RunConfig& config);

// $HYPONLI_OUT_DIR if set, otherwise "hyponli-out".
std::filesystem::path default_out_dir();

}  // namespace hyponli::cli
