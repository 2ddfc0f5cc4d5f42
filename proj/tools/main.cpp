#include <cstdio>
#include <exception>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using hyponli::cli::RunConfig;

void add_data_options(CLI::App& app, RunConfig& cfg) {
  app.add_option("--train", cfg.train, "Training split file")->check(CLI::ExistingFile);
  app.add_option("--dev", cfg.dev, "Development split file")->check(CLI::ExistingFile);
  app.add_option("--test", cfg.test, "Test split file")->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  cfg.out_dir = hyponli::cli::default_out_dir();

  CLI::App app{"Hypothesis-only NLI baselines and give-away word statistics"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file (key = value); command-line flags take precedence");
  app.add_option("--out", cfg.out_dir, "Output directory (default: $HYPONLI_OUT_DIR or hyponli-out)");
  app.add_option("--seed", cfg.seed, "Global seed; every component seed is derived from it");
  app.add_option("--format", cfg.format, "Input format preset")
      ->check(CLI::IsMember({"native", "snli", "mnli", "joci", "tsv"}));
  app.add_option("--scheme", cfg.scheme, "Label scheme")->check(CLI::IsMember({"3way", "2way"}));

  auto* stats = app.add_subcommand("stats", "Give-away words and coverage curves per split");
  stats->fallthrough();
  add_data_options(*stats, cfg);
  stats->add_option("--min-freq", cfg.min_freq, "Minimum count for give-away candidates")->check(CLI::PositiveNumber);
  stats->add_option("--top-k", cfg.top_k, "Words listed per label")->check(CLI::PositiveNumber);
  stats->add_option("--grid-step", cfg.grid_step, "Coverage threshold spacing")->check(CLI::Range(1e-6, 0.5));
  std::string coverage_mode = "max";
  stats->add_option("--coverage-mode", coverage_mode, "max: any label's score; gold: the curve's own label")
      ->check(CLI::IsMember({"max", "gold"}));
  stats->add_option("--threads", cfg.threads, "Counting threads")->check(CLI::PositiveNumber);

  auto* train_eval = app.add_subcommand("train-eval", "Train a hypothesis-only model and write evaluation reports");
  train_eval->fallthrough();
  add_data_options(*train_eval, cfg);
  train_eval->add_option("--embeddings", cfg.embeddings, "Word-vector text file (default: seeded random vectors)")
      ->check(CLI::ExistingFile);
  train_eval->add_option("--embedding-dim", cfg.embedding_dim, "Embedding dimension")->check(CLI::PositiveNumber);
  std::string encoder = "bag";
  train_eval->add_option("--encoder", encoder, "Sentence encoder")->check(CLI::IsMember({"bag", "birnn-maxpool"}));
  train_eval->add_option("--hidden-dim", cfg.model.hidden_dim, "Recurrent units per direction")
      ->check(CLI::PositiveNumber);
  train_eval->add_option("--mlp-hidden", cfg.model.mlp_hidden, "MLP hidden units")->check(CLI::PositiveNumber);
  train_eval->add_flag("--finetune", cfg.model.finetune_embeddings, "Update embeddings during training");
  train_eval->add_option("--lr0", cfg.training.lr0, "Initial learning rate");
  train_eval->add_option("--decay", cfg.training.decay, "Per-epoch learning-rate decay");
  train_eval->add_option("--divide-on-decline", cfg.training.divide_on_decline,
                         "Learning-rate divisor when dev accuracy drops");
  train_eval->add_option("--lr-floor", cfg.training.lr_floor, "Stop once the learning rate falls below this");
  train_eval->add_option("--max-epochs", cfg.training.max_epochs, "Epoch limit");
  train_eval->add_option("--batch-size", cfg.training.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  std::string decline_rule = "previous";
  train_eval->add_option("--decline-rule", decline_rule, "Dev decline measured against the previous or best epoch")
      ->check(CLI::IsMember({"previous", "best"}));
  std::string group_majority = "within";
  train_eval->add_option("--group-majority", group_majority, "Per-group MAJ label: group's own or the train majority")
      ->check(CLI::IsMember({"within", "global"}));

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with injected give-away words");
  synth->fallthrough();
  synth->add_option("--spec", cfg.synth_spec, "JSON generator spec")->required()->check(CLI::ExistingFile);
  synth->add_option("--n-train", cfg.n_train, "Training instances")->check(CLI::PositiveNumber);
  synth->add_option("--n-dev", cfg.n_dev, "Development instances")->check(CLI::PositiveNumber);
  synth->add_option("--n-test", cfg.n_test, "Test instances")->check(CLI::PositiveNumber);
  std::uint64_t synth_seed = 0;
  auto* synth_seed_opt = synth->add_option("--synth-seed", synth_seed, "Override the spec's seed");

  auto* audit = app.add_subcommand("audit-sample", "Stratified (gold, predicted) sample for manual annotation");
  audit->fallthrough();
  audit->add_option("--checkpoint", cfg.checkpoint, "Trained model")->required()->check(CLI::ExistingFile);
  audit->add_option("--input", cfg.input, "Instances to classify")->required()->check(CLI::ExistingFile);
  audit->add_option("--n-per-cell", cfg.n_per_cell, "Instances per confusion cell")->check(CLI::PositiveNumber);

  auto* split = app.add_subcommand("split", "Seeded train/dev/test split of one file");
  split->fallthrough();
  split->add_option("--input", cfg.input, "Instances to split")->required()->check(CLI::ExistingFile);
  split->add_option("--train-ratio", cfg.ratios.train, "Train share");
  split->add_option("--dev-ratio", cfg.ratios.dev, "Dev share");
  split->add_option("--test-ratio", cfg.ratios.test, "Test share");

  CLI11_PARSE(app, argc, argv);

  cfg.subcommand = app.get_subcommands().front()->get_name();
  cfg.coverage_mode = coverage_mode == "gold" ? hyponli::CoverageMode::gold_label : hyponli::CoverageMode::max_label;
  cfg.model.encoder = hyponli::encoder_kind_from_string(encoder);
  cfg.training.decline_rule =
      decline_rule == "best" ? hyponli::DeclineRule::best_so_far : hyponli::DeclineRule::previous_epoch;
  cfg.group_majority =
      group_majority == "global" ? hyponli::GroupMajority::global : hyponli::GroupMajority::within_group;
  if (synth_seed_opt->count() > 0) cfg.synth_seed = synth_seed;

  try {
    std::filesystem::path written;
    if (cfg.subcommand == "stats") written = hyponli::cli::cmd_stats(cfg);
    if (cfg.subcommand == "train-eval") written = hyponli::cli::cmd_train_eval(cfg);
    if (cfg.subcommand == "synth") written = hyponli::cli::cmd_synth(cfg);
    if (cfg.subcommand == "audit-sample") written = hyponli::cli::cmd_audit_sample(cfg);
    if (cfg.subcommand == "split") written = hyponli::cli::cmd_split(cfg);
    fmt::print(stderr, "wrote {}\n", written.string());
  } catch (const hyponli::cli::TrainingFailed& e) {
    fmt::print(stderr, "error: training aborted: {}\nstate dump: {}\n", e.what(), e.dump_path().string());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
