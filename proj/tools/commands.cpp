#include "commands.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <fmt/format.h>

#include "json.hpp"

#include <hyponli/checkpoint.hpp>
#include <hyponli/csv.hpp>
#include <hyponli/error.hpp>
#include <hyponli/rng.hpp>
#include <hyponli/synth.hpp>
#include <hyponli/text.hpp>

namespace hyponli::cli {
namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void require_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is required");
  if (!fs::is_regular_file(path)) throw ConfigError(what + " " + path.string() + " does not exist");
}

std::string_view rule_name(DeclineRule rule) {
  return rule == DeclineRule::previous_epoch ? "previous" : "best";
}

void write_state_dump(const fs::path& path, const TrainState& state, const std::string& reason) {
  auto out = open_out(path);
  out << "# " << reason << '\n';
  out << fmt::format("# epoch {} lr {:.10e} best_dev_acc {:.4f} best_epoch {} last_dev_acc {:.4f}\n",
                     state.epoch, state.lr, state.best_dev_acc, state.best_epoch, state.last_dev_acc);
  write_training_log(out, state.history);
}

}  // namespace

LabelScheme RunConfig::label_scheme() const {
  if (scheme == "3way") return LabelScheme::three_way();
  if (scheme == "2way") return LabelScheme::two_way();
  throw ConfigError("unknown label scheme '" + scheme + "' (expected 3way or 2way)");
}

std::vector<std::string> RunConfig::provenance() const {
  std::vector<std::string> lines;
  auto add = [&](std::string_view key, const auto& value) { lines.push_back(fmt::format("{} = {}", key, value)); };
  add("subcommand", subcommand);
  add("seed", seed);
  if (!train.empty()) add("train", train.string());
  if (!dev.empty()) add("dev", dev.string());
  if (!test.empty()) add("test", test.string());
  if (!input.empty()) add("input", input.string());
  add("format", format);
  add("scheme", scheme);
  if (subcommand == "stats") {
    add("min-freq", min_freq);
    add("top-k", top_k);
    add("grid-step", grid_step);
    add("coverage-mode", coverage_mode == CoverageMode::max_label ? "max" : "gold");
  }
  if (subcommand == "train-eval") {
    add("embeddings", embeddings.empty() ? std::string("seeded-random") : embeddings.string());
    add("embedding-dim", embedding_dim);
    add("encoder", to_string(model.encoder));
    add("hidden-dim", model.hidden_dim);
    add("mlp-hidden", model.mlp_hidden);
    add("finetune", model.finetune_embeddings ? "true" : "false");
    add("lr0", training.lr0);
    add("decay", training.decay);
    add("divide-on-decline", training.divide_on_decline);
    add("lr-floor", training.lr_floor);
    add("max-epochs", training.max_epochs);
    add("batch-size", training.batch_size);
    add("decline-rule", rule_name(training.decline_rule));
    add("group-majority", group_majority == GroupMajority::within_group ? "within" : "global");
  }
  if (subcommand == "synth") {
    add("spec", synth_spec.string());
    add("n-train", n_train);
    add("n-dev", n_dev);
    add("n-test", n_test);
  }
  if (subcommand == "audit-sample") {
    add("checkpoint", checkpoint.string());
    add("n-per-cell", n_per_cell);
  }
  if (subcommand == "split") add("ratios", fmt::format("{},{},{}", ratios.train, ratios.dev, ratios.test));
  return lines;
}

std::vector<NLIInstance> load_instances(const RunConfig& config, const fs::path& path) {
  require_file(path, "data file");
  const LabelScheme scheme = config.label_scheme();
  ReadResult result;
  if (config.format == "tsv") {
    result = read_tsv(path, ColumnSpec{}, scheme);
  } else {
    result = read_jsonl(path, FieldMap::preset(config.format), scheme);
  }
  if (result.skipped() > 0) {
    fmt::print(stderr, "{}: skipped {} unlabeled and {} empty records\n", path.string(),
               result.skipped_unlabeled, result.skipped_empty);
  }
  if (result.instances.empty()) throw ConfigError(path.string() + " contains no usable instances");
  return std::move(result.instances);
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("HYPONLI_OUT_DIR"); env && *env) return env;
  return "hyponli-out";
}

StagedOutput::StagedOutput(fs::path final_dir) : final_(std::move(final_dir)) {
  if (final_.empty()) throw ConfigError("output directory is empty");
  final_ = fs::absolute(final_).lexically_normal();
  if (!final_.has_filename()) final_ = final_.parent_path();
  fs::create_directories(final_.parent_path());
  staging_ = final_.parent_path() / fmt::format(".{}.staging-{}", final_.filename().string(), ::getpid());
  fs::remove_all(staging_);
  fs::create_directories(staging_);
}

StagedOutput::~StagedOutput() {
  if (!done_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagedOutput::promote() {
  const fs::path old = final_.parent_path() / fmt::format(".{}.old-{}", final_.filename().string(), ::getpid());
  const bool had_old = fs::exists(final_);
  if (had_old) fs::rename(final_, old);
  fs::rename(staging_, final_);
  done_ = true;
  if (had_old) fs::remove_all(old);
}

void StagedOutput::keep_as(const fs::path& target) {
  fs::remove_all(target);
  fs::rename(staging_, target);
  done_ = true;
}

fs::path cmd_stats(const RunConfig& config) {
  const LabelScheme scheme = config.label_scheme();
  std::vector<std::pair<std::string, fs::path>> inputs;
  for (const auto& [name, path] : {std::pair{"train", config.train}, {"dev", config.dev}, {"test", config.test}}) {
    if (!path.empty()) inputs.emplace_back(name, path);
  }
  if (inputs.empty()) throw ConfigError("stats needs at least one of --train, --dev, --test");

  StagedOutput out(config.out_dir);
  std::ostringstream digest;
  digest << "# Give-away word statistics\n";
  for (const auto& [name, path] : inputs) {
    const auto instances = load_instances(config, path);
    const auto counts = count_corpus_sharded(instances, scheme, std::max<std::size_t>(1, config.threads));
    const auto lists = giveaway_words(counts, config.min_freq, config.top_k);
    std::vector<CoverageCurve> curves;
    for (const auto& label : scheme.labels()) {
      curves.push_back(coverage_curve(counts, label, config.grid_step, config.coverage_mode));
    }
    fs::create_directories(out.dir() / name);
    {
      auto f = open_out(out.dir() / name / "giveaways.csv");
      write_giveaways_csv(f, lists);
    }
    {
      auto f = open_out(out.dir() / name / "coverage.csv");
      write_coverage_csv(f, curves);
    }
    {
      auto f = open_out(out.dir() / name / "counts.csv");
      write_counts_csv(f, counts);
    }

    digest << fmt::format("\n## {} ({} sentences, {} types)\n", name, instances.size(), counts.n_types());
    for (const auto& label : scheme.labels()) {
      digest << fmt::format("\n### {} ({} sentences)\n\n", label.name, counts.count_l(label));
      auto it = lists.find(label);
      if (it == lists.end() || it->second.empty()) {
        digest << fmt::format("No word occurs at least {} times with this label as its argmax.\n",
                              config.min_freq);
      } else {
        digest << "| Word | Score | Freq |\n|---|---:|---:|\n";
        for (const auto& e : it->second) {
          digest << fmt::format("| {} | {} | {} |\n", e.token, fixed(e.score, 2), e.frequency);
        }
      }
      const auto& curve = curves[static_cast<std::size_t>(label.index)];
      digest << "\nSentences containing a word with score >= x:";
      for (double x : {0.5, 0.8, 1.0}) {
        digest << fmt::format(" x={}: {};", fixed(x, 1), coverage_count(counts, label, x, config.coverage_mode));
      }
      digest << fmt::format(" all: {}\n", curve.y.front());
    }
  }
  digest << "\n## Run configuration\n\n```\n";
  for (const auto& line : config.provenance()) digest << line << '\n';
  digest << "```\n";
  {
    auto f = open_out(out.file("digest.md"));
    f << digest.str();
  }
  out.promote();
  return config.out_dir;
}

fs::path cmd_train_eval(const RunConfig& config) {
  const LabelScheme scheme = config.label_scheme();
  if (config.train.empty() || config.dev.empty()) throw ConfigError("train-eval needs --train and --dev");
  const auto train = load_instances(config, config.train);
  const auto dev = load_instances(config, config.dev);
  std::vector<NLIInstance> test;
  if (!config.test.empty()) test = load_instances(config, config.test);

  std::vector<TokenizedSentence> sentences;
  for (const auto* split : std::initializer_list<const std::vector<NLIInstance>*>{&train, &dev, &test}) {
    for (const auto& inst : *split) sentences.push_back(tokenize(inst.hypothesis));
  }
  const Vocabulary vocab = build_vocabulary(sentences);
  const EmbeddingTable table =
      config.embeddings.empty()
          ? seeded_random_embeddings(vocab, config.embedding_dim, derive_seed(config.seed, "embeddings"))
          : load_embeddings(config.embeddings, vocab, config.embedding_dim);

  ModelConfig mc = config.model;
  mc.embedding_dim = config.embedding_dim;
  mc.n_labels = scheme.size();
  mc.seed = derive_seed(config.seed, "init");
  TrainConfig tc = config.training;
  tc.seed = derive_seed(config.seed, "train");

  StagedOutput out(config.out_dir);
  HypothesisModel model(mc, scheme, table);
  FitResult fitted;
  try {
    fitted = fit(train, dev, model, tc);
  } catch (const TrainingAborted& e) {
    write_state_dump(out.file("train_state.csv"), e.state(), e.what());
    fs::path failed = fs::absolute(config.out_dir).lexically_normal();
    if (!failed.has_filename()) failed = failed.parent_path();
    failed += ".failed";
    out.keep_as(failed);
    throw TrainingFailed(e.what(), failed / "train_state.csv");
  }
  {
    auto f = open_out(out.file("training_log.csv"));
    write_training_log(f, fitted.state.history);
  }
  write_checkpoint(out.file("model.ckpt"), model);

  const Label train_majority = majority_label(train, scheme);
  std::vector<EvalReport> reports;
  auto evaluate = [&](const std::string& name, const std::vector<NLIInstance>& split) {
    const auto preds = model.predict_all(split);
    EvalReport r = build_report(name, split, preds, scheme, train_majority, config.group_majority);
    r.premise_invariant = premise_invariance_audit(model, split, derive_seed(config.seed, "premise-audit/" + name));
    reports.push_back(std::move(r));
  };
  evaluate("dev", dev);
  if (!test.empty()) evaluate("test", test);

  auto provenance = config.provenance();
  provenance.push_back(fmt::format("vocabulary = {}", vocab.size()));
  provenance.push_back(fmt::format("best-epoch = {}", fitted.state.best_epoch));
  provenance.push_back(fmt::format("epochs-run = {}", fitted.state.epoch));
  {
    auto f = open_out(out.file("report.md"));
    write_report_markdown(f, "Hypothesis-only evaluation", reports, provenance);
  }
  {
    auto f = open_out(out.file("report.csv"));
    write_report_csv(f, reports);
  }
  out.promote();
  return config.out_dir;
}

fs::path cmd_synth(const RunConfig& config) {
  require_file(config.synth_spec, "synthetic spec");
  SynthSpec spec = load_synth_spec(config.synth_spec);
  if (config.synth_seed) spec.seed = *config.synth_seed;
  const Dataset ds = generate_splits(spec, config.n_train, config.n_dev, config.n_test);

  StagedOutput out(config.out_dir);
  for (const auto& [name, instances] : ds.splits) write_jsonl(out.file(name + ".jsonl"), instances);

  nlohmann::ordered_json sidecar;
  sidecar["spec"] = nlohmann::ordered_json::parse(synth_spec_json(spec));
  sidecar["bayes_accuracy"] = bayes_accuracy(spec);
  sidecar["sizes"] = {{"train", config.n_train}, {"dev", config.n_dev}, {"test", config.n_test}};
  {
    auto f = open_out(out.file("synth.json"));
    f << sidecar.dump(2) << '\n';
  }
  out.promote();
  return config.out_dir;
}

fs::path cmd_audit_sample(const RunConfig& config) {
  require_file(config.checkpoint, "checkpoint");
  const HypothesisModel model = read_checkpoint(config.checkpoint);
  RunConfig data_config = config;
  data_config.scheme = model.scheme().id();
  const auto instances = load_instances(data_config, config.input);
  const auto preds = model.predict_all(instances);
  const auto sample = confusion_sample(instances, preds, config.n_per_cell, derive_seed(config.seed, "audit"));

  StagedOutput out(config.out_dir);
  {
    auto f = open_out(out.file("audit.tsv"));
    write_confusion_sample(f, sample, instances);
  }
  out.promote();
  return config.out_dir;
}

fs::path cmd_split(const RunConfig& config) {
  const auto instances = load_instances(config, config.input);
  const Dataset ds = random_split(instances, config.label_scheme(), derive_seed(config.seed, "split"), config.ratios,
                                  config.input.stem().string());
  StagedOutput out(config.out_dir);
  for (const auto& [name, split] : ds.splits) write_jsonl(out.file(name + ".jsonl"), split);
  out.promote();
  return config.out_dir;
}

}  // namespace hyponli::cli
