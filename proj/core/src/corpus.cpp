#include "hyponli/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "hyponli/error.hpp"
#include "hyponli/rng.hpp"
#include "json.hpp"

namespace hyponli {

using nlohmann::json;

LabelScheme::LabelScheme(std::string id, std::vector<std::string> names) : id_(std::move(id)) {
  if (names.size() < 2 || names.size() > 3) {
    throw ConfigError(fmt::format("label scheme '{}' must have 2 or 3 labels, got {}", id_,
                                  names.size()));
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) throw ConfigError("label scheme '" + id_ + "' has an empty label name");
    if (!seen.insert(names[i]).second) {
      throw ConfigError("label scheme '" + id_ + "' repeats label '" + names[i] + "'");
    }
    labels_.push_back(Label{static_cast<int>(i), names[i]});
  }
}

LabelScheme LabelScheme::three_way() {
  return LabelScheme("3way", {"entailment", "neutral", "contradiction"});
}

LabelScheme LabelScheme::two_way() { return LabelScheme("2way", {"entailed", "not-entailed"}); }

std::optional<Label> LabelScheme::find(std::string_view name) const {
  for (const auto& l : labels_) {
    if (l.name == name) return l;
  }
  return std::nullopt;
}

const Label& LabelScheme::at(std::string_view name) const {
  for (const auto& l : labels_) {
    if (l.name == name) return l;
  }
  throw ConfigError(fmt::format("label '{}' is not part of scheme '{}'", name, id_));
}

bool LabelScheme::contains(const Label& label) const noexcept {
  return label.index >= 0 && static_cast<std::size_t>(label.index) < labels_.size() &&
         labels_[label.index].name == label.name;
}

std::vector<std::string> LabelScheme::names() const {
  std::vector<std::string> out;
  out.reserve(labels_.size());
  for (const auto& l : labels_) out.push_back(l.name);
  return out;
}

bool same_fields(const NLIInstance& a, const NLIInstance& b) {
  return a.instance_id == b.instance_id && a.premise == b.premise &&
         a.hypothesis == b.hypothesis && a.label.index == b.label.index &&
         a.label.name == b.label.name && a.group_key == b.group_key && a.ordinal == b.ordinal;
}

const std::vector<NLIInstance>& Dataset::split(const std::string& split_name) const {
  auto it = splits.find(split_name);
  if (it == splits.end()) throw std::out_of_range("dataset '" + name + "' has no split '" + split_name + "'");
  return it->second;
}

void Dataset::validate() const {
  for (const auto& [split_name, instances] : splits) {
    for (const auto& inst : instances) {
      if (!scheme.contains(inst.label)) {
        throw ConfigError(fmt::format("instance {} in split {} has label '{}' outside scheme '{}'",
                                      inst.instance_id, split_name, inst.label.name, scheme.id()));
      }
    }
  }
}

FieldMap FieldMap::native() { return FieldMap{}; }

FieldMap FieldMap::snli() {
  FieldMap m;
  m.premise = "sentence1";
  m.hypothesis = "sentence2";
  m.label = "gold_label";
  m.group = "";
  m.ordinal = "";
  m.id = "pairID";
  return m;
}

FieldMap FieldMap::joci() {
  FieldMap m;
  m.label = "";
  return m;
}

FieldMap FieldMap::preset(std::string_view name) {
  if (name == "native") return native();
  if (name == "snli" || name == "mnli") return snli();
  if (name == "joci") return joci();
  throw ConfigError(fmt::format("unknown field-map preset '{}' (expected native, snli, mnli, joci)", name));
}

std::size_t ColumnSpec::expected_columns() const {
  if (n_columns != 0) return n_columns;
  std::size_t widest = hypothesis;
  for (const auto& col : {premise, label, group, ordinal, id}) {
    if (col) widest = std::max(widest, *col);
  }
  return widest + 1;
}

Label joci_label(int ordinal) {
  static const LabelScheme scheme = LabelScheme::three_way();
  if (ordinal == 1) return scheme.at("contradiction");
  if (ordinal >= 2 && ordinal <= 4) return scheme.at("neutral");
  if (ordinal == 5) return scheme.at("entailment");
  throw ConfigError(fmt::format("ordinal {} outside [1,5]", ordinal));
}

std::vector<NLIInstance> remap_joci_ordinal(std::span<const NLIInstance> instances) {
  std::vector<NLIInstance> out(instances.begin(), instances.end());
  for (auto& inst : out) {
    if (!inst.ordinal) throw ConfigError("instance " + inst.instance_id + " has no ordinal score");
    if (*inst.ordinal < 1 || *inst.ordinal > 5) {
      throw ConfigError(fmt::format("instance {} has ordinal {} outside [1,5]", inst.instance_id,
                                    *inst.ordinal));
    }
    inst.label = joci_label(*inst.ordinal);
  }
  return out;
}

namespace {

std::string default_id(const std::filesystem::path& path, std::size_t line) {
  return fmt::format("{}-{}", path.stem().string(), line);
}

std::vector<std::string> split_keys(const std::string& spec) {
  std::vector<std::string> keys;
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto plus = spec.find('+', start);
    if (plus == std::string::npos) plus = spec.size();
    if (plus > start) keys.push_back(spec.substr(start, plus - start));
    start = plus + 1;
  }
  return keys;
}

std::string text_value(const json& v, const std::string& source, std::size_t line,
                       const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string joined;
    for (const auto& part : v) {
      if (!part.is_string()) throw ParseError(source, line, "non-string element in '" + key + "'");
      if (!joined.empty()) joined += ' ';
      joined += part.get<std::string>();
    }
    return joined;
  }
  throw ParseError(source, line, "field '" + key + "' is not text");
}

std::optional<int> parse_ordinal_text(std::string_view text) {
  int value = 0;
  std::istringstream in{std::string(text)};
  if (!(in >> value)) return std::nullopt;
  char extra;
  if (in >> extra) return std::nullopt;
  return value;
}

// Resolves a raw label string against aliases and the scheme. nullopt = skip.
std::optional<Label> resolve_label(const std::string& raw,
                                   const std::map<std::string, std::string>& aliases,
                                   const LabelScheme& scheme) {
  auto alias = aliases.find(raw);
  const std::string& name = alias == aliases.end() ? raw : alias->second;
  return scheme.find(name);
}

struct Accumulator {
  ReadResult result;
  const std::string source;

  void add(NLIInstance inst, std::size_t line) {
    if (inst.ordinal && (*inst.ordinal < 1 || *inst.ordinal > 5)) {
      throw ParseError(source, line, fmt::format("ordinal {} outside [1,5]", *inst.ordinal));
    }
    if (inst.hypothesis.empty()) {
      ++result.skipped_empty;
      return;
    }
    result.instances.push_back(std::move(inst));
  }
};

}  // namespace

ReadResult read_jsonl(const std::filesystem::path& path, const FieldMap& fields,
                      const LabelScheme& scheme) {
  if (fields.hypothesis.empty()) throw ConfigError("field map has no hypothesis key");
  if (fields.label.empty() && fields.ordinal.empty()) {
    throw ConfigError("field map needs a label key or an ordinal key");
  }
  if (fields.label.empty() && scheme.size() != 3) {
    throw ConfigError("ordinal-derived labels require the three-way scheme");
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());

  const auto premise_keys = split_keys(fields.premise);
  Accumulator acc{{}, path.string()};
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;

    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(acc.source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(acc.source, line_no, "record is not a JSON object");

    auto require = [&](const std::string& key) -> const json& {
      auto it = record.find(key);
      if (it == record.end()) {
        throw ConfigError(fmt::format("{}:{}: field map names key '{}' which the record lacks",
                                      acc.source, line_no, key));
      }
      return *it;
    };
    auto optional_field = [&](const std::string& key) -> const json* {
      if (key.empty()) return nullptr;
      auto it = record.find(key);
      if (it == record.end() || it->is_null()) return nullptr;
      return &*it;
    };

    NLIInstance inst;
    for (const auto& key : premise_keys) {
      const std::string part = text_value(require(key), acc.source, line_no, key);
      if (!inst.premise.empty()) inst.premise += ' ';
      inst.premise += part;
    }
    inst.hypothesis = text_value(require(fields.hypothesis), acc.source, line_no, fields.hypothesis);

    if (const json* v = optional_field(fields.ordinal)) {
      if (v->is_number_integer()) {
        inst.ordinal = v->get<int>();
      } else if (v->is_string()) {
        inst.ordinal = parse_ordinal_text(v->get<std::string>());
        if (!inst.ordinal) throw ParseError(acc.source, line_no, "ordinal is not an integer");
      } else {
        throw ParseError(acc.source, line_no, "ordinal is not an integer");
      }
    }
    if (const json* v = optional_field(fields.group)) {
      inst.group_key = v->is_string() ? v->get<std::string>() : v->dump();
    }
    if (const json* v = optional_field(fields.id)) {
      inst.instance_id = v->is_string() ? v->get<std::string>() : v->dump();
    } else {
      inst.instance_id = default_id(path, line_no);
    }

    if (fields.label.empty()) {
      if (!inst.ordinal) {
        throw ConfigError(fmt::format("{}:{}: ordinal key '{}' missing; labels are derived from it",
                                      acc.source, line_no, fields.ordinal));
      }
      if (*inst.ordinal < 1 || *inst.ordinal > 5) {
        throw ParseError(acc.source, line_no, fmt::format("ordinal {} outside [1,5]", *inst.ordinal));
      }
      inst.label = joci_label(*inst.ordinal);
    } else {
      const json& raw = require(fields.label);
      std::optional<Label> label;
      if (raw.is_string()) {
        label = resolve_label(raw.get<std::string>(), fields.label_aliases, scheme);
      } else if (raw.is_number_integer()) {
        const auto idx = raw.get<long long>();
        auto alias = fields.label_aliases.find(std::to_string(idx));
        if (alias != fields.label_aliases.end()) {
          label = scheme.find(alias->second);
        } else if (idx >= 0 && static_cast<std::size_t>(idx) < scheme.size()) {
          label = scheme.label(static_cast<std::size_t>(idx));
        }
      }
      if (!label) {
        ++acc.result.skipped_unlabeled;
        continue;
      }
      inst.label = *label;
    }
    acc.add(std::move(inst), line_no);
  }
  return std::move(acc.result);
}

ReadResult read_tsv(const std::filesystem::path& path, const ColumnSpec& columns,
                    const LabelScheme& scheme) {
  if (!columns.label && !columns.ordinal) throw ConfigError("column spec needs a label or ordinal column");
  if (!columns.label && scheme.size() != 3) {
    throw ConfigError("ordinal-derived labels require the three-way scheme");
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());

  const std::size_t expected = columns.expected_columns();
  Accumulator acc{{}, path.string()};
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (line_no == 1 && columns.has_header) continue;
    if (text.empty()) continue;

    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      auto tab = text.find('\t', start);
      cells.push_back(text.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cells.size() != expected) {
      throw ParseError(acc.source, line_no,
                       fmt::format("expected {} tab-separated columns, found {}", expected, cells.size()));
    }

    NLIInstance inst;
    if (columns.premise) inst.premise = cells[*columns.premise];
    inst.hypothesis = cells[columns.hypothesis];
    if (columns.group && !cells[*columns.group].empty()) inst.group_key = cells[*columns.group];
    if (columns.ordinal && !cells[*columns.ordinal].empty()) {
      inst.ordinal = parse_ordinal_text(cells[*columns.ordinal]);
      if (!inst.ordinal) throw ParseError(acc.source, line_no, "ordinal is not an integer");
    }
    inst.instance_id = columns.id ? cells[*columns.id] : default_id(path, line_no);

    if (columns.label) {
      auto label = resolve_label(cells[*columns.label], columns.label_aliases, scheme);
      if (!label) {
        ++acc.result.skipped_unlabeled;
        continue;
      }
      inst.label = *label;
    } else {
      if (!inst.ordinal) throw ParseError(acc.source, line_no, "missing ordinal score");
      if (*inst.ordinal < 1 || *inst.ordinal > 5) {
        throw ParseError(acc.source, line_no, fmt::format("ordinal {} outside [1,5]", *inst.ordinal));
      }
      inst.label = joci_label(*inst.ordinal);
    }
    acc.add(std::move(inst), line_no);
  }
  return std::move(acc.result);
}

std::string to_jsonl_line(const NLIInstance& instance) {
  nlohmann::ordered_json record;
  record["id"] = instance.instance_id;
  record["premise"] = instance.premise;
  record["hypothesis"] = instance.hypothesis;
  record["label"] = instance.label.name;
  if (instance.group_key) record["group"] = *instance.group_key;
  if (instance.ordinal) record["ordinal"] = *instance.ordinal;
  return record.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_jsonl(const std::filesystem::path& path, std::span<const NLIInstance> instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (const auto& inst : instances) out << to_jsonl_line(inst) << '\n';
  if (!out) throw ConfigError("write failed for " + path.string());
}

SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios) {
  const double total = ratios.train + ratios.dev + ratios.test;
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError(fmt::format("split ratios sum to {}, expected 1", total));
  }
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0) {
    throw ConfigError("split ratios must be nonnegative");
  }
  // The epsilon keeps products like 0.1 * 30 from flooring to 2.
  const auto floor_share = [n](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  SplitSizes sizes;
  sizes.dev = floor_share(ratios.dev);
  sizes.test = floor_share(ratios.test);
  sizes.train = n - sizes.dev - sizes.test;
  return sizes;
}

Dataset random_split(std::span<const NLIInstance> instances, const LabelScheme& scheme,
                     std::uint64_t seed, const SplitRatios& ratios, std::string name) {
  if (instances.empty()) throw ConfigError("cannot split an empty instance list");
  const SplitSizes sizes = split_sizes(instances.size(), ratios);

  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  Dataset ds;
  ds.name = std::move(name);
  ds.scheme = scheme;
  auto& train = ds.splits["train"];
  auto& dev = ds.splits["dev"];
  auto& test = ds.splits["test"];
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& inst = instances[order[i]];
    if (i < sizes.train) {
      train.push_back(inst);
    } else if (i < sizes.train + sizes.dev) {
      dev.push_back(inst);
    } else {
      test.push_back(inst);
    }
  }
  ds.validate();
  return ds;
}

Label majority_label(std::span<const NLIInstance> instances, const LabelScheme& scheme) {
  if (instances.empty()) throw ConfigError("majority label of an empty split is undefined");
  std::vector<std::size_t> counts(scheme.size(), 0);
  for (const auto& inst : instances) {
    if (!scheme.contains(inst.label)) {
      throw ConfigError("instance " + inst.instance_id + " has a label outside the scheme");
    }
    ++counts[static_cast<std::size_t>(inst.label.index)];
  }
  // max_element returns the first maximum, i.e. the lowest index on ties.
  const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
  return scheme.label(static_cast<std::size_t>(best));
}

}  // namespace hyponli
