#include "hyponli/text.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "hyponli/error.hpp"
#include "hyponli/rng.hpp"

namespace hyponli {
namespace {

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t lo = 0;
  std::size_t hi = chunk.size();
  while (lo < hi && is_detachable_punct(chunk[lo])) ++lo;
  while (hi > lo && is_detachable_punct(chunk[hi - 1])) --hi;
  for (std::size_t i = 0; i < lo; ++i) out.emplace_back(1, chunk[i]);
  if (hi > lo) out.emplace_back(chunk.substr(lo, hi - lo));
  for (std::size_t i = hi; i < chunk.size(); ++i) out.emplace_back(1, chunk[i]);
}

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool is_integer(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

bool is_detachable_punct(char c) noexcept {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '\'': case '(': case ')':
      return true;
    default:
      return false;
  }
}

TokenizedSentence tokenize(std::string_view text) {
  TokenizedSentence sentence;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) split_chunk(text.substr(start, i - start), sentence.tokens);
  }
  return sentence;
}

std::size_t Vocabulary::add(std::string_view token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  if (frozen_) throw std::logic_error("cannot add '" + std::string(token) + "' to a frozen vocabulary");
  const std::size_t index = tokens_.size();
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), index);
  return index;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  return std::nullopt;
}

void Vocabulary::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
}

Vocabulary Vocabulary::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw ParseError(path.string(), line_no, "expected token<TAB>index");
    std::size_t index = 0;
    const std::string_view idx = std::string_view(line).substr(tab + 1);
    auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), index);
    if (ec != std::errc{} || ptr != idx.data() + idx.size() || index != vocab.size()) {
      throw ParseError(path.string(), line_no, "indices must be contiguous from 0");
    }
    vocab.add(std::string_view(line).substr(0, tab));
  }
  vocab.freeze();
  return vocab;
}

Vocabulary build_vocabulary(std::span<const TokenizedSentence> sentences) {
  Vocabulary vocab;
  for (const auto& s : sentences) {
    for (const auto& tok : s) vocab.add(tok);
  }
  vocab.freeze();
  return vocab;
}

EmbeddingTable::EmbeddingTable(Vocabulary vocab, std::size_t dimension, std::vector<double> rows,
                               std::vector<double> oov, std::vector<bool> loaded,
                               EmbeddingSource source)
    : vocab_(std::move(vocab)),
      dimension_(dimension),
      rows_(std::move(rows)),
      oov_(std::move(oov)),
      loaded_(std::move(loaded)),
      source_(source) {
  if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
  if (rows_.size() != vocab_.size() * dimension_ || oov_.size() != dimension_ ||
      loaded_.size() != vocab_.size()) {
    throw ShapeError("embedding table storage does not match vocabulary x dimension");
  }
}

std::span<const double> EmbeddingTable::row(std::size_t index) const {
  if (index >= vocab_.size()) throw std::out_of_range("embedding row out of range");
  return std::span<const double>(rows_).subspan(index * dimension_, dimension_);
}

std::span<const double> EmbeddingTable::lookup(std::string_view token) const {
  if (auto idx = vocab_.find(token)) return row(*idx);
  return oov_;
}

std::size_t EmbeddingTable::loaded_count() const {
  std::size_t n = 0;
  for (bool b : loaded_) n += b ? 1 : 0;
  return n;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                               std::size_t dimension, std::string_view unk_token) {
  if (dimension == 0) throw ConfigError("embedding dimension must be positive");
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());

  std::vector<double> rows(vocab.size() * dimension, 0.0);
  std::vector<bool> loaded(vocab.size(), false);
  std::vector<double> unk;
  std::vector<double> sum(dimension, 0.0);
  std::size_t n_found = 0;

  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values(dimension);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = fields_of(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && is_integer(fields[0]) && is_integer(fields[1])) continue;
    if (fields.size() != dimension + 1) {
      throw ParseError(path.string(), line_no,
                       fmt::format("expected {} values, found {}", dimension, fields.size() - 1));
    }
    const std::string_view word = fields[0];
    const auto idx = vocab.find(word);
    const bool is_unk = word == unk_token;
    if (!idx && !is_unk) continue;
    for (std::size_t d = 0; d < dimension; ++d) {
      const auto f = fields[d + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[d]);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw ParseError(path.string(), line_no, fmt::format("bad number '{}'", f));
      }
    }
    if (is_unk) unk = values;
    if (idx && !loaded[*idx]) {
      std::copy(values.begin(), values.end(), rows.begin() + static_cast<std::ptrdiff_t>(*idx * dimension));
      loaded[*idx] = true;
      for (std::size_t d = 0; d < dimension; ++d) sum[d] += values[d];
      ++n_found;
    }
  }

  std::vector<double> oov = unk;
  if (oov.empty()) {
    oov.assign(dimension, 0.0);
    if (n_found > 0) {
      for (std::size_t d = 0; d < dimension; ++d) oov[d] = sum[d] / static_cast<double>(n_found);
    }
  }
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (!loaded[i]) std::copy(oov.begin(), oov.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * dimension));
  }
  return EmbeddingTable(vocab, dimension, std::move(rows), std::move(oov), std::move(loaded),
                        EmbeddingSource::file);
}

EmbeddingTable seeded_random_embeddings(const Vocabulary& vocab, std::size_t dimension,
                                        std::uint64_t seed) {
  if (dimension == 0) throw ConfigError("embedding dimension must be positive");
  Rng rng(seed);
  std::vector<double> rows(vocab.size() * dimension);
  for (auto& v : rows) v = rng.uniform(-0.1, 0.1);
  std::vector<double> oov(dimension);
  for (auto& v : oov) v = rng.uniform(-0.1, 0.1);
  return EmbeddingTable(vocab, dimension, std::move(rows), std::move(oov),
                        std::vector<bool>(vocab.size(), true), EmbeddingSource::seeded_random);
}

}  // namespace hyponli
