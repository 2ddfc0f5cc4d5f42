#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hyponli {

struct TokenizedSentence {
  std::vector<std::string> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  auto begin() const noexcept { return tokens.begin(); }
  auto end() const noexcept { return tokens.end(); }
  const std::string& operator[](std::size_t i) const { return tokens[i]; }

  friend bool operator==(const TokenizedSentence&, const TokenizedSentence&) = default;
};

// Splits on ASCII whitespace, then peels the punctuation marks . , ! ? ; : " ' ( )
// off both ends of every chunk as single-character tokens. Case is kept and
// chunk-internal punctuation ("don't", "U.S") stays attached.
TokenizedSentence tokenize(std::string_view text);

bool is_detachable_punct(char c) noexcept;

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

class Vocabulary {
 public:
  // Returns the index of the token, adding it if absent. Adding to a frozen
  // vocabulary throws std::logic_error.
  std::size_t add(std::string_view token);
  std::optional<std::size_t> find(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t size() const noexcept { return tokens_.size(); }
  std::span<const std::string> tokens() const noexcept { return tokens_; }

  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

  // One "token<TAB>index" line per entry, in index order.
  void write(const std::filesystem::path& path) const;
  static Vocabulary read(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
  std::vector<std::string> tokens_;
  bool frozen_ = false;
};

// Tokens are added in first-occurrence order; the result is frozen.
Vocabulary build_vocabulary(std::span<const TokenizedSentence> sentences);

enum class EmbeddingSource { file, seeded_random };

// Dense vectors aligned with a vocabulary, plus the vector used for every
// token that has no entry of its own.
class EmbeddingTable {
 public:
  EmbeddingTable(Vocabulary vocab, std::size_t dimension, std::vector<double> rows,
                 std::vector<double> oov, std::vector<bool> loaded, EmbeddingSource source);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return vocab_.size(); }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  EmbeddingSource source() const noexcept { return source_; }

  std::span<const double> row(std::size_t index) const;
  std::span<const double> oov() const noexcept { return oov_; }
  // Vector for any token string; never fails.
  std::span<const double> lookup(std::string_view token) const;
  // True when the row came from the file rather than the OOV fallback.
  bool loaded(std::size_t index) const { return loaded_.at(index); }
  std::size_t loaded_count() const;

 private:
  Vocabulary vocab_;
  std::size_t dimension_;
  std::vector<double> rows_;
  std::vector<double> oov_;
  std::vector<bool> loaded_;
  EmbeddingSource source_;
};

// Word-vector text format: "word v1 ... vd" per line, space separated. An
// optional word2vec-style "count dim" header line is skipped. Only vocabulary
// words are kept. The OOV vector is the file's `unk_token` entry when present,
// otherwise the mean of the vocabulary vectors found in the file (zero if none).
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                               std::size_t dimension, std::string_view unk_token = "<unk>");

// Every entry, including the OOV vector, uniform in [-0.1, 0.1].
EmbeddingTable seeded_random_embeddings(const Vocabulary& vocab, std::size_t dimension,
                                        std::uint64_t seed);

}  // namespace hyponli
