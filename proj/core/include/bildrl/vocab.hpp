#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace bildrl {

// Per-language vocabulary. Index 0 is always "<pad>", index 1 always "<unk>";
// real tokens follow ordered by descending count, ties broken lexicographically,
// so vocabulary construction is deterministic for a given corpus.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  std::string language;
  std::vector<std::string> index_to_token;
  std::vector<std::int64_t> counts;  // aligned with index_to_token; 0 for the specials
  std::unordered_map<std::string, int> token_to_index;

  int size() const { return static_cast<int>(index_to_token.size()); }

  // Unknown tokens map to <unk>. Literal "<pad>"/"<unk>" strings in raw text
  // also map to <unk> so pad indices can never appear inside a sentence.
  int lookup(const std::string& token) const;
  const std::string& token(int index) const;
  bool contains(const std::string& token) const { return token_to_index.count(token) != 0; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
};

// Accumulates counts from tokenized lines, then freezes a Vocabulary.
class VocabBuilder {
 public:
  void add_line(const std::vector<std::string>& tokens);
  void add_token(const std::string& token, std::int64_t count = 1);
  // Tokens that must survive the min_count filter (e.g. dictionary headwords).
  void require(const std::string& token);

  // Raises ConfigError if no tokens were seen at all, or if the language tag
  // is malformed (two lowercase ASCII letters).
  Vocabulary build(const std::string& language, std::int64_t min_count) const;

  bool empty() const { return counts_.empty(); }

 private:
  std::unordered_map<std::string, std::int64_t> counts_;
  std::unordered_map<std::string, bool> required_;
};

bool valid_language_tag(const std::string& tag);

// Convenience: build from whole-corpus lines.
Vocabulary build_vocab(const std::string& language, const std::vector<std::vector<std::string>>& lines,
                       std::int64_t min_count);

}  // namespace bildrl
