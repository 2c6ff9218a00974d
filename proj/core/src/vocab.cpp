#include "bildrl/vocab.hpp"

#include <algorithm>

#include "bildrl/error.hpp"

namespace bildrl {

int Vocabulary::lookup(const std::string& token) const {
  if (token == kPadToken || token == kUnkToken) return kUnk;
  auto it = token_to_index.find(token);
  return it == token_to_index.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int index) const {
  if (index < 0 || index >= size())
    throw ContractError("vocab: index " + std::to_string(index) + " out of range for size " +
                        std::to_string(size()));
  return index_to_token[static_cast<std::size_t>(index)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lookup(t));
  return out;
}

bool valid_language_tag(const std::string& tag) {
  if (tag.size() != 2) return false;
  return tag[0] >= 'a' && tag[0] <= 'z' && tag[1] >= 'a' && tag[1] <= 'z';
}

void VocabBuilder::add_line(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) add_token(t);
}

void VocabBuilder::add_token(const std::string& token, std::int64_t count) {
  // The special tokens are reserved; raw-text occurrences are dropped here and
  // map to <unk> at lookup time.
  if (token == Vocabulary::kPadToken || token == Vocabulary::kUnkToken) return;
  if (token.empty()) return;
  counts_[token] += count;
}

void VocabBuilder::require(const std::string& token) {
  if (token == Vocabulary::kPadToken || token == Vocabulary::kUnkToken) return;
  required_[token] = true;
  counts_.emplace(token, 0);
}

Vocabulary VocabBuilder::build(const std::string& language, std::int64_t min_count) const {
  if (!valid_language_tag(language)) throw ConfigError("vocab: unknown language tag '" + language + "'");
  if (counts_.empty()) throw ConfigError("vocab: empty corpus for language '" + language + "'");

  std::vector<std::pair<std::string, std::int64_t>> kept;
  kept.reserve(counts_.size());
  for (const auto& [tok, cnt] : counts_) {
    if (cnt >= min_count || required_.count(tok)) kept.emplace_back(tok, cnt);
  }
  if (kept.empty())
    throw ConfigError("vocab: no tokens survive min_count=" + std::to_string(min_count) + " for language '" +
                      language + "'");
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.language = language;
  v.index_to_token = {Vocabulary::kPadToken, Vocabulary::kUnkToken};
  v.counts = {0, 0};
  for (const auto& [tok, cnt] : kept) {
    v.token_to_index.emplace(tok, v.size());
    v.index_to_token.push_back(tok);
    v.counts.push_back(cnt);
  }
  return v;
}

Vocabulary build_vocab(const std::string& language, const std::vector<std::vector<std::string>>& lines,
                       std::int64_t min_count) {
  VocabBuilder b;
  for (const auto& line : lines) b.add_line(line);
  return b.build(language, min_count);
}

}  // namespace bildrl
