#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bildrl/rng.hpp"
#include "bildrl/vocab.hpp"

namespace bildrl {

// One cross-lingual dictionary record: a headword in target_lang defined by a
// tokenized definition written in def_lang.
struct DictionaryEntry {
  std::string target_lang;
  std::string target_word;
  std::string def_lang;
  std::vector<std::string> definition;
};

struct ParallelPair {
  std::vector<std::string> sent_a;
  std::vector<std::string> sent_b;
};

struct ParaphraseRecord {
  std::vector<std::string> sent_a;
  std::vector<std::string> sent_b;
  int label = 0;  // 1 = paraphrase
};

// Loaders. All raise IoError if the file cannot be opened, ParseError on
// malformed lines (message carries path and 1-based line number), ConfigError
// on bad language tags. Blank lines are skipped; an entirely empty file yields
// an empty result plus a warning on stderr.
std::vector<DictionaryEntry> load_dictionary(const std::string& path);
std::vector<std::vector<std::string>> load_corpus_lines(const std::string& path);
std::vector<ParallelPair> load_parallel(const std::string& path);
std::vector<ParaphraseRecord> load_paraphrase_pairs(const std::string& path);

std::vector<std::string> split_tokens(const std::string& text);

// Fixed-length encoder input: truncate to L or right-pad with pad_index.
// Returns (index sequence of length exactly L, true_length = min(|ids|, L)).
// Requires L >= 1.
std::pair<std::vector<int>, int> pad_or_truncate(const std::vector<int>& ids, int L);

// Unigram negative-sampling table over a vocabulary: weight count^0.75,
// pad/unk and zero-count entries excluded.
class NegativeTable {
 public:
  static NegativeTable build(const Vocabulary& vocab);

  int eligible() const { return static_cast<int>(tokens_.size()); }
  double probability(int token_index) const;  // sampling probability, for tests

  int sample(Rng& rng) const;

  // K distinct draws, none equal to `exclude` and none equal to each other.
  // Raises ConfigError when fewer than K eligible words remain after the
  // exclusion (no silent shrink, no replacement).
  std::vector<int> sample_negatives(int K, int exclude, Rng& rng) const;

 private:
  std::vector<int> tokens_;     // vocab indices, ascending
  std::vector<double> cum_;     // cumulative weights, cum_.back() = total
};

}  // namespace bildrl
