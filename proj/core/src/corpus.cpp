#include "bildrl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bildrl/error.hpp"

namespace bildrl {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::string loc(const std::string& path, std::size_t lineno) {
  return path + ":" + std::to_string(lineno);
}

// Reads non-empty lines (CRLF-tolerant), calling fn(line, lineno).
template <typename Fn>
std::size_t for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::size_t lineno = 0, seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++seen;
    fn(line, lineno);
  }
  return seen;
}

void warn_if_empty(std::size_t seen, const std::string& what, const std::string& path) {
  if (seen == 0) std::cerr << "warning: " << what << " '" << path << "' contains no records\n";
}

}  // namespace

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

std::vector<DictionaryEntry> load_dictionary(const std::string& path) {
  std::vector<DictionaryEntry> entries;
  const std::size_t seen = for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    const auto fields = split_fields(line);
    if (fields.size() != 4)
      throw ParseError(loc(path, lineno) + ": expected 4 tab-separated columns, got " +
                       std::to_string(fields.size()));
    DictionaryEntry e;
    e.target_lang = fields[0];
    e.target_word = fields[1];
    e.def_lang = fields[2];
    e.definition = split_tokens(fields[3]);
    if (!valid_language_tag(e.target_lang))
      throw ConfigError(loc(path, lineno) + ": unknown language tag '" + e.target_lang + "'");
    if (!valid_language_tag(e.def_lang))
      throw ConfigError(loc(path, lineno) + ": unknown language tag '" + e.def_lang + "'");
    if (e.target_word.empty()) throw ParseError(loc(path, lineno) + ": empty target word");
    if (e.target_word == Vocabulary::kPadToken || e.target_word == Vocabulary::kUnkToken)
      throw ParseError(loc(path, lineno) + ": reserved token '" + e.target_word + "' as target word");
    if (e.definition.empty()) throw ParseError(loc(path, lineno) + ": empty definition");
    entries.push_back(std::move(e));
  });
  warn_if_empty(seen, "dictionary", path);
  return entries;
}

std::vector<std::vector<std::string>> load_corpus_lines(const std::string& path) {
  std::vector<std::vector<std::string>> lines;
  const std::size_t seen = for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    auto tokens = split_tokens(line);
    if (tokens.empty()) throw ParseError(loc(path, lineno) + ": whitespace-only line");
    lines.push_back(std::move(tokens));
  });
  warn_if_empty(seen, "corpus", path);
  return lines;
}

std::vector<ParallelPair> load_parallel(const std::string& path) {
  std::vector<ParallelPair> pairs;
  const std::size_t seen = for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    const auto fields = split_fields(line);
    if (fields.size() != 2)
      throw ParseError(loc(path, lineno) + ": expected 2 tab-separated columns, got " +
                       std::to_string(fields.size()));
    ParallelPair p;
    p.sent_a = split_tokens(fields[0]);
    p.sent_b = split_tokens(fields[1]);
    if (p.sent_a.empty() || p.sent_b.empty()) throw ParseError(loc(path, lineno) + ": empty sentence");
    pairs.push_back(std::move(p));
  });
  warn_if_empty(seen, "parallel corpus", path);
  return pairs;
}

std::vector<ParaphraseRecord> load_paraphrase_pairs(const std::string& path) {
  std::vector<ParaphraseRecord> records;
  const std::size_t seen = for_each_line(path, [&](const std::string& line, std::size_t lineno) {
    const auto fields = split_fields(line);
    if (fields.size() != 3)
      throw ParseError(loc(path, lineno) + ": expected 3 tab-separated columns, got " +
                       std::to_string(fields.size()));
    ParaphraseRecord r;
    r.sent_a = split_tokens(fields[0]);
    r.sent_b = split_tokens(fields[1]);
    if (fields[2] == "0")
      r.label = 0;
    else if (fields[2] == "1")
      r.label = 1;
    else
      throw ParseError(loc(path, lineno) + ": label must be 0 or 1, got '" + fields[2] + "'");
    if (r.sent_a.empty() || r.sent_b.empty()) throw ParseError(loc(path, lineno) + ": empty sentence");
    records.push_back(std::move(r));
  });
  warn_if_empty(seen, "paraphrase data", path);
  return records;
}

std::pair<std::vector<int>, int> pad_or_truncate(const std::vector<int>& ids, int L) {
  if (L < 1) throw ContractError("pad_or_truncate: L must be >= 1");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(L));
  const int true_len = std::min<int>(static_cast<int>(ids.size()), L);
  out.assign(ids.begin(), ids.begin() + true_len);
  out.resize(static_cast<std::size_t>(L), Vocabulary::kPad);
  return {std::move(out), true_len};
}

NegativeTable NegativeTable::build(const Vocabulary& vocab) {
  NegativeTable t;
  double total = 0.0;
  for (int i = 2; i < vocab.size(); ++i) {  // skip <pad>, <unk>
    const auto c = vocab.counts[static_cast<std::size_t>(i)];
    if (c <= 0) continue;
    total += std::pow(static_cast<double>(c), 0.75);
    t.tokens_.push_back(i);
    t.cum_.push_back(total);
  }
  return t;
}

double NegativeTable::probability(int token_index) const {
  if (cum_.empty()) return 0.0;
  auto it = std::lower_bound(tokens_.begin(), tokens_.end(), token_index);
  if (it == tokens_.end() || *it != token_index) return 0.0;
  const std::size_t pos = static_cast<std::size_t>(it - tokens_.begin());
  const double w = cum_[pos] - (pos == 0 ? 0.0 : cum_[pos - 1]);
  return w / cum_.back();
}

int NegativeTable::sample(Rng& rng) const {
  if (tokens_.empty()) throw ConfigError("negative table: no eligible words");
  const double u = rng.uniform() * cum_.back();
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
  const std::size_t pos = std::min<std::size_t>(static_cast<std::size_t>(it - cum_.begin()), cum_.size() - 1);
  return tokens_[pos];
}

std::vector<int> NegativeTable::sample_negatives(int K, int exclude, Rng& rng) const {
  if (K < 0) throw ContractError("sample_negatives: K must be >= 0");
  const bool exclude_in_table =
      std::binary_search(tokens_.begin(), tokens_.end(), exclude);
  const int available = eligible() - (exclude_in_table ? 1 : 0);
  if (available < K)
    throw ConfigError("sample_negatives: need " + std::to_string(K) + " distinct negatives but only " +
                      std::to_string(available) + " eligible words remain");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(K));
  int attempts = 0;
  while (static_cast<int>(out.size()) < K) {
    const int cand = sample(rng);
    const bool dup = cand == exclude || std::find(out.begin(), out.end(), cand) != out.end();
    if (!dup) {
      out.push_back(cand);
      attempts = 0;
      continue;
    }
    // Near-exhaustive pools can make rejection slow; fall back to an exact
    // weighted draw over the remaining words.
    if (++attempts > 1000) {
      double total = 0.0;
      std::vector<std::pair<int, double>> rest;
      for (std::size_t i = 0; i < tokens_.size(); ++i) {
        const int tok = tokens_[i];
        if (tok == exclude || std::find(out.begin(), out.end(), tok) != out.end()) continue;
        const double w = cum_[i] - (i == 0 ? 0.0 : cum_[i - 1]);
        total += w;
        rest.emplace_back(tok, total);
      }
      double u = rng.uniform() * total;
      int pick = rest.back().first;
      for (const auto& [tok, c] : rest) {
        if (u < c) {
          pick = tok;
          break;
        }
      }
      out.push_back(pick);
      attempts = 0;
    }
  }
  return out;
}

}  // namespace bildrl
