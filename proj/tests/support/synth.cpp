#include "synth.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bildrl/error.hpp"

namespace synth {

using bildrl::DictionaryEntry;
using bildrl::ParallelPair;
using bildrl::Rng;

std::vector<std::string> inventory(const std::string& prefix, int n) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  int width = 1;
  for (int m = n - 1; m >= 10; m /= 10) ++width;
  for (int i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix.c_str(), width, i);
    out.emplace_back(buf);
  }
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("synth: cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

void write_dictionary_tsv(const std::string& path, const std::vector<DictionaryEntry>& entries) {
  std::vector<std::string> lines;
  lines.reserve(entries.size());
  for (const auto& e : entries)
    lines.push_back(e.target_lang + "\t" + e.target_word + "\t" + e.def_lang + "\t" + join(e.definition));
  write_lines(path, lines);
}

void write_corpus(const std::string& path, const std::vector<std::vector<std::string>>& lines) {
  std::vector<std::string> raw;
  raw.reserve(lines.size());
  for (const auto& l : lines) raw.push_back(join(l));
  write_lines(path, raw);
}

void write_parallel_tsv(const std::string& path, const std::vector<ParallelPair>& pairs) {
  std::vector<std::string> lines;
  lines.reserve(pairs.size());
  for (const auto& p : pairs) lines.push_back(join(p.sent_a) + "\t" + join(p.sent_b));
  write_lines(path, lines);
}

std::string scratch_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::current_path() / ("scratch_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("synth: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

// Deal `n` tokens from a deck that is reshuffled whenever it runs out, so
// consecutive deals cover the whole inventory before repeating anything.
class Deck {
 public:
  Deck(const std::vector<std::string>* pool, Rng rng) : pool_(pool), rng_(rng) {}

  std::vector<std::string> deal(int n) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      if (pos_ == order_.size()) {
        order_.resize(pool_->size());
        std::iota(order_.begin(), order_.end(), 0);
        rng_.shuffle(order_);
        pos_ = 0;
      }
      out.push_back((*pool_)[order_[pos_++]]);
    }
    return out;
  }

 private:
  const std::vector<std::string>* pool_;
  Rng rng_;
  std::vector<int> order_;
  std::size_t pos_ = 0;
};

}  // namespace

MemorizationData memorization_dictionary(int words_per_lang, int entries_per_direction, int def_len,
                                         std::uint64_t seed) {
  MemorizationData d;
  const auto words_a = inventory("ma", words_per_lang);
  const auto words_b = inventory("mb", words_per_lang);
  Rng root(seed);
  Deck deck_a(&words_a, root.fork(1));  // deals lang_a definition tokens
  Deck deck_b(&words_b, root.fork(2));

  // Headwords: the first entries_per_direction inventory words of each side.
  for (int i = 0; i < entries_per_direction; ++i) {
    DictionaryEntry ab;
    ab.target_lang = d.lang_a;
    ab.target_word = words_a[static_cast<std::size_t>(i)];
    ab.def_lang = d.lang_b;
    ab.definition = deck_b.deal(def_len);
    d.entries.push_back(std::move(ab));

    DictionaryEntry ba;
    ba.target_lang = d.lang_b;
    ba.target_word = words_b[static_cast<std::size_t>(i)];
    ba.def_lang = d.lang_a;
    ba.definition = deck_a.deal(def_len);
    d.entries.push_back(std::move(ba));
  }
  return d;
}

namespace {

// One order-task definition: content tokens i then j in that order, at
// random positions, all other slots filled with random filler tokens.
std::vector<std::string> order_definition(const std::vector<std::string>& content,
                                          const std::vector<std::string>& fillers, int i, int j,
                                          int def_len, Rng& rng) {
  const int p1 = rng.uniform_int(def_len - 1);
  const int p2 = p1 + 1 + rng.uniform_int(def_len - 1 - p1);
  std::vector<std::string> def(static_cast<std::size_t>(def_len));
  for (int t = 0; t < def_len; ++t) {
    if (t == p1)
      def[static_cast<std::size_t>(t)] = content[static_cast<std::size_t>(i)];
    else if (t == p2)
      def[static_cast<std::size_t>(t)] = content[static_cast<std::size_t>(j)];
    else
      def[static_cast<std::size_t>(t)] = fillers[static_cast<std::size_t>(rng.uniform_int(
          static_cast<int>(fillers.size())))];
  }
  return def;
}

}  // namespace

OrderTaskData order_task(int content, int fillers, int train_per_direction, int test_per_direction,
                         int def_len, std::uint64_t seed) {
  if (def_len < 2) throw std::runtime_error("synth: order task needs def_len >= 2");
  OrderTaskData d;
  const auto content_a = inventory("ca", content);
  const auto content_b = inventory("cb", content);
  const auto filler_a = inventory("fa", fillers);
  const auto filler_b = inventory("fb", fillers);

  // One target word per ordered content pair (i != j), per direction.
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < content; ++i)
    for (int j = 0; j < content; ++j)
      if (i != j) pairs.emplace_back(i, j);
  for (const auto& [i, j] : pairs) {
    d.targets_a.push_back("ta_" + std::to_string(i) + "_" + std::to_string(j));
    d.targets_b.push_back("tb_" + std::to_string(i) + "_" + std::to_string(j));
  }

  Rng root(seed);
  Rng pick = root.fork(1);
  Rng fill = root.fork(2);

  const auto make_entry = [&](bool target_in_a, std::size_t pair_idx) {
    const auto [i, j] = pairs[pair_idx];
    DictionaryEntry e;
    e.target_lang = target_in_a ? d.lang_a : d.lang_b;
    e.target_word = (target_in_a ? d.targets_a : d.targets_b)[pair_idx];
    e.def_lang = target_in_a ? d.lang_b : d.lang_a;
    e.definition = target_in_a ? order_definition(content_b, filler_b, i, j, def_len, fill)
                               : order_definition(content_a, filler_a, i, j, def_len, fill);
    return e;
  };

  // Training entries cycle through the pair list so every target is seen
  // about equally often; each entry gets a fresh filler arrangement.
  for (int n = 0; n < train_per_direction; ++n) {
    const auto idx = static_cast<std::size_t>(n) % pairs.size();
    d.train.push_back(make_entry(true, idx));
    d.train.push_back(make_entry(false, idx));
  }
  Rng shuffle_rng = root.fork(3);
  shuffle_rng.shuffle(d.train);

  // Held-out entries: same targets, fresh random filler contexts.
  for (int n = 0; n < test_per_direction; ++n) {
    const auto idx = static_cast<std::size_t>(pick.uniform_int(static_cast<int>(pairs.size())));
    d.test_ab.push_back(make_entry(true, idx));
    d.test_ba.push_back(make_entry(false, idx));
  }
  return d;
}

JointBundle joint_bundle(int words_per_lang, int def_len, int mono_sentences, int mono_len,
                         int parallel_pairs, int parallel_len, std::uint64_t seed) {
  JointBundle d;
  const auto words_a = inventory("ga", words_per_lang);
  const auto words_b = inventory("gb", words_per_lang);
  Rng root(seed);
  Deck deck_a(&words_a, root.fork(1));
  Deck deck_b(&words_b, root.fork(2));

  for (int i = 0; i < words_per_lang; ++i) {
    DictionaryEntry ab;
    ab.target_lang = d.lang_a;
    ab.target_word = words_a[static_cast<std::size_t>(i)];
    ab.def_lang = d.lang_b;
    ab.definition = deck_b.deal(def_len);
    d.entries.push_back(std::move(ab));

    DictionaryEntry ba;
    ba.target_lang = d.lang_b;
    ba.target_word = words_b[static_cast<std::size_t>(i)];
    ba.def_lang = d.lang_a;
    ba.definition = deck_a.deal(def_len);
    d.entries.push_back(std::move(ba));
  }

  Rng mono_rng = root.fork(3);
  const auto sentence = [&](const std::vector<std::string>& words, int len) {
    std::vector<std::string> s(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t)
      s[static_cast<std::size_t>(t)] =
          words[static_cast<std::size_t>(mono_rng.uniform_int(static_cast<int>(words.size())))];
    return s;
  };
  for (int n = 0; n < mono_sentences; ++n) {
    const int len = 3 + mono_rng.uniform_int(mono_len - 2);
    d.mono_a.push_back(sentence(words_a, len));
    d.mono_b.push_back(sentence(words_b, len));
  }

  // Parallel pairs are exact token-by-token translations under the 1-1
  // inventory correspondence.
  Rng par_rng = root.fork(4);
  for (int n = 0; n < parallel_pairs; ++n) {
    const int len = 3 + par_rng.uniform_int(parallel_len - 2);
    ParallelPair p;
    for (int t = 0; t < len; ++t) {
      const int w = par_rng.uniform_int(words_per_lang);
      p.sent_a.push_back(words_a[static_cast<std::size_t>(w)]);
      p.sent_b.push_back(words_b[static_cast<std::size_t>(w)]);
    }
    d.parallel.push_back(std::move(p));
  }
  return d;
}

ParaphraseData paraphrase_dictionary(int words_per_lang, int def_len, std::uint64_t seed) {
  ParaphraseData d;
  d.words_a = inventory("wa", words_per_lang);
  d.words_b = inventory("wb", words_per_lang);
  Rng rng(seed);

  const auto index_list = [&](int avoid) {
    std::vector<int> ids(static_cast<std::size_t>(def_len));
    for (int t = 0; t < def_len; ++t) {
      int w = rng.uniform_int(words_per_lang);
      while (w == avoid) w = rng.uniform_int(words_per_lang);
      ids[static_cast<std::size_t>(t)] = w;
    }
    return ids;
  };
  const auto realize = [](const std::vector<std::string>& words, const std::vector<int>& ids) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int w : ids) out.push_back(words[static_cast<std::size_t>(w)]);
    return out;
  };

  for (int i = 0; i < words_per_lang; ++i) {
    // Word i of lang_a: cross-lingual definition over lang_b tokens plus its
    // token-by-token translation back into lang_a (same index list).
    const auto ids_a = index_list(i);
    DictionaryEntry cross_a;
    cross_a.target_lang = d.lang_a;
    cross_a.target_word = d.words_a[static_cast<std::size_t>(i)];
    cross_a.def_lang = d.lang_b;
    cross_a.definition = realize(d.words_b, ids_a);
    DictionaryEntry mono_a = cross_a;
    mono_a.def_lang = d.lang_a;
    mono_a.definition = realize(d.words_a, ids_a);
    d.train.push_back(cross_a);
    d.full.push_back(std::move(cross_a));
    d.full.push_back(std::move(mono_a));

    const auto ids_b = index_list(i);
    DictionaryEntry cross_b;
    cross_b.target_lang = d.lang_b;
    cross_b.target_word = d.words_b[static_cast<std::size_t>(i)];
    cross_b.def_lang = d.lang_a;
    cross_b.definition = realize(d.words_a, ids_b);
    DictionaryEntry mono_b = cross_b;
    mono_b.def_lang = d.lang_b;
    mono_b.definition = realize(d.words_b, ids_b);
    d.train.push_back(cross_b);
    d.full.push_back(std::move(cross_b));
    d.full.push_back(std::move(mono_b));
  }
  return d;
}

void write_aligned_embeddings(const std::string& path, const std::string& lang_a,
                              const std::vector<std::string>& words_a, const std::string& lang_b,
                              const std::vector<std::string>& words_b, int dim, double noise,
                              std::uint64_t seed) {
  if (words_a.size() != words_b.size())
    throw std::runtime_error("synth: aligned embeddings need equal-size word lists");
  Rng rng(seed);
  const auto gauss = [&] {
    // Box-Muller from the deterministic uniform stream.
    const double u1 = rng.uniform() + 1e-300;
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("synth: cannot write " + path);
  const std::size_t n = words_a.size();
  out << 2 * (n + 1) << ' ' << dim << '\n';
  char buf[32];
  const auto emit = [&](const std::string& lang, const std::string& token, const std::vector<double>& v) {
    out << lang << ':' << token;
    for (double x : v) {
      std::snprintf(buf, sizeof buf, " %.6f", x);
      out << buf;
    }
    out << '\n';
  };

  std::vector<double> base(static_cast<std::size_t>(dim));
  std::vector<double> noisy(static_cast<std::size_t>(dim));
  // <unk> rows first: both zero (aligned trivially).
  std::vector<double> zero(static_cast<std::size_t>(dim), 0.0);
  emit(lang_a, "<unk>", zero);
  emit(lang_b, "<unk>", zero);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) base[static_cast<std::size_t>(k)] = rng.uniform(-0.5, 0.5);
    for (int k = 0; k < dim; ++k) noisy[static_cast<std::size_t>(k)] = base[static_cast<std::size_t>(k)] + noise * gauss();
    emit(lang_a, words_a[i], base);
    emit(lang_b, words_b[i], noisy);
  }
}

}  // namespace synth
