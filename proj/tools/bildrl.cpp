// bildrl: bilingual dictionary representation learning toolkit.
//
// Subcommands cover the full pipeline: bilingual embedding pretraining
// (train-embed), dictionary encoder training (train-dict, train-joint),
// reverse-dictionary evaluation (eval-retrieval, query), and the paraphrase
// task (make-paraphrase-data, eval-paraphrase), plus a finite-difference
// gradient check (gradcheck).
//
// Exit codes: 0 success, 1 usage error, 2 data/config error, 3 numeric
// failure (NaN/Inf, or a failed gradient check).

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "bildrl/bilembed.hpp"
#include "bildrl/checkpoint.hpp"
#include "bildrl/corpus.hpp"
#include "bildrl/dicttrain.hpp"
#include "bildrl/embedding.hpp"
#include "bildrl/encoders.hpp"
#include "bildrl/error.hpp"
#include "bildrl/evaluate.hpp"
#include "bildrl/gradcheck_harness.hpp"
#include "bildrl/model.hpp"
#include "bildrl/rng.hpp"
#include "bildrl/vocab.hpp"

namespace {

using namespace bildrl;

// CLI11 only processes `set_config` files on the root app, so each subcommand
// carries a plain --config option and applies the file itself, right before
// its command runs. Lines are "key=value" (keys are long option names without
// the dashes); blank lines and '#' comments are skipped. Options already set
// on the command line or through the environment keep their values.
void add_config_option(CLI::App* cmd) {
  cmd->add_option("--config")->description("key=value config file (flags override it)");
}

void apply_config(CLI::App* cmd) {
  const CLI::Option* copt = cmd->get_option_no_throw("--config");
  if (copt == nullptr || copt->count() == 0) return;
  const std::string path = copt->as<std::string>();
  std::ifstream in(path);
  if (!in) throw bildrl::IoError("config '" + path + "': cannot open");

  const auto trim = [](const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string();
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  };

  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw bildrl::ParseError("config '" + path + "':" + std::to_string(lineno) +
                               ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || opt == copt)
      throw bildrl::ConfigError("config '" + path + "': unknown option '" + key + "'");
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

struct LangPair {
  std::string a;
  std::string b;
};

LangPair parse_lang_pair(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos)
    throw bildrl::ConfigError("language pair must look like en-fr, got '" + s + "'");
  LangPair p{s.substr(0, dash), s.substr(dash + 1)};
  if (!valid_language_tag(p.a) || !valid_language_tag(p.b))
    throw bildrl::ConfigError("language pair needs two-letter lowercase tags, got '" + s + "'");
  if (p.a == p.b) throw bildrl::ConfigError("language pair needs two distinct languages, got '" + s + "'");
  return p;
}

// Vocabulary indices of real words (excludes <pad> and <unk>).
std::vector<int> real_words(const Vocabulary& v) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(v.size()));
  for (int i = 2; i < v.size(); ++i) out.push_back(i);
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

// Counts every token of `lang` seen across the training sources; dictionary
// headwords of that language are pinned so min-count can never drop a
// retrieval target.
Vocabulary training_vocab(const std::string& lang, const std::vector<DictionaryEntry>& dict,
                          const std::vector<std::vector<std::string>>* mono,
                          const std::vector<ParallelPair>* parallel, bool parallel_side_a,
                          std::int64_t min_count) {
  VocabBuilder b;
  for (const auto& e : dict) {
    if (e.target_lang == lang) {
      b.add_token(e.target_word);
      b.require(e.target_word);
    }
    if (e.def_lang == lang) b.add_line(e.definition);
  }
  if (mono)
    for (const auto& line : *mono) b.add_line(line);
  if (parallel)
    for (const auto& p : *parallel) b.add_line(parallel_side_a ? p.sent_a : p.sent_b);
  return b.build(lang, min_count);
}

// Dense init matrix for one language from a pretrained text export. Every
// vocabulary token except <pad> must be covered.
Tensor init_from_text(const TextEmbeddings& text, const Vocabulary& v, int dim) {
  if (text.dim != dim)
    throw bildrl::ConfigError("pretrained embeddings have dimension " + std::to_string(text.dim) +
                              " but the model uses " + std::to_string(dim));
  std::unordered_map<std::string, const Vec*> by_key;
  by_key.reserve(text.entries.size());
  for (const auto& e : text.entries) by_key[e.lang + ":" + e.token] = &e.vec;
  Tensor t(v.size(), dim);
  for (int i = 0; i < v.size(); ++i) {
    if (i == Vocabulary::kPad) continue;
    const auto it = by_key.find(v.language + ":" + v.token(i));
    if (it == by_key.end())
      throw bildrl::ConfigError("pretrained embeddings missing " + v.language + ":" + v.token(i));
    std::copy(it->second->begin(), it->second->end(), t.row(i));
  }
  return t;
}

// ---- option bundles -------------------------------------------------------

struct EncoderOpts {
  std::string kind = "att";
  EncoderConfig cfg;
};

void add_encoder_options(CLI::App* cmd, EncoderOpts& e) {
  cmd->add_option("--encoder", e.kind, "definition encoder: bow, cnn, gru, att")
      ->check(CLI::IsMember({"bow", "cnn", "gru", "att"}))
      ->capture_default_str();
  cmd->add_option("--dim", e.cfg.dim, "embedding dimension k")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--hidden", e.cfg.hidden, "encoder hidden width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--layers", e.cfg.layers, "encoder depth")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--seq-len", e.cfg.seq_len, "definition length L (pad/truncate)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--kernel", e.cfg.kernel, "cnn convolution window")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--pool", e.cfg.pool, "cnn max-pool size and stride")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--attention-single-weight", e.cfg.attention_single_weight,
                "weight attention outputs by a_t instead of a_t^2");
}

EncoderConfig encoder_config(const EncoderOpts& e) {
  EncoderConfig cfg = e.cfg;
  cfg.kind = encoder_kind_from_string(e.kind);
  cfg.validate();
  return cfg;
}

struct TrainOpts {
  std::string dict_path;
  std::string lang_pair = "en-fr";
  EncoderOpts enc;
  std::string strategy = "multitask";
  TrainConfig tc;
  std::int64_t min_count = 1;
  std::string mono_a, mono_b, parallel;
  std::string init_embed;
  std::string out = "model.ckpt";
  std::string log_path;
  int checkpoint_every = 0;
  int holdout = 0;
  std::string holdout_out;
};

void add_train_options(CLI::App* cmd, TrainOpts& o, bool joint) {
  cmd->add_option("--dict", o.dict_path, "training dictionary TSV (target_lang, target_word, def_lang, definition)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--lang-pair", o.lang_pair, "language pair, e.g. en-fr")->capture_default_str();
  add_encoder_options(cmd, o.enc);
  if (!joint) {
    cmd->add_option("--strategy", o.strategy,
                    "single (targets in the pair's first language only) or multitask (both directions)")
        ->check(CLI::IsMember({"single", "multitask"}))
        ->capture_default_str();
  }
  cmd->add_option("--batch", o.tc.batch_size, "dictionary batch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--epochs", o.tc.epochs, "training epochs")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--alpha", o.tc.opt.alpha, "AMSGrad learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--min-count", o.min_count, "vocabulary frequency cutoff")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", o.tc.seed, "RNG seed")->envname("BILDRL_SEED")->capture_default_str();
  cmd->add_option("--init-embed", o.init_embed, "pretrained embedding text file (from train-embed)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output model checkpoint")->capture_default_str();
  cmd->add_option("--log", o.log_path, "training log TSV (default <out>.log.tsv)");
  cmd->add_option("--checkpoint-every", o.checkpoint_every,
                  "also write <out>.ep<N> every N epochs (0 = only the final model)")
      ->capture_default_str();
  cmd->add_option("--holdout", o.holdout, "hold out this many defined words as a test set")
      ->capture_default_str();
  cmd->add_option("--holdout-out", o.holdout_out, "where to write the held-out entries (TSV)");
  if (joint) {
    cmd->add_option("--mono-a", o.mono_a, "monolingual corpus for the pair's first language")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--mono-b", o.mono_b, "monolingual corpus for the pair's second language")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--parallel", o.parallel, "parallel corpus TSV (first-language column first)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--lambda1", o.tc.lambda1, "Skip-Gram weight in the joint objective")
        ->capture_default_str();
    cmd->add_option("--lambda2", o.tc.lambda2, "alignment weight in the joint objective")
        ->capture_default_str();
    cmd->add_option("--window", o.tc.sg.window, "Skip-Gram context window")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--negatives", o.tc.sg.negatives, "Skip-Gram negative samples per pair")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--subsample", o.tc.sg.subsample, "Skip-Gram subsampling threshold (0 disables)")
        ->capture_default_str();
    cmd->add_flag("--sync", o.tc.sync_joint,
                  "deterministic round-robin joint training instead of 4 concurrent workers");
  }
  add_config_option(cmd);
}

// Splits off `holdout` defined words (all their definitions) from the entry
// list; selection is uniform over distinct (language, word) keys.
void split_holdout(std::vector<DictionaryEntry>& entries, int holdout, std::uint64_t seed,
                   std::vector<DictionaryEntry>& held) {
  std::vector<std::pair<std::string, std::string>> keys;
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (seen.insert(e.target_lang + ":" + e.target_word).second) keys.emplace_back(e.target_lang, e.target_word);
  }
  if (holdout >= static_cast<int>(keys.size()))
    throw bildrl::ConfigError("holdout of " + std::to_string(holdout) + " words needs more than " +
                              std::to_string(keys.size()) + " defined words");
  Rng rng = Rng(seed).fork(100);
  rng.shuffle(keys);
  std::unordered_set<std::string> held_keys;
  for (int i = 0; i < holdout; ++i) held_keys.insert(keys[static_cast<std::size_t>(i)].first + ":" +
                                                     keys[static_cast<std::size_t>(i)].second);
  std::vector<DictionaryEntry> kept;
  kept.reserve(entries.size());
  for (auto& e : entries) {
    if (held_keys.count(e.target_lang + ":" + e.target_word))
      held.push_back(std::move(e));
    else
      kept.push_back(std::move(e));
  }
  entries = std::move(kept);
  if (entries.empty()) throw bildrl::ConfigError("holdout removed every training entry");
}

int run_train(const TrainOpts& o, bool joint) {
  const LangPair lp = parse_lang_pair(o.lang_pair);
  TrainConfig tc = o.tc;
  tc.strategy = joint ? Strategy::joint : strategy_from_string(o.strategy);
  if (o.checkpoint_every > 0) tc.checkpoint_every = o.checkpoint_every;
  const EncoderConfig ec = encoder_config(o.enc);

  std::vector<DictionaryEntry> entries = load_dictionary(o.dict_path);
  std::vector<DictionaryEntry> held;
  if (o.holdout > 0) {
    if (o.holdout_out.empty())
      throw bildrl::ConfigError("--holdout needs --holdout-out to receive the held-out entries");
    split_holdout(entries, o.holdout, tc.seed, held);
  }

  std::vector<std::vector<std::string>> mono_a, mono_b;
  std::vector<ParallelPair> parallel;
  if (joint) {
    mono_a = load_corpus_lines(o.mono_a);
    mono_b = load_corpus_lines(o.mono_b);
    parallel = load_parallel(o.parallel);
  }

  // Vocabulary spans training and held-out entries: the held-out words stay
  // rankable, only their definitions are excluded from training.
  std::vector<DictionaryEntry> all_entries = entries;
  all_entries.insert(all_entries.end(), held.begin(), held.end());
  const Vocabulary va =
      training_vocab(lp.a, all_entries, joint ? &mono_a : nullptr, joint ? &parallel : nullptr, true, o.min_count);
  const Vocabulary vb =
      training_vocab(lp.b, all_entries, joint ? &mono_b : nullptr, joint ? &parallel : nullptr, false, o.min_count);

  TrainInputs in;
  in.vocab_a = &va;
  in.vocab_b = &vb;
  for (auto& pe : prepare_entries(entries, va, vb, ec.seq_len)) {
    (pe.target_is_a ? in.ab : in.ba).push_back(std::move(pe));
  }
  if (joint) {
    in.mono_a.reserve(mono_a.size());
    for (const auto& line : mono_a) in.mono_a.push_back(va.encode(line));
    in.mono_b.reserve(mono_b.size());
    for (const auto& line : mono_b) in.mono_b.push_back(vb.encode(line));
    in.parallel.reserve(parallel.size());
    for (const auto& p : parallel) {
      ParallelIdx idx{va.encode(p.sent_a), vb.encode(p.sent_b)};
      if (!idx.a.empty() && !idx.b.empty()) in.parallel.push_back(std::move(idx));
    }
  }

  Tensor init_a, init_b;
  if (!o.init_embed.empty()) {
    std::ifstream f(o.init_embed, std::ios::binary);
    if (!f) throw IoError("cannot open '" + o.init_embed + "'");
    const TextEmbeddings text = import_embeddings_text(f, o.init_embed);
    init_a = init_from_text(text, va, ec.dim);
    init_b = init_from_text(text, vb, ec.dim);
    in.init_in_a = &init_a;
    in.init_in_b = &init_b;
  }

  if (!held.empty()) {
    std::ofstream f = open_out(o.holdout_out);
    for (const auto& e : held)
      f << e.target_lang << '\t' << e.target_word << '\t' << e.def_lang << '\t' << join_tokens(e.definition)
        << '\n';
  }

  const std::string log_path = o.log_path.empty() ? o.out + ".log.tsv" : o.log_path;
  std::ofstream log = open_out(log_path);

  std::function<void(int, const Checkpoint&)> on_checkpoint;
  if (o.checkpoint_every > 0) {
    const std::string base = o.out;
    on_checkpoint = [base](int epoch, const Checkpoint& ckpt) {
      save_checkpoint(base + ".ep" + std::to_string(epoch), ckpt);
    };
  }

  const TrainResult result = run_training(tc, ec, in, &log, on_checkpoint);
  save_checkpoint(o.out, result.checkpoint);

  const EpochLoss& last = result.report.epochs.back();
  std::cout << "trained " << result.report.epochs.size() << " epochs in " << std::fixed << std::setprecision(1)
            << result.report.wall_seconds << "s" << std::defaultfloat << std::setprecision(6) << "\n"
            << "final losses: dict " << last.dict;
  if (joint)
    std::cout << "  sg_a " << last.sg_a << "  sg_b " << last.sg_b << "  align " << last.align;
  std::cout << "\nbatches: dict " << result.report.dict_batches;
  if (joint)
    std::cout << "  sg_a " << result.report.sg_a_batches << "  sg_b " << result.report.sg_b_batches
              << "  align " << result.report.align_batches;
  std::cout << "\nchecksum " << std::hex << std::setw(16) << std::setfill('0') << result.report.checksum
            << std::dec << std::setfill(' ') << "\nwrote " << o.out << " (log: " << log_path << ")\n";
  return 0;
}

// ---- train-embed ----------------------------------------------------------

struct EmbedOpts {
  std::string mono_a, mono_b, parallel;
  std::string lang_pair = "en-fr";
  PretrainConfig cfg;
  int dim = 50;
  std::int64_t min_count = 5;  // corpus-only vocabulary; dictionary commands default to 1
  std::string out;
};

int run_train_embed(const EmbedOpts& o) {
  const LangPair lp = parse_lang_pair(o.lang_pair);
  const auto mono_a = load_corpus_lines(o.mono_a);
  const auto mono_b = load_corpus_lines(o.mono_b);
  const auto parallel = load_parallel(o.parallel);

  const std::vector<DictionaryEntry> no_dict;
  const Vocabulary va = training_vocab(lp.a, no_dict, &mono_a, &parallel, true, o.min_count);
  const Vocabulary vb = training_vocab(lp.b, no_dict, &mono_b, &parallel, false, o.min_count);

  std::vector<std::vector<int>> ids_a, ids_b;
  ids_a.reserve(mono_a.size());
  for (const auto& line : mono_a) ids_a.push_back(va.encode(line));
  ids_b.reserve(mono_b.size());
  for (const auto& line : mono_b) ids_b.push_back(vb.encode(line));
  std::vector<ParallelIdx> pairs;
  pairs.reserve(parallel.size());
  for (const auto& p : parallel) {
    ParallelIdx idx{va.encode(p.sent_a), vb.encode(p.sent_b)};
    if (!idx.a.empty() && !idx.b.empty()) pairs.push_back(std::move(idx));
  }

  ParamStore store;
  Rng rng = Rng(o.cfg.seed).fork(0);
  const EmbeddingSpace space =
      register_embeddings(store, lp.a, va.size(), lp.b, vb.size(), o.dim, rng, /*with_output=*/true);
  const PretrainReport report = run_pretraining(store, space, va, vb, ids_a, ids_b, pairs, o.cfg);

  for (std::size_t i = 0; i < report.epochs.size(); ++i) {
    const PretrainEpoch& e = report.epochs[i];
    std::cout << i + 1 << '\t' << e.sg_a << '\t' << e.sg_b << '\t' << e.align << '\n';
  }

  std::ofstream f = open_out(o.out);
  export_embeddings_text(f, va, vb, space);
  std::cerr << "wrote " << o.out << " (" << va.size() + vb.size() << " vectors, dim " << o.dim << ")\n";
  return 0;
}

// ---- eval-retrieval -------------------------------------------------------

struct EvalRetrievalOpts {
  std::string model, test, metric = "sq_l2", restrict_path, out;
  bool two_stage = false;
};

int run_eval_retrieval(const EvalRetrievalOpts& o) {
  const Model model = model_from_checkpoint(load_checkpoint(o.model));
  const auto entries = load_dictionary(o.test);
  if (entries.empty()) throw EvalError("test file '" + o.test + "' has no entries");
  const Metric metric = metric_from_string(o.metric);

  std::map<std::string, std::vector<int>> restricted;
  if (!o.restrict_path.empty()) {
    std::ifstream f(o.restrict_path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + o.restrict_path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto colon = line.find(':');
      if (colon == std::string::npos)
        throw bildrl::ParseError(o.restrict_path + ":" + std::to_string(lineno) +
                                 ": restriction lines look like lang:word");
      const std::string lang = line.substr(0, colon);
      const std::string word = line.substr(colon + 1);
      const Vocabulary& v = model.vocab(lang);
      if (!v.contains(word))
        throw bildrl::ConfigError(o.restrict_path + ":" + std::to_string(lineno) + ": '" + word +
                                  "' is not in the " + lang + " vocabulary");
      restricted[lang].push_back(v.token_to_index.at(word));
    }
  }
  auto candidates_for = [&](const std::string& lang) -> std::vector<int> {
    const auto it = restricted.find(lang);
    if (it != restricted.end()) return it->second;
    return real_words(model.vocab(lang));
  };

  std::ofstream file;
  if (!o.out.empty()) file = open_out(o.out);
  std::ostream& out = o.out.empty() ? std::cout : file;

  std::vector<int> ranks;
  ranks.reserve(entries.size());
  for (const auto& e : entries) {
    const Vocabulary& tv = model.vocab(e.target_lang);
    if (!tv.contains(e.target_word))
      throw EvalError("test target '" + e.target_word + "' is not in the " + e.target_lang + " vocabulary");
    const int target = tv.token_to_index.at(e.target_word);
    const Vec query = model.encode_definition(e.definition, e.def_lang);
    int rank = 0;
    if (o.two_stage) {
      // The test format carries no labeled source-language word; <unk> is a
      // placeholder (the rank depends only on the query).
      rank = mono_retrieval_rank(query, Vocabulary::kUnk, target, candidates_for(e.def_lang),
                                 model.space.input(e.def_lang), candidates_for(e.target_lang),
                                 model.space.input(e.target_lang), metric);
    } else {
      rank = rank_target(query, target, candidates_for(e.target_lang), model.space.input(e.target_lang), metric);
    }
    out << e.target_word << '\t' << rank << '\n';
    ranks.push_back(rank);
  }
  const RetrievalMetrics m = retrieval_metrics(ranks);
  out << m.p_at_1 << '\t' << m.p_at_10 << '\t' << m.mrr << '\n';
  if (!o.out.empty())
    std::cout << m.p_at_1 << '\t' << m.p_at_10 << '\t' << m.mrr << '\n';
  return 0;
}

// ---- eval-paraphrase ------------------------------------------------------

struct EvalParaphraseOpts {
  std::string model, train, valid, test, out;
  int hidden = 50;
  int batch = 64;
  int epochs = 1000;
  int patience = 10;
  OptConfig opt;
  std::uint64_t seed = 42;
};

int run_eval_paraphrase(const EvalParaphraseOpts& o) {
  const Model model = model_from_checkpoint(load_checkpoint(o.model));
  const std::string& lang_a = model.vocab_a.language;
  const std::string& lang_b = model.vocab_b.language;

  auto featurize = [&](const std::vector<ParaphraseRecord>& recs, std::vector<Vec>& xs, std::vector<int>& ys) {
    xs.reserve(recs.size());
    ys.reserve(recs.size());
    for (const auto& r : recs) {
      const Vec ea = model.encode_definition(r.sent_a, lang_a);
      const Vec eb = model.encode_definition(r.sent_b, lang_b);
      Vec x(ea.size());
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = ea[i] - eb[i];
      xs.push_back(std::move(x));
      ys.push_back(r.label);
    }
  };

  std::vector<Vec> x_train, x_valid, x_test;
  std::vector<int> y_train, y_valid, y_test;
  featurize(load_paraphrase_pairs(o.train), x_train, y_train);
  featurize(load_paraphrase_pairs(o.valid), x_valid, y_valid);
  featurize(load_paraphrase_pairs(o.test), x_test, y_test);

  MlpTrainInfo info;
  const MlpClassifier clf = train_paraphrase_classifier(x_train, y_train, x_valid, y_valid, o.hidden, o.opt,
                                                        o.batch, o.epochs, o.patience, o.seed, &info);
  std::cerr << "classifier: " << info.epochs_run << " epochs, best epoch " << info.best_epoch
            << " (validation accuracy " << info.best_valid_acc << ")\n";

  std::ofstream file;
  if (!o.out.empty()) file = open_out(o.out);
  std::ostream& out = o.out.empty() ? std::cout : file;

  std::vector<int> predicted;
  predicted.reserve(x_test.size());
  out << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < x_test.size(); ++i) {
    const double p = mlp_predict_prob(clf, x_test[i]);
    const int pred = p >= 0.5 ? 1 : 0;
    predicted.push_back(pred);
    out << pred << '\t' << y_test[i] << '\t' << p << '\n';
  }
  out << std::defaultfloat << std::setprecision(6);
  const BinaryScores scores = binary_scores(predicted, y_test);
  out << scores.accuracy << '\t' << scores.f1 << '\n';
  if (!o.out.empty()) std::cout << scores.accuracy << '\t' << scores.f1 << '\n';
  return 0;
}

// ---- query ----------------------------------------------------------------

struct QueryOpts {
  std::string model, lang_pair, text, metric = "sq_l2";
  int topk = 5;
};

int run_query(const QueryOpts& o) {
  const Model model = model_from_checkpoint(load_checkpoint(o.model));
  const LangPair lp = parse_lang_pair(o.lang_pair);
  const Metric metric = metric_from_string(o.metric);
  const Vocabulary& tv = model.vocab(lp.b);
  const Tensor& emb = model.space.input(lp.b);

  const Vec query = model.encode_definition(split_tokens(o.text), lp.a);
  std::vector<std::pair<double, int>> scored;
  scored.reserve(static_cast<std::size_t>(tv.size()));
  for (int i = 2; i < tv.size(); ++i) scored.emplace_back(row_distance(query, emb, i, metric), i);
  std::sort(scored.begin(), scored.end());

  const std::size_t k = std::min(scored.size(), static_cast<std::size_t>(o.topk));
  std::cout << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < k; ++i) std::cout << tv.token(scored[i].second) << '\t' << scored[i].first << '\n';
  return 0;
}

// ---- gradcheck ------------------------------------------------------------

struct GradCheckOpts {
  std::string loss = "st";
  EncoderOpts enc;
  std::uint64_t seed = 7;
  double h = 1e-5;
  double gate = 1e-4;
};

int run_gradcheck(const GradCheckOpts& o) {
  const EncoderConfig cfg = encoder_config(o.enc);
  const GradCheckInstance inst = make_gradcheck_instance(o.loss, cfg, o.seed);
  const GradCheckReport rep = inst.run(o.h);
  std::cout << std::scientific << std::setprecision(6) << rep.max_rel_err << '\t' << rep.worst_slot << '['
            << rep.worst_index << "]\n";
  return rep.max_rel_err < o.gate ? 0 : 3;
}

// ---- make-paraphrase-data -------------------------------------------------

struct MakeParaphraseOpts {
  std::string model, dict;
  std::string out_train, out_valid, out_test;
  int nn = 15;
  int train_pct = 70;
  int valid_pct = 5;
  std::uint64_t seed = 42;
};

int run_make_paraphrase(const MakeParaphraseOpts& o) {
  if (o.train_pct < 0 || o.valid_pct < 0 || o.train_pct + o.valid_pct > 100)
    throw bildrl::ConfigError("split percentages must be non-negative and leave room for a test share");
  const Model model = model_from_checkpoint(load_checkpoint(o.model));
  const std::string& lang_a = model.vocab_a.language;
  const std::string& lang_b = model.vocab_b.language;
  const auto entries = load_dictionary(o.dict);

  // Group the definitions of each (language, word): side A = definitions
  // written in the model's first language, side B = in the second.
  struct Group {
    std::string lang, word;
    std::vector<const std::vector<std::string>*> defs_a, defs_b;
  };
  std::vector<Group> groups;
  std::map<std::pair<std::string, std::string>, std::size_t> index_of;
  for (const auto& e : entries) {
    if (e.target_lang != lang_a && e.target_lang != lang_b)
      throw bildrl::ConfigError("entry target language '" + e.target_lang + "' is not in the model (" + lang_a +
                                ", " + lang_b + ")");
    const auto key = std::make_pair(e.target_lang, e.target_word);
    auto it = index_of.find(key);
    if (it == index_of.end()) {
      it = index_of.emplace(key, groups.size()).first;
      groups.push_back(Group{e.target_lang, e.target_word, {}, {}});
    }
    Group& g = groups[it->second];
    if (e.def_lang == lang_a)
      g.defs_a.push_back(&e.definition);
    else if (e.def_lang == lang_b)
      g.defs_b.push_back(&e.definition);
    else
      throw bildrl::ConfigError("definition language '" + e.def_lang + "' is not in the model (" + lang_a + ", " +
                                lang_b + ")");
  }

  // Words eligible as nearest-neighbor picks: in-vocabulary, with a B-side
  // definition to lend to the negative pair.
  std::map<std::string, std::vector<int>> candidates;      // language -> vocab indices
  std::map<std::string, std::map<int, std::size_t>> back;  // vocab index -> group
  int skipped_oov = 0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const Group& g = groups[gi];
    const Vocabulary& v = model.vocab(g.lang);
    if (!v.contains(g.word)) {
      ++skipped_oov;
      continue;
    }
    if (g.defs_b.empty()) continue;
    const int idx = v.token_to_index.at(g.word);
    candidates[g.lang].push_back(idx);
    back[g.lang][idx] = gi;
  }

  struct RawPair {
    const std::vector<std::string>* a;
    const std::vector<std::string>* b;
    int label;
  };
  std::vector<RawPair> pairs;
  Rng root(o.seed);
  Rng pick_rng = root.fork(0);
  Rng shuffle_rng = root.fork(1);

  int positives = 0, negatives = 0;
  for (const Group& g : groups) {
    if (g.defs_a.empty() || g.defs_b.empty()) continue;
    const Vocabulary& v = model.vocab(g.lang);
    if (!v.contains(g.word)) continue;  // already counted above
    const int src = v.token_to_index.at(g.word);
    const Tensor& emb = model.space.input(g.lang);
    for (const auto* da : g.defs_a) {
      for (const auto* db : g.defs_b) {
        pairs.push_back(RawPair{da, db, 1});
        ++positives;
        const int neighbor = pick_paraphrase_negative(src, candidates[g.lang], emb, o.nn, pick_rng);
        const Group& ng = groups[back[g.lang][neighbor]];
        pairs.push_back(RawPair{da, ng.defs_b.front(), 0});
        ++negatives;
      }
    }
  }
  if (pairs.empty()) throw EvalError("no paraphrase pairs: no word has definitions in both languages");
  if (skipped_oov > 0)
    std::cerr << "skipped " << skipped_oov << " words missing from the model vocabulary\n";

  shuffle_rng.shuffle(pairs);
  const int n = static_cast<int>(pairs.size());
  const int n_train = n * o.train_pct / 100;
  const int n_valid = n * o.valid_pct / 100;

  auto write_split = [&](const std::string& path, int begin, int end) {
    std::ofstream f = open_out(path);
    for (int i = begin; i < end; ++i)
      f << join_tokens(*pairs[static_cast<std::size_t>(i)].a) << '\t'
        << join_tokens(*pairs[static_cast<std::size_t>(i)].b) << '\t' << pairs[static_cast<std::size_t>(i)].label
        << '\n';
  };
  write_split(o.out_train, 0, n_train);
  write_split(o.out_valid, n_train, n_train + n_valid);
  write_split(o.out_test, n_train + n_valid, n);

  std::cout << positives << " positive and " << negatives << " negative pairs: " << n_train << " train, "
            << n_valid << " valid, " << n - n_train - n_valid << " test\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bilingual dictionary representation learning toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  EmbedOpts embed;
  auto* cmd_embed = app.add_subcommand("train-embed", "pretrain bilingual word embeddings (Skip-Gram + alignment)");
  cmd_embed->add_option("--mono-a", embed.mono_a, "monolingual corpus, first language")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_embed->add_option("--mono-b", embed.mono_b, "monolingual corpus, second language")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_embed->add_option("--parallel", embed.parallel, "parallel corpus TSV (first-language column first)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_embed->add_option("--lang-pair", embed.lang_pair, "language pair, e.g. en-fr")->capture_default_str();
  cmd_embed->add_option("--dim", embed.dim, "embedding dimension k")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_embed->add_option("--epochs", embed.cfg.epochs, "pretraining epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_embed->add_option("--batch", embed.cfg.batch, "batch size")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_embed->add_option("--alpha", embed.cfg.opt.alpha, "AMSGrad learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_embed->add_option("--window", embed.cfg.sg.window, "Skip-Gram context window")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_embed->add_option("--negatives", embed.cfg.sg.negatives, "negative samples per pair")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_embed->add_option("--subsample", embed.cfg.sg.subsample, "subsampling threshold (0 disables)")
      ->capture_default_str();
  cmd_embed->add_option("--min-count", embed.min_count, "vocabulary frequency cutoff")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_embed->add_option("--seed", embed.cfg.seed, "RNG seed")->envname("BILDRL_SEED")->capture_default_str();
  cmd_embed->add_option("--out", embed.out, "output embedding text file")->required();
  add_config_option(cmd_embed);
  cmd_embed->callback([&]() { apply_config(cmd_embed); rc = run_train_embed(embed); });

  TrainOpts dict_opts;
  auto* cmd_dict = app.add_subcommand("train-dict", "train the definition encoder on a bilingual dictionary");
  add_train_options(cmd_dict, dict_opts, /*joint=*/false);
  cmd_dict->callback([&]() { apply_config(cmd_dict); rc = run_train(dict_opts, /*joint=*/false); });

  TrainOpts joint_opts;
  auto* cmd_joint =
      app.add_subcommand("train-joint", "jointly train encoder, embeddings, Skip-Gram, and alignment");
  add_train_options(cmd_joint, joint_opts, /*joint=*/true);
  cmd_joint->callback([&]() { apply_config(cmd_joint); rc = run_train(joint_opts, /*joint=*/true); });

  EvalRetrievalOpts er;
  auto* cmd_er = app.add_subcommand("eval-retrieval", "rank true targets for test definitions (P@1, P@10, MRR)");
  cmd_er->add_option("--model", er.model, "model checkpoint")->required()->check(CLI::ExistingFile);
  cmd_er->add_option("--test", er.test, "test dictionary TSV")->required()->check(CLI::ExistingFile);
  cmd_er->add_option("--metric", er.metric, "distance metric")
      ->check(CLI::IsMember({"sq_l2", "cosine"}))
      ->capture_default_str();
  cmd_er->add_flag("--two-stage", er.two_stage,
                   "monolingual baseline: retrieve a source-language word first, then hop to the target language");
  cmd_er->add_option("--restrict", er.restrict_path, "restriction set file (one lang:word per line)")
      ->check(CLI::ExistingFile);
  cmd_er->add_option("--out", er.out, "report TSV (default: standard output)");
  add_config_option(cmd_er);
  cmd_er->callback([&]() { apply_config(cmd_er); rc = run_eval_retrieval(er); });

  EvalParaphraseOpts ep;
  auto* cmd_ep = app.add_subcommand("eval-paraphrase", "train and score the cross-lingual paraphrase classifier");
  cmd_ep->add_option("--model", ep.model, "model checkpoint")->required()->check(CLI::ExistingFile);
  cmd_ep->add_option("--train", ep.train, "training pairs TSV")->required()->check(CLI::ExistingFile);
  cmd_ep->add_option("--valid", ep.valid, "validation pairs TSV")->required()->check(CLI::ExistingFile);
  cmd_ep->add_option("--test", ep.test, "test pairs TSV")->required()->check(CLI::ExistingFile);
  cmd_ep->add_option("--hidden", ep.hidden, "classifier hidden width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_ep->add_option("--batch", ep.batch, "batch size")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_ep->add_option("--epochs", ep.epochs, "maximum training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_ep->add_option("--patience", ep.patience, "early-stopping patience (epochs)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_ep->add_option("--alpha", ep.opt.alpha, "AMSGrad learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_ep->add_option("--seed", ep.seed, "RNG seed")->envname("BILDRL_SEED")->capture_default_str();
  cmd_ep->add_option("--out", ep.out, "report TSV (default: standard output)");
  add_config_option(cmd_ep);
  cmd_ep->callback([&]() { apply_config(cmd_ep); rc = run_eval_paraphrase(ep); });

  QueryOpts q;
  auto* cmd_q = app.add_subcommand("query", "rank target-language words for a definition");
  cmd_q->add_option("--model", q.model, "model checkpoint")->required()->check(CLI::ExistingFile);
  cmd_q->add_option("--lang-pair", q.lang_pair, "definition-language dash target-language, e.g. en-fr")
      ->required();
  cmd_q->add_option("--text", q.text, "definition text (tokenized by whitespace)")->required();
  cmd_q->add_option("--topk", q.topk, "number of results")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_q->add_option("--metric", q.metric, "distance metric")
      ->check(CLI::IsMember({"sq_l2", "cosine"}))
      ->capture_default_str();
  cmd_q->callback([&]() { rc = run_query(q); });

  GradCheckOpts gc;
  auto* cmd_gc = app.add_subcommand("gradcheck", "compare analytic gradients against central differences");
  cmd_gc->add_option("--loss", gc.loss, "objective: st (dictionary), sg (Skip-Gram), align, mlp")
      ->check(CLI::IsMember({"st", "sg", "align", "mlp"}))
      ->capture_default_str();
  // Small encoder defaults: the check sweeps every parameter element with two
  // loss evaluations each, so training-scale widths are not useful here.
  gc.enc.cfg.dim = 4;
  gc.enc.cfg.hidden = 8;
  gc.enc.cfg.layers = 2;
  gc.enc.cfg.seq_len = 6;
  add_encoder_options(cmd_gc, gc.enc);
  cmd_gc->add_option("--seed", gc.seed, "RNG seed")->envname("BILDRL_SEED")->capture_default_str();
  cmd_gc->add_option("--step", gc.h, "finite-difference step")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_gc->add_option("--gate", gc.gate, "maximum acceptable relative error")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_gc->callback([&]() { rc = run_gradcheck(gc); });

  MakeParaphraseOpts mp;
  auto* cmd_mp = app.add_subcommand(
      "make-paraphrase-data", "build labeled paraphrase pairs from a dictionary (negatives via nearest neighbors)");
  cmd_mp->add_option("--model", mp.model, "model checkpoint (for the embedding space)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_mp->add_option("--dict", mp.dict, "dictionary TSV with definitions in both languages")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_mp->add_option("--out-train", mp.out_train, "training split output")->required();
  cmd_mp->add_option("--out-valid", mp.out_valid, "validation split output")->required();
  cmd_mp->add_option("--out-test", mp.out_test, "test split output")->required();
  cmd_mp->add_option("--nn", mp.nn, "nearest neighbors to draw negatives from")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_mp->add_option("--train-pct", mp.train_pct, "training share in percent")->capture_default_str();
  cmd_mp->add_option("--valid-pct", mp.valid_pct, "validation share in percent")->capture_default_str();
  cmd_mp->add_option("--seed", mp.seed, "RNG seed")->envname("BILDRL_SEED")->capture_default_str();
  add_config_option(cmd_mp);
  cmd_mp->callback([&]() { apply_config(cmd_mp); rc = run_make_paraphrase(mp); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  } catch (const bildrl::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
