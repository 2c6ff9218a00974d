#include "bildrl/model.hpp"

#include <sstream>

#include "bildrl/corpus.hpp"
#include "bildrl/error.hpp"

namespace bildrl {

const Vocabulary& Model::vocab(const std::string& lang) const {
  if (lang == vocab_a.language) return vocab_a;
  if (lang == vocab_b.language) return vocab_b;
  throw ConfigError("model: language '" + lang + "' is not part of this model (" + vocab_a.language + ", " +
                    vocab_b.language + ")");
}

const Vocabulary& Model::other_vocab(const std::string& lang) const {
  return lang == vocab_a.language ? vocab_b : vocab_a;
}

Vec Model::encode_definition(const std::vector<std::string>& tokens, const std::string& def_lang) const {
  const Vocabulary& v = vocab(def_lang);
  auto [ids, true_len] = pad_or_truncate(v.encode(tokens), enc_cfg.seq_len);
  if (true_len == 0) throw EvalError("cannot encode an empty definition");
  return encoder->encode(ids, true_len, space.input(def_lang), nullptr);
}

namespace {

Vocabulary vocab_from_config(const Checkpoint& c, const std::string& lang) {
  const std::string& joined = c.require("vocab." + lang);
  Vocabulary v;
  v.language = lang;
  std::istringstream ss(joined);
  std::string tok;
  while (ss >> tok) {
    v.index_to_token.push_back(tok);
    v.counts.push_back(0);
  }
  if (v.size() < 2 || v.index_to_token[0] != Vocabulary::kPadToken ||
      v.index_to_token[1] != Vocabulary::kUnkToken)
    throw IntegrityError("checkpoint: vocab." + lang + " does not start with the special tokens");
  for (int i = 2; i < v.size(); ++i)
    if (!v.token_to_index.emplace(v.index_to_token[static_cast<std::size_t>(i)], i).second)
      throw IntegrityError("checkpoint: vocab." + lang + " has a duplicate token '" +
                           v.index_to_token[static_cast<std::size_t>(i)] + "'");
  return v;
}

double config_double(const Checkpoint& c, const std::string& key) {
  const std::string& s = c.require(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IntegrityError("checkpoint: config key '" + key + "' has non-numeric value '" + s + "'");
  }
}

}  // namespace

Model model_from_checkpoint(const Checkpoint& ckpt) {
  validate_checkpoint(ckpt);
  Model m;
  m.enc_cfg.kind = encoder_kind_from_string(ckpt.require("encoder"));
  m.enc_cfg.dim = static_cast<int>(config_double(ckpt, "dim"));
  m.enc_cfg.hidden = static_cast<int>(config_double(ckpt, "hidden"));
  m.enc_cfg.layers = static_cast<int>(config_double(ckpt, "layers"));
  m.enc_cfg.seq_len = static_cast<int>(config_double(ckpt, "seq_len"));
  m.enc_cfg.kernel = static_cast<int>(config_double(ckpt, "kernel"));
  m.enc_cfg.pool = static_cast<int>(config_double(ckpt, "pool"));
  m.enc_cfg.attention_single_weight = ckpt.require("attention_single_weight") == "1";
  m.strategy = strategy_from_string(ckpt.require("strategy"));
  m.lambda1 = config_double(ckpt, "lambda1");
  m.lambda2 = config_double(ckpt, "lambda2");
  m.seed = static_cast<std::uint64_t>(config_double(ckpt, "seed"));
  m.vocab_a = vocab_from_config(ckpt, ckpt.require("lang_a"));
  m.vocab_b = vocab_from_config(ckpt, ckpt.require("lang_b"));

  m.store = std::make_unique<ParamStore>();
  for (const auto& [name, t] : ckpt.tensors) m.store->add(name, t.to_double());
  m.space = bind_embeddings(*m.store, m.vocab_a.language, m.vocab_b.language);
  m.encoder = std::make_unique<Encoder>(*m.store, m.enc_cfg, nullptr);
  return m;
}

}  // namespace bildrl
