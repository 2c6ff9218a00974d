#include "bildrl/gradcheck_harness.hpp"

#include <vector>

#include "bildrl/bilembed.hpp"
#include "bildrl/dicttrain.hpp"
#include "bildrl/embedding.hpp"
#include "bildrl/error.hpp"
#include "bildrl/evaluate.hpp"
#include "bildrl/rng.hpp"

namespace bildrl {

namespace {

constexpr int kVocab = 10;  // per language, including the specials

int random_word(Rng& rng) { return 2 + rng.uniform_int(kVocab - 2); }

std::vector<int> random_sentence(Rng& rng, int lo, int hi) {
  const int n = lo + rng.uniform_int(hi - lo + 1);
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (int& id : ids) id = random_word(rng);
  return ids;
}

// Smallest input length the conv/pool stack can consume.
int min_cnn_len(const EncoderConfig& cfg) {
  for (int T = cfg.kernel; T <= cfg.seq_len; ++T) {
    int m = T;
    bool ok = true;
    for (int l = 0; l < cfg.layers; ++l) {
      if (m < cfg.kernel) {
        ok = false;
        break;
      }
      m = m - cfg.kernel + 1;
      if (l + 1 < cfg.layers) m = (m + cfg.pool - 1) / cfg.pool;
    }
    if (ok) return T;
  }
  throw ConfigError("cnn: no feasible input length <= seq-len " + std::to_string(cfg.seq_len) +
                    " for layers=" + std::to_string(cfg.layers) + " kernel=" + std::to_string(cfg.kernel) +
                    " pool=" + std::to_string(cfg.pool));
}

GradCheckInstance make_st(const EncoderConfig& cfg, std::uint64_t seed) {
  auto store = std::make_shared<ParamStore>();
  Rng rng(seed);
  auto space = std::make_shared<EmbeddingSpace>(
      register_embeddings(*store, "en", kVocab, "fr", kVocab, cfg.dim, rng, false));
  auto encoder = std::make_shared<Encoder>(*store, cfg, &rng);

  // One entry per direction; definition lengths >= 2 so every recurrent slot
  // participates, and long enough for a CNN stack to consume.
  const int lo = cfg.kind == EncoderKind::cnn ? min_cnn_len(cfg) : 2;
  if (cfg.seq_len < lo) throw ConfigError("gradcheck: seq-len too short for this encoder config");
  auto batch = std::make_shared<std::vector<PreparedEntry>>();
  for (const bool target_is_a : {true, false}) {
    PreparedEntry e;
    e.target_is_a = target_is_a;
    e.target = random_word(rng);
    auto [ids, true_len] = pad_or_truncate(random_sentence(rng, lo, cfg.seq_len), cfg.seq_len);
    e.def_ids = std::move(ids);
    e.true_len = true_len;
    batch->push_back(std::move(e));
  }

  GradCheckInstance inst;
  inst.store = store;
  inst.loss = [store, space, encoder, batch](ParamStore& s, bool with_grad) {
    std::vector<const PreparedEntry*> ptrs;
    for (const auto& e : *batch) ptrs.push_back(&e);
    Tensor* ga = with_grad ? &s.grad(emb_slot_name("en", false)) : nullptr;
    Tensor* gb = with_grad ? &s.grad(emb_slot_name("fr", false)) : nullptr;
    return dict_loss_grad(ptrs, *encoder, *space, with_grad, ga, gb);
  };
  return inst;
}

GradCheckInstance make_sg(const EncoderConfig& cfg, std::uint64_t seed) {
  auto store = std::make_shared<ParamStore>();
  Rng rng(seed);
  auto space = std::make_shared<EmbeddingSpace>(
      register_embeddings(*store, "en", kVocab, "fr", kVocab, cfg.dim, rng, true));

  auto batch = std::make_shared<std::vector<SgExample>>();
  for (int i = 0; i < 3; ++i) {
    SgExample ex;
    ex.center = random_word(rng);
    do ex.context = random_word(rng); while (ex.context == ex.center);
    for (int j = 0; j < 2; ++j) ex.negatives.push_back(random_word(rng));
    batch->push_back(std::move(ex));
  }

  GradCheckInstance inst;
  inst.store = store;
  inst.loss = [store, space, batch](ParamStore& s, bool with_grad) {
    Tensor* gin = with_grad ? &s.grad(emb_slot_name("en", false)) : nullptr;
    Tensor* gout = with_grad ? &s.grad(emb_slot_name("en", true)) : nullptr;
    const double inv = 1.0 / static_cast<double>(batch->size());
    double loss = 0.0;
    for (const auto& ex : *batch)
      loss += inv * skipgram_loss_grad(ex, *space->in_a, *space->out_a, gin, gout, inv);
    return loss;
  };
  return inst;
}

GradCheckInstance make_align(const EncoderConfig& cfg, std::uint64_t seed) {
  auto store = std::make_shared<ParamStore>();
  Rng rng(seed);
  auto space = std::make_shared<EmbeddingSpace>(
      register_embeddings(*store, "en", kVocab, "fr", kVocab, cfg.dim, rng, false));

  auto batch = std::make_shared<std::vector<ParallelIdx>>();
  for (int i = 0; i < 2; ++i) {
    ParallelIdx p;
    p.a = random_sentence(rng, 2, 4);
    p.b = random_sentence(rng, 2, 4);
    batch->push_back(std::move(p));
  }

  GradCheckInstance inst;
  inst.store = store;
  inst.loss = [store, space, batch](ParamStore& s, bool with_grad) {
    std::vector<const ParallelIdx*> ptrs;
    for (const auto& p : *batch) ptrs.push_back(&p);
    Tensor* ga = with_grad ? &s.grad(emb_slot_name("en", false)) : nullptr;
    Tensor* gb = with_grad ? &s.grad(emb_slot_name("fr", false)) : nullptr;
    return alignment_loss_grad(ptrs, *space->in_a, *space->in_b, ga, gb, 1.0);
  };
  return inst;
}

GradCheckInstance make_mlp(const EncoderConfig& cfg, std::uint64_t seed) {
  auto store = std::make_shared<ParamStore>();
  Rng rng(seed);
  register_mlp(*store, cfg.dim, 3, rng);

  auto xs = std::make_shared<std::vector<Vec>>();
  auto ys = std::make_shared<std::vector<int>>();
  for (int i = 0; i < 4; ++i) {
    Vec x(static_cast<std::size_t>(cfg.dim));
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    xs->push_back(std::move(x));
    ys->push_back(i % 2);
  }

  GradCheckInstance inst;
  inst.store = store;
  inst.loss = [store, xs, ys](ParamStore& s, bool with_grad) {
    std::vector<const Vec*> ptrs;
    for (const auto& x : *xs) ptrs.push_back(&x);
    return mlp_loss_grad(s, ptrs, *ys, with_grad, 1.0);
  };
  return inst;
}

}  // namespace

GradCheckInstance make_gradcheck_instance(const std::string& loss, const EncoderConfig& cfg,
                                          std::uint64_t seed) {
  cfg.validate();
  if (loss == "st") return make_st(cfg, seed);
  if (loss == "sg") return make_sg(cfg, seed);
  if (loss == "align") return make_align(cfg, seed);
  if (loss == "mlp") return make_mlp(cfg, seed);
  throw ConfigError("unknown gradcheck loss '" + loss + "' (expected st|sg|align|mlp)");
}

}  // namespace bildrl
