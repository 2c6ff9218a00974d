// Microbenchmarks for the training hot path: encoder forward/backward at the
// default model size, one AMSGrad sweep, and a full dictionary batch step.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "bildrl/dicttrain.hpp"
#include "bildrl/encoders.hpp"
#include "bildrl/param_store.hpp"
#include "bildrl/rng.hpp"

namespace {

using namespace bildrl;

EncoderConfig default_config(EncoderKind kind) {
  EncoderConfig cfg;
  cfg.kind = kind;
  cfg.dim = 50;
  cfg.hidden = 200;
  cfg.layers = 5;
  cfg.seq_len = 15;
  return cfg;
}

Tensor random_embeddings(int vocab, int dim, std::uint64_t seed) {
  Tensor emb(vocab, dim);
  Rng rng(seed);
  for (int i = 1; i < vocab; ++i)
    for (int j = 0; j < dim; ++j) emb(i, j) = rng.uniform(-0.5, 0.5);
  return emb;
}

std::vector<int> token_ids(int n) {
  std::vector<int> ids;
  for (int i = 0; i < n; ++i) ids.push_back(2 + (i * 7) % 400);
  return ids;
}

void bench_encode(benchmark::State& state, EncoderKind kind) {
  ParamStore store;
  Rng rng(1);
  Encoder enc(store, default_config(kind), &rng);
  const Tensor emb = random_embeddings(402, 50, 2);
  const std::vector<int> ids = token_ids(15);
  for (auto _ : state) {
    const Vec out = enc.encode(ids, 15, emb, nullptr);
    benchmark::DoNotOptimize(out.data());
  }
}

void bench_backward(benchmark::State& state, EncoderKind kind) {
  ParamStore store;
  Rng rng(1);
  Encoder enc(store, default_config(kind), &rng);
  Tensor emb = random_embeddings(402, 50, 2);
  Tensor d_emb(402, 50);
  const std::vector<int> ids = token_ids(15);
  EncoderTrace trace;
  enc.encode(ids, 15, emb, &trace);
  const Vec d_out(50, 0.01);
  for (auto _ : state) {
    enc.backward(trace, d_out, &d_emb);
    benchmark::DoNotOptimize(d_emb.data.data());
  }
}

void BM_EncodeBow(benchmark::State& s) { bench_encode(s, EncoderKind::bow); }
void BM_EncodeCnn(benchmark::State& s) { bench_encode(s, EncoderKind::cnn); }
void BM_EncodeGru(benchmark::State& s) { bench_encode(s, EncoderKind::gru); }
void BM_EncodeAtt(benchmark::State& s) { bench_encode(s, EncoderKind::att); }
void BM_BackwardGru(benchmark::State& s) { bench_backward(s, EncoderKind::gru); }
void BM_BackwardAtt(benchmark::State& s) { bench_backward(s, EncoderKind::att); }

BENCHMARK(BM_EncodeBow);
BENCHMARK(BM_EncodeCnn);
BENCHMARK(BM_EncodeGru);
BENCHMARK(BM_EncodeAtt);
BENCHMARK(BM_BackwardGru);
BENCHMARK(BM_BackwardAtt);

void BM_AmsgradStep(benchmark::State& state) {
  ParamStore store;
  Rng rng(3);
  Encoder enc(store, default_config(EncoderKind::att), &rng);
  for (auto& [name, slot] : store.slots())
    for (auto& g : slot.grad.data) g = rng.uniform(-0.01, 0.01);
  const OptConfig opt;
  for (auto _ : state) {
    // re-fill one slot's grad so the step never degenerates to all-zero math
    store.slots().begin()->second.grad.fill(0.01);
    amsgrad_step(store, opt);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(store.total_elements()));
}
BENCHMARK(BM_AmsgradStep);

void BM_DictBatch(benchmark::State& state) {
  ParamStore store;
  Rng rng(4);
  EncoderConfig cfg = default_config(EncoderKind::att);
  Encoder enc(store, cfg, &rng);
  EmbeddingSpace space = register_embeddings(store, "xa", 402, "xb", 402, 50, rng, false);
  std::vector<PreparedEntry> entries;
  Rng data_rng(5);
  for (int i = 0; i < 64; ++i) {
    PreparedEntry e;
    e.target_is_a = i % 2 == 0;
    e.target = 2 + data_rng.uniform_int(400);
    for (int t = 0; t < cfg.seq_len; ++t) e.def_ids.push_back(2 + data_rng.uniform_int(400));
    e.true_len = cfg.seq_len;
    entries.push_back(std::move(e));
  }
  std::vector<const PreparedEntry*> batch;
  for (const auto& e : entries) batch.push_back(&e);
  for (auto _ : state) {
    const double loss = dict_loss_grad(batch, enc, space, true, nullptr, nullptr);
    benchmark::DoNotOptimize(loss);
    store.zero_grads();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 64);
}
BENCHMARK(BM_DictBatch);

}  // namespace

BENCHMARK_MAIN();
