#pragma once

#include <cstdint>
#include <vector>

#include "bildrl/corpus.hpp"
#include "bildrl/embedding.hpp"
#include "bildrl/param_store.hpp"
#include "bildrl/rng.hpp"

namespace bildrl {

struct SkipGramConfig {
  int window = 5;
  int negatives = 5;
  double subsample = 1e-4;  // 0 disables subsampling

  void validate() const;
};

// One Skip-Gram with negative sampling training example.
struct SgExample {
  int center = 0;
  int context = 0;
  std::vector<int> negatives;
};

// Loss of one example:
//   -log sigmoid(u_ctx . v_c) - sum_neg log sigmoid(-u_neg . v_c)
// computed with a numerically stable log-sigmoid. When d_in/d_out are given,
// gradients scaled by `scale` are added into them (same shapes as in/out).
// Center and context must not be the pad index.
double skipgram_loss_grad(const SgExample& ex, const Tensor& in, const Tensor& out, Tensor* d_in,
                          Tensor* d_out, double scale);

// Mean of the input-embedding rows of the non-pad tokens of a sentence.
// Requires at least one non-pad token.
Vec sentence_mean(const std::vector<int>& ids, const Tensor& emb);

// Parallel sentence pair, already encoded per language, true lengths (the
// alignment loss never truncates).
struct ParallelIdx {
  std::vector<int> a;
  std::vector<int> b;
};

// d_S: squared L2 distance between the sentences' mean vectors.
double sentence_bow_distance(const std::vector<int>& sa, const std::vector<int>& sb, const Tensor& emb_a,
                             const Tensor& emb_b);

// Alignment regularizer over a batch: mean of d_S. Gradients for the mean,
// multiplied by `scale`, are added into d_a/d_b when given. Requires a
// non-empty batch.
double alignment_loss_grad(const std::vector<const ParallelIdx*>& batch, const Tensor& emb_a,
                           const Tensor& emb_b, Tensor* d_a, Tensor* d_b, double scale);

// Cycling Skip-Gram example stream over a monolingual corpus: per pass the
// sentence order is reshuffled, tokens are dropped by word2vec-style
// subsampling, and fixed symmetric windows emit (center, context) pairs with
// K fresh negatives (excluding the context word). Deterministic for a seed.
class SgStream {
 public:
  SgStream(const std::vector<std::vector<int>>* sentences, const Vocabulary* vocab,
           const NegativeTable* table, const SkipGramConfig& cfg, Rng rng);

  // Fills `out` with exactly n examples, cycling passes as needed. Raises
  // ConfigError if a full pass yields no examples.
  void next_batch(int n, std::vector<SgExample>& out);

  std::int64_t pairs_emitted() const { return emitted_; }

 private:
  void refill();

  const std::vector<std::vector<int>>* sentences_;
  const Vocabulary* vocab_;
  const NegativeTable* table_;
  SkipGramConfig cfg_;
  Rng rng_;
  double total_tokens_ = 0.0;
  std::vector<int> order_;
  std::size_t next_sentence_ = 0;
  std::vector<SgExample> buffer_;
  std::size_t buffer_pos_ = 0;
  std::int64_t emitted_ = 0;
  bool produced_this_pass_ = false;
};

// Cycling batches over parallel pairs, reshuffled per pass.
class AlignStream {
 public:
  AlignStream(const std::vector<ParallelIdx>* pairs, Rng rng);
  void next_batch(int n, std::vector<const ParallelIdx*>& out);

 private:
  const std::vector<ParallelIdx>* pairs_;
  Rng rng_;
  std::vector<int> order_;
  std::size_t pos_ = 0;
};

struct PretrainConfig {
  SkipGramConfig sg;
  OptConfig opt;
  int batch = 64;
  int epochs = 5;
  std::uint64_t seed = 42;

  void validate() const;
};

struct PretrainEpoch {
  double sg_a = 0.0;
  double sg_b = 0.0;
  double align = 0.0;
};

struct PretrainReport {
  std::vector<PretrainEpoch> epochs;
};

// Bilingual embedding pretraining: per epoch one Skip-Gram pass over each
// monolingual corpus and one alignment pass over the parallel pairs, AMSGrad
// updates per batch on the touched slots only. Single-threaded, deterministic.
PretrainReport run_pretraining(ParamStore& store, const EmbeddingSpace& space, const Vocabulary& va,
                               const Vocabulary& vb, const std::vector<std::vector<int>>& mono_a,
                               const std::vector<std::vector<int>>& mono_b,
                               const std::vector<ParallelIdx>& pairs, const PretrainConfig& cfg);

}  // namespace bildrl
