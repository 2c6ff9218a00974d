#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bildrl/param_store.hpp"
#include "bildrl/rng.hpp"

namespace bildrl {

enum class Metric { sq_l2, cosine };

Metric metric_from_string(const std::string& s);
std::string to_string(Metric m);

// Distance between a query vector and an embedding row under a metric
// (cosine returns 1 - cosine similarity, so smaller is always better).
double row_distance(const Vec& query, const Tensor& emb, int row, Metric metric);

// 1-based rank of `target` among `candidates` (vocab indices) by distance to
// `query`: 1 + number of candidates strictly closer. Exact distance ties rank
// the lower vocabulary index first. Target must be among the candidates
// (EvalError otherwise).
int rank_target(const Vec& query, int target, const std::vector<int>& candidates, const Tensor& emb,
                Metric metric);

struct RetrievalMetrics {
  double p_at_1 = 0.0;   // percentages, 0..100
  double p_at_10 = 0.0;
  double mrr = 0.0;      // 0..1
};

// From 1-based ranks. Requires a non-empty list (EvalError).
RetrievalMetrics retrieval_metrics(const std::vector<int>& ranks);

// Two-stage monolingual retrieval in the shared space: stage 1 retrieves the
// word nearest to `query` among the definition-language candidates; stage 2
// ranks `true_target` among the target-language candidates by distance to the
// stage-1 word's embedding. `mono_word` is the expected stage-1 word (checked
// in-vocabulary; reported by callers). Returns the final 1-based rank.
int mono_retrieval_rank(const Vec& query, int mono_word, int true_target,
                        const std::vector<int>& def_candidates, const Tensor& def_emb,
                        const std::vector<int>& target_candidates, const Tensor& target_emb, Metric metric);

// Picks the negative word for a paraphrase pair: among `candidates` (word
// indices in the source word's language, source excluded), take the `nn`
// nearest to the source's embedding and return one uniformly at random.
// Requires at least `nn` candidates after excluding the source (EvalError);
// distance ties prefer the lower index.
int pick_paraphrase_negative(int source_word, const std::vector<int>& candidates, const Tensor& emb,
                             int nn, Rng& rng);

// ---- Paraphrase classifier ----------------------------------------------

// MLP over the feature E(S_A) - E(S_B) (signed subtraction in the shared
// space, lang_a side minus lang_b side): one tanh hidden layer, then an
// affine map to 2 logits with softmax cross-entropy.
struct MlpClassifier {
  Tensor W1, b1, W2, b2;  // W1: hidden x k, W2: 2 x hidden
  int input_dim = 0;
  int hidden = 0;
};

// P(label = 1 | x).
double mlp_predict_prob(const MlpClassifier& clf, const Vec& x);
int mlp_predict(const MlpClassifier& clf, const Vec& x);

// Mean softmax cross-entropy over a batch; gradients (scaled by `scale`)
// accumulate into the store's mlp.* slots when compute_grads.
double mlp_loss_grad(ParamStore& store, const std::vector<const Vec*>& xs, const std::vector<int>& ys,
                     bool compute_grads, double scale);

void register_mlp(ParamStore& store, int input_dim, int hidden, Rng& rng);
MlpClassifier extract_mlp(const ParamStore& store);

struct MlpTrainInfo {
  int epochs_run = 0;
  int best_epoch = 0;  // 1-based epoch with the best validation accuracy
  double best_valid_acc = 0.0;
};

// AMSGrad training with early stopping: stops once validation accuracy has
// not improved for `patience` consecutive epochs and returns the best-epoch
// parameters. Requires non-empty splits and both classes present in the
// training labels (EvalError otherwise).
MlpClassifier train_paraphrase_classifier(const std::vector<Vec>& x_train, const std::vector<int>& y_train,
                                          const std::vector<Vec>& x_valid, const std::vector<int>& y_valid,
                                          int hidden, const OptConfig& opt, int batch_size, int max_epochs,
                                          int patience, std::uint64_t seed, MlpTrainInfo* info);

// Accuracy and F1 of the positive class, both in [0, 1]. F1 is 0 when
// precision + recall is 0.
struct BinaryScores {
  double accuracy = 0.0;
  double f1 = 0.0;
};
BinaryScores binary_scores(const std::vector<int>& predicted, const std::vector<int>& truth);

}  // namespace bildrl
