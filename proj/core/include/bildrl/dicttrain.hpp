#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bildrl/bilembed.hpp"
#include "bildrl/checkpoint.hpp"
#include "bildrl/corpus.hpp"
#include "bildrl/encoders.hpp"

namespace bildrl {

// single:    L^ST on the a->b dictionary only (targets in lang_a).
// multitask: L^MT on the union of both directions, shared encoder.
// joint:     multitask plus Skip-Gram on both monolingual corpora and the
//            alignment regularizer, all updating the shared embedding space.
// Embeddings stay frozen under single/multitask (the dictionary loss treats
// the target vector as a constant); only joint propagates into them.
enum class Strategy { single, multitask, joint };

Strategy strategy_from_string(const std::string& s);
std::string to_string(Strategy s);

struct TrainConfig {
  Strategy strategy = Strategy::multitask;
  int batch_size = 64;
  int epochs = 1000;
  double lambda1 = 0.1;  // Skip-Gram weight in the joint objective
  double lambda2 = 0.1;  // alignment weight in the joint objective
  OptConfig opt;
  SkipGramConfig sg;  // joint only
  std::uint64_t seed = 42;
  bool sync_joint = false;  // deterministic round-robin instead of 4 threads
  int checkpoint_every = 100;

  void validate() const;
};

// A dictionary entry lowered to indices: target word in one language,
// definition encoded and padded with the other language's vocabulary.
struct PreparedEntry {
  bool target_is_a = false;  // target word lives in lang_a (definition in lang_b)
  int target = 0;
  std::vector<int> def_ids;
  int true_len = 0;
};

// Lower raw entries for the (lang_a, lang_b) pair. Entries must have
// target_lang/def_lang equal to the two tags in either order; target words
// must exist in their language's vocabulary (ConfigError otherwise).
std::vector<PreparedEntry> prepare_entries(const std::vector<DictionaryEntry>& entries,
                                           const Vocabulary& va, const Vocabulary& vb, int seq_len);

// L^ST / L^MT over a batch: mean squared L2 between the encoded definition
// and the target word vector. When compute_grads, encoder parameter grads
// accumulate into the encoder's bound slots; embedding gradients (definition
// tokens and target rows, both in the input matrices) go into d_in_a/d_in_b
// when non-null. Requires a non-empty batch.
double dict_loss_grad(const std::vector<const PreparedEntry*>& batch, const Encoder& encoder,
                      const EmbeddingSpace& space, bool compute_grads, Tensor* d_in_a, Tensor* d_in_b);

struct JointLosses {
  double dict = 0.0;
  double sg_a = 0.0;
  double sg_b = 0.0;
  double align = 0.0;
  double total = 0.0;  // dict + lambda1 (sg_a + sg_b) + lambda2 * align
};

// Pure evaluation of the joint objective on explicit batches (no gradients);
// empty component batches contribute zero.
JointLosses joint_objective(const std::vector<const PreparedEntry*>& dict_batch,
                            const std::vector<SgExample>& sg_a_batch,
                            const std::vector<SgExample>& sg_b_batch,
                            const std::vector<const ParallelIdx*>& align_batch, const Encoder& encoder,
                            const EmbeddingSpace& space, double lambda1, double lambda2);

struct EpochLoss {
  double dict = 0.0;
  double sg_a = 0.0;
  double sg_b = 0.0;
  double align = 0.0;
};

struct TrainReport {
  std::vector<EpochLoss> epochs;
  std::int64_t dict_batches = 0;
  std::int64_t sg_a_batches = 0;
  std::int64_t sg_b_batches = 0;
  std::int64_t align_batches = 0;
  double wall_seconds = 0.0;
  std::uint64_t checksum = 0;  // parameter checksum after training
};

struct TrainInputs {
  const Vocabulary* vocab_a = nullptr;
  const Vocabulary* vocab_b = nullptr;
  std::vector<PreparedEntry> ab;  // targets in lang_a
  std::vector<PreparedEntry> ba;  // targets in lang_b
  // joint strategy only:
  std::vector<std::vector<int>> mono_a;
  std::vector<std::vector<int>> mono_b;
  std::vector<ParallelIdx> parallel;
  // optional pretrained input embeddings (rows must match vocab sizes)
  const Tensor* init_in_a = nullptr;
  const Tensor* init_in_b = nullptr;
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainReport report;
};

// Serializes the trained space + encoder (+ config snapshot) for the binary
// model format. Skip-Gram output matrices are training state, not model, and
// are not included.
Checkpoint make_checkpoint(const ParamStore& store, const EncoderConfig& ec, Strategy strategy,
                           double lambda1, double lambda2, std::uint64_t seed, const Vocabulary& va,
                           const Vocabulary& vb);

// The full training loop. Writes one TSV line per epoch to `log` when given
// ("epoch dict sg_a sg_b align"); invokes on_checkpoint every
// checkpoint_every epochs when set. Deterministic except for the async joint
// mode (4 unsynchronized workers); joint with sync_joint round-robins one
// batch of each component per dictionary batch and is deterministic.
TrainResult run_training(const TrainConfig& tc, const EncoderConfig& ec, const TrainInputs& in,
                         std::ostream* log,
                         const std::function<void(int, const Checkpoint&)>& on_checkpoint = nullptr);

}  // namespace bildrl
