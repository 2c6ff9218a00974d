#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bildrl/checkpoint.hpp"
#include "bildrl/dicttrain.hpp"
#include "bildrl/embedding.hpp"
#include "bildrl/encoders.hpp"
#include "bildrl/vocab.hpp"

namespace bildrl {

// A loaded model: vocabularies, embedding space, and encoder reassembled from
// a checkpoint (f32 -> double). Evaluation always goes through this path, so
// metrics are invariant under checkpoint round trips.
struct Model {
  EncoderConfig enc_cfg;
  Strategy strategy = Strategy::multitask;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::uint64_t seed = 0;
  Vocabulary vocab_a;
  Vocabulary vocab_b;
  std::unique_ptr<ParamStore> store;
  EmbeddingSpace space;
  std::unique_ptr<Encoder> encoder;

  const Vocabulary& vocab(const std::string& lang) const;
  const Vocabulary& other_vocab(const std::string& lang) const;

  // Encode a tokenized definition written in def_lang (pad/truncate to the
  // configured seq_len; unknown tokens map to <unk>).
  Vec encode_definition(const std::vector<std::string>& tokens, const std::string& def_lang) const;
};

Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace bildrl
