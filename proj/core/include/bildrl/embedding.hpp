#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bildrl/param_store.hpp"
#include "bildrl/rng.hpp"
#include "bildrl/vocab.hpp"

namespace bildrl {

// Non-owning view over the embedding slots of a ParamStore. Rows are vocab
// indices; row 0 (<pad>) is initialized to zero and never updated (the pad row
// is frozen by construction: nothing ever writes a gradient for it).
//
// `in` matrices hold the word vectors of the shared bilingual space; `out`
// matrices are the Skip-Gram context (output) vectors, only registered when
// Skip-Gram training is part of the run.
struct EmbeddingSpace {
  std::string lang_a;
  std::string lang_b;
  int dim = 0;

  Tensor* in_a = nullptr;
  Tensor* out_a = nullptr;
  Tensor* in_b = nullptr;
  Tensor* out_b = nullptr;

  bool has_lang(const std::string& lang) const { return lang == lang_a || lang == lang_b; }
  Tensor& input(const std::string& lang) const;
  Tensor& output(const std::string& lang) const;
};

inline std::string emb_slot_name(const std::string& lang, bool output) {
  return "emb." + lang + (output ? ".out" : ".in");
}

// Registers emb.<lang>.in (and .out when with_output) slots of shape V x k,
// initialized uniform +-sqrt(6/(V+k)) with the pad row zeroed, and returns the
// view. Requires distinct valid language tags.
EmbeddingSpace register_embeddings(ParamStore& store, const std::string& lang_a, int vocab_a,
                                   const std::string& lang_b, int vocab_b, int dim, Rng& rng,
                                   bool with_output);

// Re-binds a view onto slots that already exist in the store.
EmbeddingSpace bind_embeddings(ParamStore& store, const std::string& lang_a, const std::string& lang_b);

// Text interchange format. Header "V k", then V lines "lang:token v1 ... vk"
// with 6-decimal fixed-point components.
void export_embeddings_text(std::ostream& out, const Vocabulary& va, const Vocabulary& vb,
                            const EmbeddingSpace& space);

struct TextEmbeddings {
  struct Entry {
    std::string lang;
    std::string token;
    Vec vec;
  };
  int dim = 0;
  std::vector<Entry> entries;
};

// Parses the text format; raises ParseError with line numbers on malformed
// input (the `where` string names the source in messages).
TextEmbeddings import_embeddings_text(std::istream& in, const std::string& where);

}  // namespace bildrl
