#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bildrl/param_store.hpp"
#include "bildrl/rng.hpp"

namespace bildrl {

enum class EncoderKind { bow, cnn, gru, att };

EncoderKind encoder_kind_from_string(const std::string& s);
std::string to_string(EncoderKind kind);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::att;
  int dim = 50;      // k: embedding / output dimension
  int hidden = 200;  // recurrent state / conv feature width
  int layers = 5;
  int seq_len = 15;  // L: fixed encoder input length
  int kernel = 2;    // CNN convolution window h
  int pool = 2;      // CNN max-pool size and stride p
  // Ablation: attention output sum_t a_t u_t instead of the doubly-weighted
  // sum_t a_t^2 u_t.
  bool attention_single_weight = false;

  void validate() const;
  int reduction_hidden() const { return hidden / 2 < 1 ? 1 : hidden / 2; }
};

struct SlotShape {
  std::string name;
  int rows = 0;
  int cols = 0;
};

struct GruLayerTape {
  std::vector<Vec> z, r, nh, c, h;  // nh = Ns h_prev (pre reset gate)
};

struct CnnLayerTape {
  std::vector<Vec> y;                    // post-tanh conv outputs
  std::vector<std::vector<int>> argmax;  // pool windows: winning position per dim
};

// Forward tape: everything backward() needs. Input embedding rows are copied
// so a trace stays consistent even if the embedding matrix changes between
// encode() and backward() (relevant for the asynchronous trainer).
struct EncoderTrace {
  std::vector<int> tokens;  // non-pad prefix actually encoded
  std::vector<Vec> inputs;
  std::vector<GruLayerTape> gru;
  std::vector<Vec> att_u;
  Vec att_a;
  std::vector<CnnLayerTape> cnn;
  std::vector<std::vector<Vec>> cnn_in;  // per-layer input sequences
  Vec bow_sum;
  Vec red_in;  // reduction head input q
  Vec red_p;   // tanh hidden of the reduction head
};

// Definition encoder with manual backprop. Parameters live in a ParamStore
// under "enc.*" slot names; the encoder holds non-owning slot pointers.
//
//   gru:  stacked GRU, last hidden state of the top layer -> reduction head.
//         Gate convention: h_t = z ⊙ h~ + (1 - z) ⊙ h_prev (z weights the
//         new candidate).
//   att:  gru plus self-attention over the top-layer states, where the last
//         state's projection acts as the query.
//   cnn:  stacked tanh convolutions, max-pool (size = stride = pool, ceiling
//         windows) between layers, mean-pool after the last layer -> head.
//   bow:  E = Mb * sum_t w_t, no reduction head.
class Encoder {
 public:
  // init != nullptr registers fresh slots (uniform +-sqrt(6/(fan_in+fan_out)),
  // zero biases); init == nullptr binds slots that must already exist with the
  // exact shapes (IntegrityError otherwise).
  Encoder(ParamStore& store, const EncoderConfig& cfg, Rng* init);

  const EncoderConfig& config() const { return cfg_; }

  // tokens: index sequence (padded or not), true_len >= 1 its non-pad prefix
  // length; emb: V x dim input embedding matrix of the definition language.
  // Positions beyond true_len are ignored entirely, so padding never affects
  // the result. Returns the dim-sized definition encoding.
  Vec encode(const std::vector<int>& tokens, int true_len, const Tensor& emb, EncoderTrace* trace) const;

  // Adds parameter gradients into the bound slots' grad tensors and, when
  // d_emb is non-null, input-embedding gradients into its rows. d_out is the
  // loss gradient at the encoder output (any scaling already applied).
  void backward(const EncoderTrace& trace, const Vec& d_out, Tensor* d_emb) const;

  // Slots in registration order (for subset optimizer steps).
  std::vector<Slot*> slots() const { return slots_; }

  static std::vector<SlotShape> slot_shapes(const EncoderConfig& cfg);

 private:
  struct GruSlots {
    Slot *Mz, *Nz, *bz, *Mr, *Nr, *br, *Ms, *Ns, *bs;
  };

  void run_gru(const std::vector<Vec>& X, std::vector<GruLayerTape>& tape) const;
  void backward_gru(const EncoderTrace& trace, std::vector<Vec>& gh_top, Tensor* d_emb) const;
  Vec head_forward(const Vec& q, EncoderTrace* trace) const;
  Vec head_backward(const EncoderTrace& trace, const Vec& d_out) const;

  EncoderConfig cfg_;
  std::vector<Slot*> slots_;
  std::vector<GruSlots> gru_;
  Slot* Ma_ = nullptr;
  Slot* ba_ = nullptr;
  std::vector<std::pair<Slot*, Slot*>> cnn_;  // (Mc, bc) per layer
  Slot* Mb_ = nullptr;
  Slot* W1_ = nullptr;
  Slot* b1_ = nullptr;
  Slot* W2_ = nullptr;
  Slot* b2_ = nullptr;
};

}  // namespace bildrl
