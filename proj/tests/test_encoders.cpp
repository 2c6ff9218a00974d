// Definition encoders: bag-of-words, stacked CNN, stacked GRU, attentive GRU.
// Forward algebra against hand-computed cases, structural invariants
// (padding, order sensitivity), and analytic gradients against central
// differences.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bildrl/encoders.hpp"
#include "bildrl/error.hpp"
#include "bildrl/gradcheck_harness.hpp"
#include "bildrl/rng.hpp"
#include "bildrl/vocab.hpp"

using namespace bildrl;

namespace {

EncoderConfig small_cfg(EncoderKind kind, int dim, int hidden, int layers, int seq_len) {
  EncoderConfig cfg;
  cfg.kind = kind;
  cfg.dim = dim;
  cfg.hidden = hidden;
  cfg.layers = layers;
  cfg.seq_len = seq_len;
  return cfg;
}

Tensor random_emb(int vocab, int dim, std::uint64_t seed) {
  Tensor emb(vocab, dim);
  Rng rng(seed);
  for (int i = 1; i < vocab; ++i)  // row 0 is <pad>, kept zero
    for (int j = 0; j < dim; ++j) emb(i, j) = rng.uniform(-1, 1);
  return emb;
}

void zero_all(ParamStore& store) {
  for (auto& [name, slot] : store.slots()) slot.value.fill(0.0);
}

void set_identity(Tensor& t) {
  t.fill(0.0);
  for (int i = 0; i < std::min(t.rows, t.cols); ++i) t(i, i) = 1.0;
}

}  // namespace

TEST_CASE("bow: single token through an identity map is the token vector") {
  ParamStore store;
  Rng init(1);
  const EncoderConfig cfg = small_cfg(EncoderKind::bow, 3, 3, 1, 5);
  Encoder enc(store, cfg, &init);
  set_identity(store.value("enc.bow.Mb"));
  const Tensor emb = random_emb(4, 3, 11);
  const Vec out = enc.encode({2, 0, 0, 0, 0}, 1, emb, nullptr);
  for (int j = 0; j < 3; ++j) CHECK(out[static_cast<std::size_t>(j)] == emb(2, j));
}

TEST_CASE("bow: output is the mapped token sum, independent of order") {
  ParamStore store;
  Rng init(2);
  const EncoderConfig cfg = small_cfg(EncoderKind::bow, 3, 3, 1, 4);
  Encoder enc(store, cfg, &init);
  set_identity(store.value("enc.bow.Mb"));
  const Tensor emb = random_emb(5, 3, 12);
  const Vec ab = enc.encode({2, 3, 0, 0}, 2, emb, nullptr);
  const Vec ba = enc.encode({3, 2, 0, 0}, 2, emb, nullptr);
  CHECK(ab == ba);
  for (int j = 0; j < 3; ++j)
    CHECK(ab[static_cast<std::size_t>(j)] == doctest::Approx(emb(2, j) + emb(3, j)).epsilon(1e-15));
}

TEST_CASE("bow: with a random map the output is Mb times the token sum") {
  ParamStore store;
  Rng init(3);
  const EncoderConfig cfg = small_cfg(EncoderKind::bow, 4, 4, 1, 6);
  Encoder enc(store, cfg, &init);
  const Tensor emb = random_emb(6, 4, 13);
  const Vec out = enc.encode({4, 2, 5, 0, 0, 0}, 3, emb, nullptr);
  Vec sum(4, 0.0);
  for (int id : {4, 2, 5})
    for (int j = 0; j < 4; ++j) sum[static_cast<std::size_t>(j)] += emb(id, j);
  const Vec expect = matvec(store.value("enc.bow.Mb"), sum);
  for (int j = 0; j < 4; ++j)
    CHECK(out[static_cast<std::size_t>(j)] == doctest::Approx(expect[static_cast<std::size_t>(j)]).epsilon(1e-14));
}

TEST_CASE("cnn: zero weights and biases give all-zero convolution outputs") {
  ParamStore store;
  Rng init(4);
  const EncoderConfig cfg = small_cfg(EncoderKind::cnn, 3, 4, 2, 8);
  Encoder enc(store, cfg, &init);
  store.value("enc.cnn.l0.Mc").fill(0.0);
  store.value("enc.cnn.l0.bc").fill(0.0);
  store.value("enc.cnn.l1.Mc").fill(0.0);
  store.value("enc.cnn.l1.bc").fill(0.0);
  const Tensor emb = random_emb(6, 3, 14);
  EncoderTrace trace;
  enc.encode({2, 3, 4, 5, 2, 3, 4, 5}, 8, emb, &trace);
  for (const auto& layer : trace.cnn)
    for (const Vec& y : layer.y)
      for (double v : y) CHECK(v == 0.0);
  for (double v : trace.red_in) CHECK(v == 0.0);
}

TEST_CASE("cnn: length 15 with kernel 2 gives 14 positions, then 7 after pooling") {
  ParamStore store;
  Rng init(5);
  const EncoderConfig cfg = small_cfg(EncoderKind::cnn, 3, 4, 2, 15);
  Encoder enc(store, cfg, &init);
  const Tensor emb = random_emb(8, 3, 15);
  std::vector<int> ids(15);
  for (int i = 0; i < 15; ++i) ids[static_cast<std::size_t>(i)] = 2 + i % 6;
  EncoderTrace trace;
  enc.encode(ids, 15, emb, &trace);
  REQUIRE(trace.cnn_in.size() == 2);
  CHECK(trace.cnn_in[0].size() == 15);
  CHECK(trace.cnn[0].y.size() == 14);   // 15 - 2 + 1
  CHECK(trace.cnn_in[1].size() == 7);   // ceil(14 / 2)
  CHECK(trace.cnn[1].y.size() == 6);    // 7 - 2 + 1
}

TEST_CASE("cnn: convolution outputs match the direct affine-over-window computation") {
  Rng meta(6);
  for (int inst = 0; inst < 30; ++inst) {
    const int dim = 2 + meta.uniform_int(3);
    const int hidden = 2 + meta.uniform_int(4);
    const int kernel = 2 + meta.uniform_int(2);
    const int seq = kernel + 2 + meta.uniform_int(5);
    EncoderConfig cfg = small_cfg(EncoderKind::cnn, dim, hidden, 1, seq);
    cfg.kernel = kernel;
    ParamStore store;
    Rng init(100 + static_cast<std::uint64_t>(inst));
    Encoder enc(store, cfg, &init);
    const Tensor emb = random_emb(7, dim, 200 + static_cast<std::uint64_t>(inst));
    std::vector<int> ids(static_cast<std::size_t>(seq));
    for (int i = 0; i < seq; ++i) ids[static_cast<std::size_t>(i)] = 2 + meta.uniform_int(5);
    EncoderTrace trace;
    enc.encode(ids, seq, emb, &trace);

    const Tensor& Mc = store.value("enc.cnn.l0.Mc");
    const Tensor& bc = store.value("enc.cnn.l0.bc");
    const auto& X = trace.cnn_in[0];
    REQUIRE(trace.cnn[0].y.size() == static_cast<std::size_t>(seq - kernel + 1));
    for (std::size_t t = 0; t < trace.cnn[0].y.size(); ++t) {
      Vec window;
      for (int i = 0; i < kernel; ++i)
        window.insert(window.end(), X[t + static_cast<std::size_t>(i)].begin(),
                      X[t + static_cast<std::size_t>(i)].end());
      Vec expect = affine(window, Mc, bc);
      for (auto& v : expect) v = std::tanh(v);
      for (int j = 0; j < hidden; ++j)
        CHECK(trace.cnn[0].y[t][static_cast<std::size_t>(j)] ==
              doctest::Approx(expect[static_cast<std::size_t>(j)]).epsilon(1e-13));
    }
  }
}

TEST_CASE("cnn: a sequence shorter than the kernel after pooling is rejected") {
  ParamStore store;
  Rng init(7);
  EncoderConfig cfg = small_cfg(EncoderKind::cnn, 3, 4, 2, 3);
  Encoder enc(store, cfg, &init);
  const Tensor emb = random_emb(5, 3, 16);
  // Layer 0: 3 -> conv 2 -> pool 1 position; layer 1 needs kernel 2.
  CHECK_THROWS_AS(enc.encode({2, 3, 4}, 3, emb, nullptr), ContractError);
}

TEST_CASE("head: with all weights zero the output is exactly the final bias") {
  ParamStore store;
  Rng init(8);
  const EncoderConfig cfg = small_cfg(EncoderKind::gru, 3, 4, 2, 5);
  Encoder enc(store, cfg, &init);
  zero_all(store);
  Tensor& b2 = store.value("enc.red.b2");
  b2(0, 0) = 0.25;
  b2(1, 0) = -1.5;
  b2(2, 0) = 3.0;
  // Give the pre-head path nonzero biases too: W2 = 0 kills them.
  store.value("enc.red.b1").fill(0.8);
  const Tensor emb = random_emb(5, 3, 17);
  const Vec out = enc.encode({2, 3, 4, 0, 0}, 3, emb, nullptr);
  CHECK(out == Vec{0.25, -1.5, 3.0});
}

TEST_CASE("gru: zero gates halve the previous state when the input vanishes") {
  // Layer parameters all zero except Ms = I, so step 1 builds h1 = 0.5*tanh(w1).
  // Token 2 has a zero embedding row: z = r = sigma(0) = 0.5 and the candidate
  // is tanh(0) = 0, so h2 = 0.5*h1 exactly.
  ParamStore store;
  Rng init(9);
  const EncoderConfig cfg = small_cfg(EncoderKind::gru, 3, 3, 1, 4);
  Encoder enc(store, cfg, &init);
  zero_all(store);
  set_identity(store.value("enc.gru.l0.Ms"));
  Tensor emb(4, 3);
  emb(2, 0) = 0.4;
  emb(2, 1) = -0.2;
  emb(2, 2) = 0.6;
  // row 3 stays zero: the "empty input" second step
  EncoderTrace trace;
  enc.encode({2, 3, 0, 0}, 2, emb, &trace);
  REQUIRE(trace.gru.size() == 1);
  REQUIRE(trace.gru[0].h.size() == 2);
  for (int j = 0; j < 3; ++j) {
    const double h1 = 0.5 * std::tanh(emb(2, j));
    CHECK(trace.gru[0].h[0][static_cast<std::size_t>(j)] == doctest::Approx(h1).epsilon(1e-15));
    CHECK(trace.gru[0].h[1][static_cast<std::size_t>(j)] ==
          doctest::Approx(0.5 * h1).epsilon(1e-15));
  }
}

TEST_CASE("gru: a saturated update gate discards the previous state") {
  ParamStore store;
  Rng init(10);
  const EncoderConfig cfg = small_cfg(EncoderKind::gru, 3, 3, 1, 4);
  Encoder enc(store, cfg, &init);
  zero_all(store);
  set_identity(store.value("enc.gru.l0.Ms"));
  store.value("enc.gru.l0.bz").fill(100.0);  // z ~ 1 everywhere
  Tensor emb(4, 3);
  emb(2, 0) = 0.9;
  emb(2, 1) = -0.7;
  emb(2, 2) = 0.3;
  EncoderTrace trace;
  enc.encode({2, 3, 0, 0}, 2, emb, &trace);
  // h2 = z*candidate + (1-z)*h1 with candidate 0 and 1-z ~ sigma(-100).
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(trace.gru[0].h[1][static_cast<std::size_t>(j)]) < 1e-40);
}

TEST_CASE("gru: singleton sequence with all-zero parameters encodes to zero") {
  ParamStore store;
  Rng init(11);
  const EncoderConfig cfg = small_cfg(EncoderKind::gru, 3, 4, 2, 3);
  Encoder enc(store, cfg, &init);
  zero_all(store);
  const Tensor emb = random_emb(4, 3, 18);
  const Vec out = enc.encode({2, 0, 0}, 1, emb, nullptr);
  for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("attention: a singleton sequence gets weight one and passes u_1 to the head") {
  ParamStore store;
  Rng init(12);
  const EncoderConfig cfg = small_cfg(EncoderKind::att, 3, 4, 2, 5);
  Encoder enc(store, cfg, &init);
  const Tensor emb = random_emb(5, 3, 19);
  EncoderTrace trace;
  enc.encode({3, 0, 0, 0, 0}, 1, emb, &trace);
  REQUIRE(trace.att_a.size() == 1);
  CHECK(trace.att_a[0] == 1.0);
  REQUIRE(trace.att_u.size() == 1);
  CHECK(trace.red_in == trace.att_u[0]);
}

TEST_CASE("attention: zero projection gives uniform weights and E = u/|S|") {
  ParamStore store;
  Rng init(13);
  const EncoderConfig cfg = small_cfg(EncoderKind::att, 3, 4, 1, 6);
  Encoder enc(store, cfg, &init);
  store.value("enc.att.Ma").fill(0.0);
  store.value("enc.att.ba").fill(0.7);  // u_t = tanh(0.7) in every slot, every t
  const Tensor emb = random_emb(6, 3, 20);
  EncoderTrace trace;
  enc.encode({2, 4, 3, 0, 0, 0}, 3, emb, &trace);
  REQUIRE(trace.att_a.size() == 3);
  for (double a : trace.att_a) CHECK(a == doctest::Approx(1.0 / 3).epsilon(1e-14));
  const double u = std::tanh(0.7);
  for (double v : trace.red_in) CHECK(v == doctest::Approx(u / 3.0).epsilon(1e-14));
}

TEST_CASE("attention: weights are a distribution over the non-pad positions") {
  ParamStore store;
  Rng init(14);
  const EncoderConfig cfg = small_cfg(EncoderKind::att, 4, 5, 2, 8);
  Encoder enc(store, cfg, &init);
  const Tensor emb = random_emb(9, 4, 21);
  Rng rng(22);
  for (int inst = 0; inst < 20; ++inst) {
    const int len = 1 + rng.uniform_int(8);
    std::vector<int> ids(8, Vocabulary::kPad);
    for (int i = 0; i < len; ++i) ids[static_cast<std::size_t>(i)] = 2 + rng.uniform_int(7);
    EncoderTrace trace;
    enc.encode(ids, len, emb, &trace);
    REQUIRE(trace.att_a.size() == static_cast<std::size_t>(len));
    double sum = 0.0;
    for (double a : trace.att_a) {
      CHECK(a >= 0.0);
      sum += a;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("padding invariance: extra trailing pads never change any encoder's output") {
  Rng rng(23);
  for (const EncoderKind kind : {EncoderKind::bow, EncoderKind::cnn, EncoderKind::gru, EncoderKind::att}) {
    ParamStore store;
    Rng init(24);
    EncoderConfig cfg = small_cfg(kind, 3, 4, 2, 12);
    Encoder enc(store, cfg, &init);
    const Tensor emb = random_emb(8, 3, 25);
    const int len = kind == EncoderKind::cnn ? 6 : 3;  // deep enough for two conv layers
    std::vector<int> short_ids(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) short_ids[static_cast<std::size_t>(i)] = 2 + rng.uniform_int(6);
    std::vector<int> padded = short_ids;
    padded.resize(12, Vocabulary::kPad);
    const Vec a = enc.encode(short_ids, len, emb, nullptr);
    const Vec b = enc.encode(padded, len, emb, nullptr);
    CHECK(a == b);  // bit-exact
  }
}

TEST_CASE("order sensitivity: sequence encoders distinguish permuted inputs, bow does not") {
  const std::vector<int> fwd{2, 3, 4, 5, 2, 3};
  const std::vector<int> rev{3, 2, 5, 4, 3, 2};
  for (const EncoderKind kind : {EncoderKind::cnn, EncoderKind::gru, EncoderKind::att}) {
    ParamStore store;
    Rng init(26);
    EncoderConfig cfg = small_cfg(kind, 3, 4, 2, 6);
    Encoder enc(store, cfg, &init);
    const Tensor emb = random_emb(7, 3, 27);
    const Vec a = enc.encode(fwd, 6, emb, nullptr);
    const Vec b = enc.encode(rev, 6, emb, nullptr);
    CHECK(a != b);
  }
  ParamStore store;
  Rng init(26);
  Encoder bow(store, small_cfg(EncoderKind::bow, 3, 3, 1, 6), &init);
  const Tensor emb = random_emb(7, 3, 27);
  CHECK(bow.encode(fwd, 6, emb, nullptr) == bow.encode(rev, 6, emb, nullptr));
}

TEST_CASE("encode contracts: bad true_len, pad in prefix, and dim mismatch are rejected") {
  ParamStore store;
  Rng init(28);
  Encoder enc(store, small_cfg(EncoderKind::gru, 3, 4, 1, 4), &init);
  const Tensor emb = random_emb(5, 3, 29);
  CHECK_THROWS_AS(enc.encode({2, 3, 0, 0}, 0, emb, nullptr), ContractError);
  CHECK_THROWS_AS(enc.encode({2, 0, 3, 0}, 3, emb, nullptr), ContractError);
  CHECK_THROWS_AS(enc.encode({2, 3, 0, 0}, 5, emb, nullptr), ContractError);
  const Tensor wrong(5, 4);
  CHECK_THROWS_AS(enc.encode({2, 3, 0, 0}, 2, wrong, nullptr), ContractError);
}

TEST_CASE("binding: reattaching to existing slots works, shape mismatch is rejected") {
  ParamStore store;
  Rng init(30);
  const EncoderConfig cfg = small_cfg(EncoderKind::att, 3, 4, 2, 5);
  Encoder first(store, cfg, &init);
  const Tensor emb = random_emb(5, 3, 31);
  const Vec out1 = first.encode({2, 3, 4, 0, 0}, 3, emb, nullptr);
  Encoder rebound(store, cfg, nullptr);
  CHECK(rebound.encode({2, 3, 4, 0, 0}, 3, emb, nullptr) == out1);

  EncoderConfig other = cfg;
  other.hidden = 6;
  CHECK_THROWS_AS(Encoder(store, other, nullptr), IntegrityError);
  ParamStore empty;
  CHECK_THROWS_AS(Encoder(empty, cfg, nullptr), IntegrityError);
}

TEST_CASE("encoder kind strings round-trip and bad names are rejected") {
  for (const auto* name : {"bow", "cnn", "gru", "att"})
    CHECK(to_string(encoder_kind_from_string(name)) == name);
  CHECK_THROWS_AS(encoder_kind_from_string("lstm"), ConfigError);
  EncoderConfig bad;
  bad.layers = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  EncoderConfig short_seq;
  short_seq.kind = EncoderKind::cnn;
  short_seq.seq_len = 1;
  short_seq.kernel = 2;
  CHECK_THROWS_AS(short_seq.validate(), ConfigError);
}

TEST_CASE("gradients: every encoder's analytic backward matches central differences") {
  for (const EncoderKind kind : {EncoderKind::bow, EncoderKind::cnn, EncoderKind::gru, EncoderKind::att}) {
    EncoderConfig cfg = small_cfg(kind, 4, 8, 2, 5);
    // Smooth losses probe well at h = 1e-4; the CNN's max-pool needs the
    // smaller step so a probe never flips a near-tied argmax.
    const double h = kind == EncoderKind::cnn ? 1e-5 : 1e-4;
    for (std::uint64_t seed : {3ULL, 8ULL}) {
      const GradCheckInstance inst = make_gradcheck_instance("st", cfg, seed);
      const GradCheckReport rep = inst.run(h);
      INFO(to_string(kind), " seed ", seed, " worst ", rep.worst_slot);
      CHECK(rep.max_rel_err < 1e-4);
    }
  }
}

TEST_CASE("gradients: the attention ablation (single-weight sum) also checks out") {
  EncoderConfig cfg = small_cfg(EncoderKind::att, 4, 8, 2, 5);
  cfg.attention_single_weight = true;
  for (std::uint64_t seed : {5ULL, 9ULL}) {
    const GradCheckInstance inst = make_gradcheck_instance("st", cfg, seed);
    CHECK(inst.run(1e-4).max_rel_err < 1e-4);
  }
}
