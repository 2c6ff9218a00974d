// Dictionary loss, batch partitioning, the joint objective, and the training
// loop's strategy contracts (frozen embeddings, determinism, no-op runs,
// multitask/single equivalence on mirrored data).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bildrl/dicttrain.hpp"
#include "bildrl/error.hpp"
#include "bildrl/model.hpp"
#include "support/synth.hpp"

using namespace bildrl;

namespace {

struct TinySpace {
  ParamStore store;
  EmbeddingSpace space;

  TinySpace(int va, int vb, int dim, bool with_output = false) {
    Rng rng(55);
    space = register_embeddings(store, "qa", va, "qb", vb, dim, rng, with_output);
  }
};

EncoderConfig bow_cfg(int dim, int seq_len) {
  EncoderConfig cfg;
  cfg.kind = EncoderKind::bow;
  cfg.dim = dim;
  cfg.hidden = dim;
  cfg.layers = 1;
  cfg.seq_len = seq_len;
  return cfg;
}

Vocabulary token_vocab(const std::string& lang, const std::vector<std::string>& tokens) {
  VocabBuilder b;
  for (const auto& t : tokens) {
    b.add_token(t);
    b.require(t);
  }
  return b.build(lang, 1);
}

bool checkpoints_identical(const Checkpoint& x, const Checkpoint& y) {
  if (x.version != y.version || x.config != y.config) return false;
  if (x.tensors.size() != y.tensors.size()) return false;
  for (const auto& [name, t] : x.tensors) {
    const auto it = y.tensors.find(name);
    if (it == y.tensors.end()) return false;
    if (t.rows != it->second.rows || t.cols != it->second.cols || t.data != it->second.data)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("dict loss: encoder output equal to the target gives zero") {
  TinySpace ts(3, 3, 4);
  Rng init(1);
  Encoder enc(ts.store, bow_cfg(4, 3), &init);
  Tensor& Mb = ts.store.value("enc.bow.Mb");
  Mb.fill(0.0);
  for (int i = 0; i < 4; ++i) Mb(i, i) = 1.0;
  for (int j = 0; j < 4; ++j) {
    (*ts.space.in_b)(2, j) = 0.1 * (j + 1);
    (*ts.space.in_a)(2, j) = 0.1 * (j + 1);
  }
  const PreparedEntry e{true, 2, {2, 0, 0}, 1};
  CHECK(dict_loss_grad({&e}, enc, ts.space, false, nullptr, nullptr) == 0.0);
}

TEST_CASE("dict loss: residual (3,4,0,0) gives 25") {
  TinySpace ts(3, 3, 4);
  Rng init(2);
  Encoder enc(ts.store, bow_cfg(4, 3), &init);
  Tensor& Mb = ts.store.value("enc.bow.Mb");
  Mb.fill(0.0);
  for (int i = 0; i < 4; ++i) Mb(i, i) = 1.0;
  for (int j = 0; j < 4; ++j) (*ts.space.in_a)(2, j) = 0.0;
  (*ts.space.in_b)(2, 0) = 3.0;
  (*ts.space.in_b)(2, 1) = 4.0;
  (*ts.space.in_b)(2, 2) = 0.0;
  (*ts.space.in_b)(2, 3) = 0.0;
  const PreparedEntry e{true, 2, {2, 0, 0}, 1};
  CHECK(dict_loss_grad({&e}, enc, ts.space, false, nullptr, nullptr) == doctest::Approx(25.0));
}

TEST_CASE("dict loss: batch mean, gradient routing, and the empty-batch contract") {
  TinySpace ts(4, 4, 3);
  Rng init(3);
  Encoder enc(ts.store, bow_cfg(3, 2), &init);
  const PreparedEntry ab{true, 2, {3, 0}, 1};   // definition row 3 of lang b
  const PreparedEntry ba{false, 3, {2, 0}, 1};  // definition row 2 of lang a
  const double la = dict_loss_grad({&ab}, enc, ts.space, false, nullptr, nullptr);
  const double lb = dict_loss_grad({&ba}, enc, ts.space, false, nullptr, nullptr);
  const double both = dict_loss_grad({&ab, &ba}, enc, ts.space, false, nullptr, nullptr);
  CHECK(both == doctest::Approx(0.5 * (la + lb)).epsilon(1e-12));

  Tensor d_in_a(4, 3), d_in_b(4, 3);
  ts.store.zero_grads();
  dict_loss_grad({&ab}, enc, ts.space, true, &d_in_a, &d_in_b);
  bool enc_grad = false;
  for (double v : ts.store.grad("enc.bow.Mb").data) enc_grad |= v != 0.0;
  CHECK(enc_grad);
  bool def_grad = false, tgt_grad = false;
  for (int j = 0; j < 3; ++j) {
    def_grad |= d_in_b(3, j) != 0.0;
    tgt_grad |= d_in_a(2, j) != 0.0;
  }
  CHECK(def_grad);
  CHECK(tgt_grad);
  for (int j = 0; j < 3; ++j) {
    CHECK(d_in_a(0, j) == 0.0);  // pad rows never move
    CHECK(d_in_b(0, j) == 0.0);
  }
  CHECK_THROWS_AS(dict_loss_grad({}, enc, ts.space, false, nullptr, nullptr), ContractError);
}

TEST_CASE("prepare_entries: language routing, vocabulary checks, padding") {
  const Vocabulary va = token_vocab("qa", {"apple", "pear"});
  const Vocabulary vb = token_vocab("qb", {"pomme", "poire"});
  DictionaryEntry ok{"qa", "apple", "qb", {"pomme", "poire"}};
  const auto prepared = prepare_entries({ok}, va, vb, 4);
  REQUIRE(prepared.size() == 1);
  CHECK(prepared[0].target_is_a);
  CHECK(prepared[0].target == va.lookup("apple"));
  CHECK(prepared[0].true_len == 2);
  CHECK(prepared[0].def_ids.size() == 4);
  CHECK(prepared[0].def_ids[2] == Vocabulary::kPad);

  DictionaryEntry same_lang{"qa", "apple", "qa", {"pear"}};
  CHECK_THROWS_AS(prepare_entries({same_lang}, va, vb, 4), ConfigError);
  DictionaryEntry missing{"qa", "quince", "qb", {"pomme"}};
  CHECK_THROWS_WITH_AS(prepare_entries({missing}, va, vb, 4), doctest::Contains("quince"), ConfigError);
}

namespace {

// A ready-to-train multitask fixture over two tiny vocabularies.
struct TrainFixture {
  Vocabulary va;
  Vocabulary vb;
  TrainInputs in;

  explicit TrainFixture(int n_entries_ab = 3, int n_entries_ba = 1)
      : va(token_vocab("qa", synth::inventory("u", 6))),
        vb(token_vocab("qb", synth::inventory("v", 6))) {
    std::vector<DictionaryEntry> raw;
    for (int i = 0; i < n_entries_ab; ++i)
      raw.push_back({"qa", "u" + std::to_string(i), "qb",
                     {"v" + std::to_string(i), "v" + std::to_string((i + 1) % 6)}});
    for (int i = 0; i < n_entries_ba; ++i)
      raw.push_back({"qb", "v" + std::to_string(i), "qa", {"u" + std::to_string((i + 2) % 6)}});
    in.vocab_a = &va;
    in.vocab_b = &vb;
    for (auto& p : prepare_entries(raw, va, vb, 4)) (p.target_is_a ? in.ab : in.ba).push_back(std::move(p));
  }
};

TrainConfig quick_cfg(Strategy s, int epochs, int batch = 2) {
  TrainConfig tc;
  tc.strategy = s;
  tc.epochs = epochs;
  tc.batch_size = batch;
  tc.checkpoint_every = 0;
  tc.seed = 99;
  return tc;
}

EncoderConfig quick_enc() {
  EncoderConfig ec;
  ec.kind = EncoderKind::bow;
  ec.dim = 4;
  ec.hidden = 4;
  ec.layers = 1;
  ec.seq_len = 4;
  return ec;
}

}  // namespace

TEST_CASE("batching: 3 + 1 entries at batch size 2 form exactly 2 batches per epoch") {
  TrainFixture fx(3, 1);
  const TrainResult res = run_training(quick_cfg(Strategy::multitask, 1), quick_enc(), fx.in, nullptr);
  CHECK(res.report.dict_batches == 2);
}

TEST_CASE("batching: batch count is epochs * ceil(pool / batch) across shapes") {
  const auto count = [](int ab, int ba, int batch, int epochs) {
    TrainFixture fx(ab, ba);
    return run_training(quick_cfg(Strategy::multitask, epochs, batch), quick_enc(), fx.in, nullptr)
        .report.dict_batches;
  };
  CHECK(count(5, 0, 2, 3) == 3 * 3);
  CHECK(count(4, 4, 3, 2) == 2 * 3);
  CHECK(count(2, 3, 5, 4) == 4 * 1);
  CHECK(count(1, 0, 64, 2) == 2);
}

TEST_CASE("strategy: single-direction training ignores D_ji entirely") {
  TrainFixture with_ba(3, 2);
  TrainFixture without_ba(3, 0);
  const TrainResult r1 = run_training(quick_cfg(Strategy::single, 5), quick_enc(), with_ba.in, nullptr);
  const TrainResult r2 = run_training(quick_cfg(Strategy::single, 5), quick_enc(), without_ba.in, nullptr);
  CHECK(r1.report.checksum == r2.report.checksum);
  CHECK(checkpoints_identical(r1.checkpoint, r2.checkpoint));
  REQUIRE(r1.report.epochs.size() == r2.report.epochs.size());
  for (std::size_t e = 0; e < r1.report.epochs.size(); ++e)
    CHECK(r1.report.epochs[e].dict == r2.report.epochs[e].dict);
}

TEST_CASE("strategy: an empty training pool is rejected up front") {
  TrainFixture only_ba(0, 2);
  CHECK_THROWS_AS(run_training(quick_cfg(Strategy::single, 1), quick_enc(), only_ba.in, nullptr),
                  ConfigError);
  TrainFixture empty(0, 0);
  CHECK_THROWS_AS(run_training(quick_cfg(Strategy::multitask, 1), quick_enc(), empty.in, nullptr),
                  ConfigError);
  // multitask with only the reverse direction is fine
  CHECK_NOTHROW(run_training(quick_cfg(Strategy::multitask, 1), quick_enc(), only_ba.in, nullptr));
}

TEST_CASE("strategy: joint mode without corpora fails before any work") {
  TrainFixture fx(2, 2);
  TrainConfig tc = quick_cfg(Strategy::joint, 1);
  tc.sync_joint = true;
  CHECK_THROWS_AS(run_training(tc, quick_enc(), fx.in, nullptr), ConfigError);
}

TEST_CASE("frozen embeddings: single/multitask never move the embedding matrices") {
  TrainFixture fx(3, 2);
  Tensor init_a(fx.va.size(), 4), init_b(fx.vb.size(), 4);
  Rng rng(7);
  for (auto& v : init_a.data) v = rng.uniform(-1, 1);
  for (auto& v : init_b.data) v = rng.uniform(-1, 1);
  for (int j = 0; j < 4; ++j) {
    init_a(0, j) = 0.0;
    init_b(0, j) = 0.0;
  }
  fx.in.init_in_a = &init_a;
  fx.in.init_in_b = &init_b;
  for (const Strategy s : {Strategy::single, Strategy::multitask}) {
    const TrainResult res = run_training(quick_cfg(s, 20), quick_enc(), fx.in, nullptr);
    const F32Tensor expect_a = F32Tensor::from(init_a);
    const F32Tensor expect_b = F32Tensor::from(init_b);
    CHECK(res.checkpoint.tensors.at("emb.qa.in").data == expect_a.data);
    CHECK(res.checkpoint.tensors.at("emb.qb.in").data == expect_b.data);
  }
}

TEST_CASE("no-op run: zero epochs returns the initialization unchanged") {
  TrainFixture fx(3, 1);
  Tensor init_a(fx.va.size(), 4), init_b(fx.vb.size(), 4);
  Rng rng(8);
  for (auto& v : init_a.data) v = rng.uniform(-1, 1);
  for (auto& v : init_b.data) v = rng.uniform(-1, 1);
  for (int j = 0; j < 4; ++j) {
    init_a(0, j) = 0.0;
    init_b(0, j) = 0.0;
  }
  fx.in.init_in_a = &init_a;
  fx.in.init_in_b = &init_b;
  const TrainResult r1 = run_training(quick_cfg(Strategy::multitask, 0), quick_enc(), fx.in, nullptr);
  const TrainResult r2 = run_training(quick_cfg(Strategy::multitask, 0), quick_enc(), fx.in, nullptr);
  CHECK(r1.report.epochs.empty());
  CHECK(r1.report.dict_batches == 0);
  CHECK(r1.checkpoint.tensors.at("emb.qa.in").data == F32Tensor::from(init_a).data);
  CHECK(checkpoints_identical(r1.checkpoint, r2.checkpoint));
  const TrainResult moved = run_training(quick_cfg(Strategy::multitask, 1), quick_enc(), fx.in, nullptr);
  CHECK_FALSE(checkpoints_identical(r1.checkpoint, moved.checkpoint));
}

TEST_CASE("determinism: identical seeds give bit-identical checkpoints") {
  TrainFixture fx(4, 3);
  const TrainResult r1 = run_training(quick_cfg(Strategy::multitask, 10), quick_enc(), fx.in, nullptr);
  const TrainResult r2 = run_training(quick_cfg(Strategy::multitask, 10), quick_enc(), fx.in, nullptr);
  CHECK(r1.report.checksum == r2.report.checksum);
  CHECK(checkpoints_identical(r1.checkpoint, r2.checkpoint));
  TrainConfig other = quick_cfg(Strategy::multitask, 10);
  other.seed = 100;
  const TrainResult r3 = run_training(other, quick_enc(), fx.in, nullptr);
  CHECK_FALSE(checkpoints_identical(r1.checkpoint, r3.checkpoint));
}

TEST_CASE("training log: one TSV line per epoch, epochs numbered from 1") {
  TrainFixture fx(3, 1);
  std::ostringstream log;
  run_training(quick_cfg(Strategy::multitask, 4), quick_enc(), fx.in, &log);
  std::istringstream lines(log.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    ++n;
    std::istringstream f(line);
    int epoch = 0;
    double dict = 0, sga = 0, sgb = 0, align = 0;
    f >> epoch >> dict >> sga >> sgb >> align;
    CHECK(epoch == n);
    CHECK(std::isfinite(dict));
    CHECK(sga == 0.0);  // multitask logs zero for the joint-only components
  }
  CHECK(n == 4);
}

TEST_CASE("checkpoint callback: fires at every multiple of the interval") {
  TrainFixture fx(3, 1);
  TrainConfig tc = quick_cfg(Strategy::multitask, 5);
  tc.checkpoint_every = 2;
  std::vector<int> fired;
  run_training(tc, quick_enc(), fx.in, nullptr,
               [&](int epoch, const Checkpoint&) { fired.push_back(epoch); });
  CHECK(fired == std::vector<int>{2, 4});
}

TEST_CASE("multitask symmetry: mirrored directions reproduce the single-task loss curve") {
  // Same token lists in both languages, identical embedding init, and every
  // a->b entry mirrored as b->a: the multitask pool is two fp-identical
  // copies, so full-batch training must follow the single-task trajectory.
  const auto tokens = synth::inventory("t", 8);
  const Vocabulary va = token_vocab("xa", tokens);
  const Vocabulary vb = token_vocab("xb", tokens);
  Tensor init(va.size(), 4);
  Rng rng(17);
  for (auto& v : init.data) v = rng.uniform(-1, 1);
  for (int j = 0; j < 4; ++j) init(0, j) = 0.0;

  std::vector<DictionaryEntry> fwd, both;
  for (int i = 0; i < 6; ++i) {
    DictionaryEntry e{"xa", tokens[static_cast<std::size_t>(i)], "xb",
                      {tokens[static_cast<std::size_t>((i + 1) % 8)],
                       tokens[static_cast<std::size_t>((i + 3) % 8)]}};
    DictionaryEntry mirror{"xb", e.target_word, "xa", e.definition};
    fwd.push_back(e);
    both.push_back(std::move(e));
    both.push_back(std::move(mirror));
  }

  const auto inputs = [&](const std::vector<DictionaryEntry>& raw) {
    TrainInputs in;
    in.vocab_a = &va;
    in.vocab_b = &vb;
    for (auto& p : prepare_entries(raw, va, vb, 4)) (p.target_is_a ? in.ab : in.ba).push_back(std::move(p));
    in.init_in_a = &init;
    in.init_in_b = &init;
    return in;
  };
  const TrainInputs in_single = inputs(fwd);
  const TrainInputs in_multi = inputs(both);

  EncoderConfig ec = quick_enc();
  const int epochs = 12;
  const TrainResult rs = run_training(quick_cfg(Strategy::single, epochs, 64), ec, in_single, nullptr);
  const TrainResult rm = run_training(quick_cfg(Strategy::multitask, epochs, 64), ec, in_multi, nullptr);
  REQUIRE(rs.report.epochs.size() == static_cast<std::size_t>(epochs));
  REQUIRE(rm.report.epochs.size() == static_cast<std::size_t>(epochs));
  for (int e = 0; e < epochs; ++e) {
    const double a = rs.report.epochs[static_cast<std::size_t>(e)].dict;
    const double b = rm.report.epochs[static_cast<std::size_t>(e)].dict;
    CHECK(b == doctest::Approx(a).epsilon(1e-9));
  }
}

namespace {

// Joint fixture: dictionary + encoded monolingual corpora + parallel pairs.
struct JointFixture {
  Vocabulary va;
  Vocabulary vb;
  TrainInputs in;

  JointFixture() {
    const auto bundle = synth::joint_bundle(10, 3, 12, 8, 10, 6, 321);
    std::vector<std::vector<std::string>> all_a = bundle.mono_a, all_b = bundle.mono_b;
    for (const auto& e : bundle.entries)
      (e.def_lang == bundle.lang_a ? all_a : all_b).push_back(e.definition);
    VocabBuilder ba, bb;
    for (const auto& l : all_a) ba.add_line(l);
    for (const auto& l : all_b) bb.add_line(l);
    for (const auto& e : bundle.entries) {
      auto& builder = e.target_lang == bundle.lang_a ? ba : bb;
      builder.add_token(e.target_word);
      builder.require(e.target_word);
    }
    va = ba.build(bundle.lang_a, 1);
    vb = bb.build(bundle.lang_b, 1);
    in.vocab_a = &va;
    in.vocab_b = &vb;
    for (auto& p : prepare_entries(bundle.entries, va, vb, 6))
      (p.target_is_a ? in.ab : in.ba).push_back(std::move(p));
    for (const auto& l : bundle.mono_a) in.mono_a.push_back(va.encode(l));
    for (const auto& l : bundle.mono_b) in.mono_b.push_back(vb.encode(l));
    for (const auto& p : bundle.parallel) in.parallel.push_back({va.encode(p.sent_a), vb.encode(p.sent_b)});
  }
};

}  // namespace

TEST_CASE("joint objective: weighted sum recomposes from its components to 1e-12") {
  JointFixture fx;
  ParamStore store;
  Rng rng(61);
  const EmbeddingSpace space =
      register_embeddings(store, fx.va.language, fx.va.size(), fx.vb.language, fx.vb.size(), 4, rng, true);
  Rng enc_init(62);
  EncoderConfig ec = quick_enc();
  Encoder enc(store, ec, &enc_init);

  std::vector<const PreparedEntry*> dict_batch;
  for (const auto& e : fx.in.ab) dict_batch.push_back(&e);
  for (const auto& e : fx.in.ba) dict_batch.push_back(&e);

  const NegativeTable ta = NegativeTable::build(fx.va);
  const NegativeTable tb = NegativeTable::build(fx.vb);
  SkipGramConfig sg;
  sg.window = 2;
  sg.negatives = 3;
  sg.subsample = 0.0;
  SgStream sa(&fx.in.mono_a, &fx.va, &ta, sg, Rng(70));
  SgStream sb(&fx.in.mono_b, &fx.vb, &tb, sg, Rng(71));
  std::vector<SgExample> batch_a, batch_b;
  sa.next_batch(16, batch_a);
  sb.next_batch(16, batch_b);
  std::vector<const ParallelIdx*> align_batch;
  for (const auto& p : fx.in.parallel) align_batch.push_back(&p);

  const double l1 = 0.3, l2 = 0.7;
  const JointLosses j = joint_objective(dict_batch, batch_a, batch_b, align_batch, enc, space, l1, l2);
  CHECK(j.total == doctest::Approx(j.dict + l1 * (j.sg_a + j.sg_b) + l2 * j.align).epsilon(1e-12));

  // Components equal their standalone computations.
  const double dict = dict_loss_grad(dict_batch, enc, space, false, nullptr, nullptr);
  CHECK(j.dict == doctest::Approx(dict).epsilon(1e-12));
  double sg_sum = 0.0;
  for (const auto& ex : batch_a) sg_sum += skipgram_loss_grad(ex, *space.in_a, *space.out_a, nullptr, nullptr, 1.0);
  CHECK(j.sg_a == doctest::Approx(sg_sum / batch_a.size()).epsilon(1e-12));
  const double align = alignment_loss_grad(align_batch, *space.in_a, *space.in_b, nullptr, nullptr, 1.0);
  CHECK(j.align == doctest::Approx(align).epsilon(1e-12));
}

TEST_CASE("joint objective: lambda weights zero reduces J to the dictionary loss") {
  JointFixture fx;
  ParamStore store;
  Rng rng(63);
  const EmbeddingSpace space =
      register_embeddings(store, fx.va.language, fx.va.size(), fx.vb.language, fx.vb.size(), 4, rng, true);
  Rng enc_init(64);
  Encoder enc(store, quick_enc(), &enc_init);
  std::vector<const PreparedEntry*> dict_batch;
  for (const auto& e : fx.in.ab) dict_batch.push_back(&e);
  std::vector<SgExample> sg_batch{{2, 3, {4, 5}}};
  std::vector<const ParallelIdx*> align_batch{&fx.in.parallel[0]};
  const JointLosses j = joint_objective(dict_batch, sg_batch, sg_batch, align_batch, enc, space, 0.0, 0.0);
  CHECK(j.total == j.dict);
  const double dict = dict_loss_grad(dict_batch, enc, space, false, nullptr, nullptr);
  CHECK(j.total == doctest::Approx(dict).epsilon(1e-12));
}

TEST_CASE("joint objective: all-zero parameters compose the component trivial values") {
  JointFixture fx;
  ParamStore store;
  Rng rng(65);
  const EmbeddingSpace space =
      register_embeddings(store, fx.va.language, fx.va.size(), fx.vb.language, fx.vb.size(), 4, rng, true);
  Rng enc_init(66);
  Encoder enc(store, quick_enc(), &enc_init);
  for (auto& [name, slot] : store.slots()) slot.value.fill(0.0);

  std::vector<const PreparedEntry*> dict_batch;
  for (const auto& e : fx.in.ab) dict_batch.push_back(&e);
  const int K = 3;
  std::vector<SgExample> sg_batch{{2, 3, {4, 5, 6}}, {3, 2, {5, 6, 7}}};
  std::vector<const ParallelIdx*> align_batch;
  for (const auto& p : fx.in.parallel) align_batch.push_back(&p);

  const JointLosses j = joint_objective(dict_batch, sg_batch, sg_batch, align_batch, enc, space, 0.5, 0.5);
  CHECK(j.dict == 0.0);   // E = 0 and every target row is 0
  CHECK(j.align == 0.0);  // all means are 0
  CHECK(j.sg_a == doctest::Approx((1 + K) * std::log(2.0)).epsilon(1e-12));
  CHECK(j.sg_b == doctest::Approx((1 + K) * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("joint training (sync): finite losses, NaN-free checkpoint, deterministic") {
  JointFixture fx;
  TrainConfig tc = quick_cfg(Strategy::joint, 5, 8);
  tc.sync_joint = true;
  tc.sg.window = 2;
  tc.sg.negatives = 2;
  tc.sg.subsample = 0.0;
  EncoderConfig ec = quick_enc();
  ec.seq_len = 6;
  const TrainResult r1 = run_training(tc, ec, fx.in, nullptr);
  for (const auto& e : r1.report.epochs) {
    CHECK(std::isfinite(e.dict));
    CHECK(std::isfinite(e.sg_a));
    CHECK(std::isfinite(e.sg_b));
    CHECK(std::isfinite(e.align));
    CHECK(e.sg_a > 0.0);  // skip-gram losses are genuinely being computed
    CHECK(e.align >= 0.0);
  }
  for (const auto& [name, t] : r1.checkpoint.tensors)
    for (float v : t.data) CHECK(std::isfinite(v));
  CHECK(r1.report.sg_a_batches > 0);
  CHECK(r1.report.align_batches > 0);
  const TrainResult r2 = run_training(tc, ec, fx.in, nullptr);
  CHECK(checkpoints_identical(r1.checkpoint, r2.checkpoint));
  // Joint training is the one strategy that moves the embeddings.
  const TrainResult frozen = run_training(quick_cfg(Strategy::multitask, 5, 8), ec, fx.in, nullptr);
  CHECK(r1.checkpoint.tensors.at("emb." + fx.va.language + ".in").data !=
        frozen.checkpoint.tensors.at("emb." + fx.va.language + ".in").data);
}

TEST_CASE("model round-trip: a checkpoint reloads into a working model") {
  TrainFixture fx(3, 2);
  const TrainResult res = run_training(quick_cfg(Strategy::multitask, 3), quick_enc(), fx.in, nullptr);
  const Model m = model_from_checkpoint(res.checkpoint);
  CHECK(m.enc_cfg.kind == EncoderKind::bow);
  CHECK(m.strategy == Strategy::multitask);
  CHECK(m.vocab_a.language == "qa");
  CHECK(m.vocab(m.vocab_b.language).language == "qb");
  CHECK(m.other_vocab("qa").language == "qb");
  const Vec e = m.encode_definition({"v0", "v1"}, "qb");
  CHECK(e.size() == 4);
  CHECK(all_finite(e));
}
