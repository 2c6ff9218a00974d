#include "bildrl/dicttrain.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "bildrl/error.hpp"

namespace bildrl {

Strategy strategy_from_string(const std::string& s) {
  if (s == "single") return Strategy::single;
  if (s == "multitask") return Strategy::multitask;
  if (s == "joint") return Strategy::joint;
  throw ConfigError("unknown strategy '" + s + "' (expected single|multitask|joint)");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::single: return "single";
    case Strategy::multitask: return "multitask";
    case Strategy::joint: return "joint";
  }
  return "?";
}

void TrainConfig::validate() const {
  opt.validate();
  if (batch_size < 1) throw ConfigError("training: batch size must be >= 1");
  if (epochs < 0) throw ConfigError("training: epochs must be >= 0");
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("training: lambda weights must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("training: checkpoint interval must be >= 0");
  if (strategy == Strategy::joint) sg.validate();
}

std::vector<PreparedEntry> prepare_entries(const std::vector<DictionaryEntry>& entries,
                                           const Vocabulary& va, const Vocabulary& vb, int seq_len) {
  std::vector<PreparedEntry> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    PreparedEntry p;
    const Vocabulary* tgt_vocab;
    const Vocabulary* def_vocab;
    if (e.target_lang == va.language && e.def_lang == vb.language) {
      p.target_is_a = true;
      tgt_vocab = &va;
      def_vocab = &vb;
    } else if (e.target_lang == vb.language && e.def_lang == va.language) {
      p.target_is_a = false;
      tgt_vocab = &vb;
      def_vocab = &va;
    } else {
      throw ConfigError("dictionary entry languages (" + e.target_lang + ", " + e.def_lang +
                        ") do not match the model languages (" + va.language + ", " + vb.language + ")");
    }
    if (!tgt_vocab->contains(e.target_word))
      throw ConfigError("dictionary target word '" + e.target_word + "' is not in the " +
                        tgt_vocab->language + " vocabulary");
    p.target = tgt_vocab->lookup(e.target_word);
    auto [ids, true_len] = pad_or_truncate(def_vocab->encode(e.definition), seq_len);
    p.def_ids = std::move(ids);
    p.true_len = true_len;
    out.push_back(std::move(p));
  }
  return out;
}

double dict_loss_grad(const std::vector<const PreparedEntry*>& batch, const Encoder& encoder,
                      const EmbeddingSpace& space, bool compute_grads, Tensor* d_in_a, Tensor* d_in_b) {
  if (batch.empty()) throw ContractError("dictionary loss: empty batch");
  const int k = encoder.config().dim;
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  EncoderTrace trace;
  for (const PreparedEntry* e : batch) {
    const Tensor& def_emb = e->target_is_a ? *space.in_b : *space.in_a;
    const Tensor& tgt_emb = e->target_is_a ? *space.in_a : *space.in_b;
    const Vec E = encoder.encode(e->def_ids, e->true_len, def_emb, compute_grads ? &trace : nullptr);
    const double* w = tgt_emb.row(e->target);
    double sq = 0.0;
    for (int i = 0; i < k; ++i) {
      const double d = E[static_cast<std::size_t>(i)] - w[i];
      sq += d * d;
    }
    loss += sq;
    if (!compute_grads) continue;
    Vec gq(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) gq[static_cast<std::size_t>(i)] = 2.0 * inv * (E[static_cast<std::size_t>(i)] - w[i]);
    Tensor* def_sink = e->target_is_a ? d_in_b : d_in_a;
    encoder.backward(trace, gq, def_sink);
    Tensor* tgt_sink = e->target_is_a ? d_in_a : d_in_b;
    if (tgt_sink) axpy(-1.0, gq.data(), tgt_sink->row(e->target), gq.size());
  }
  loss *= inv;
  if (!std::isfinite(loss)) throw NumericError("dictionary loss is non-finite");
  return loss;
}

JointLosses joint_objective(const std::vector<const PreparedEntry*>& dict_batch,
                            const std::vector<SgExample>& sg_a_batch,
                            const std::vector<SgExample>& sg_b_batch,
                            const std::vector<const ParallelIdx*>& align_batch, const Encoder& encoder,
                            const EmbeddingSpace& space, double lambda1, double lambda2) {
  JointLosses out;
  if (!dict_batch.empty()) out.dict = dict_loss_grad(dict_batch, encoder, space, false, nullptr, nullptr);
  auto sg_mean = [&](const std::vector<SgExample>& batch, const Tensor& in, const Tensor& out_m) {
    if (batch.empty()) return 0.0;
    double s = 0.0;
    for (const auto& ex : batch) s += skipgram_loss_grad(ex, in, out_m, nullptr, nullptr, 0.0);
    return s / static_cast<double>(batch.size());
  };
  if (!sg_a_batch.empty()) out.sg_a = sg_mean(sg_a_batch, *space.in_a, space.output(space.lang_a));
  if (!sg_b_batch.empty()) out.sg_b = sg_mean(sg_b_batch, *space.in_b, space.output(space.lang_b));
  if (!align_batch.empty())
    out.align = alignment_loss_grad(align_batch, *space.in_a, *space.in_b, nullptr, nullptr, 0.0);
  out.total = out.dict + lambda1 * (out.sg_a + out.sg_b) + lambda2 * out.align;
  return out;
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

std::string join_tokens(const Vocabulary& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += v.token(i);
  }
  return out;
}

}  // namespace

Checkpoint make_checkpoint(const ParamStore& store, const EncoderConfig& ec, Strategy strategy,
                           double lambda1, double lambda2, std::uint64_t seed, const Vocabulary& va,
                           const Vocabulary& vb) {
  Checkpoint c;
  c.set("format", "bildrl-model");
  c.set("encoder", to_string(ec.kind));
  c.set("dim", std::to_string(ec.dim));
  c.set("hidden", std::to_string(ec.hidden));
  c.set("layers", std::to_string(ec.layers));
  c.set("seq_len", std::to_string(ec.seq_len));
  c.set("kernel", std::to_string(ec.kernel));
  c.set("pool", std::to_string(ec.pool));
  c.set("attention_single_weight", ec.attention_single_weight ? "1" : "0");
  c.set("strategy", to_string(strategy));
  c.set("lambda1", fmt_double(lambda1));
  c.set("lambda2", fmt_double(lambda2));
  c.set("seed", std::to_string(seed));
  c.set("lang_a", va.language);
  c.set("lang_b", vb.language);
  c.set("vocab." + va.language, join_tokens(va));
  c.set("vocab." + vb.language, join_tokens(vb));
  for (const auto& [name, slot] : store.slots()) {
    const bool is_enc = name.rfind("enc.", 0) == 0;
    const bool is_emb_in = name == emb_slot_name(va.language, false) || name == emb_slot_name(vb.language, false);
    if (is_enc || is_emb_in) c.tensors.emplace(name, F32Tensor::from(slot.value));
  }
  return c;
}

namespace {

struct WorkerStats {
  double sum = 0.0;
  std::int64_t batches = 0;
};

// Mean loss of batches completed since the previous snapshot.
struct StatsBoard {
  std::mutex mu;
  WorkerStats sg_a, sg_b, align;
  WorkerStats sg_a_prev, sg_b_prev, align_prev;

  static double window_mean(const WorkerStats& cur, WorkerStats& prev) {
    const std::int64_t n = cur.batches - prev.batches;
    const double mean = n > 0 ? (cur.sum - prev.sum) / static_cast<double>(n) : 0.0;
    prev = cur;
    return mean;
  }
};

}  // namespace

TrainResult run_training(const TrainConfig& tc, const EncoderConfig& ec, const TrainInputs& in,
                         std::ostream* log,
                         const std::function<void(int, const Checkpoint&)>& on_checkpoint) {
  tc.validate();
  ec.validate();
  if (!in.vocab_a || !in.vocab_b) throw ContractError("run_training: vocabularies are required");
  const Vocabulary& va = *in.vocab_a;
  const Vocabulary& vb = *in.vocab_b;
  const bool joint = tc.strategy == Strategy::joint;

  std::vector<const PreparedEntry*> pool;
  for (const auto& e : in.ab) pool.push_back(&e);
  if (tc.strategy != Strategy::single)
    for (const auto& e : in.ba) pool.push_back(&e);
  if (pool.empty())
    throw ConfigError(tc.strategy == Strategy::single
                          ? "single strategy requires dictionary entries with " + va.language + " targets"
                          : "no dictionary entries to train on");
  if (joint) {
    if (in.mono_a.empty() || in.mono_b.empty())
      throw ConfigError("joint strategy requires monolingual corpora for both languages");
    if (in.parallel.empty()) throw ConfigError("joint strategy requires a parallel corpus");
  }

  const auto t0 = std::chrono::steady_clock::now();
  ParamStore store;
  Rng root(tc.seed);
  Rng init = root.fork(0);
  EmbeddingSpace space =
      register_embeddings(store, va.language, va.size(), vb.language, vb.size(), ec.dim, init, joint);
  auto load_init = [&](const Tensor* src, Tensor* dst, const Vocabulary& v) {
    if (!src) return;
    if (src->rows != v.size() || src->cols != ec.dim)
      throw ConfigError("initial embeddings for " + v.language + " have shape " + shape_str(*src) +
                        ", expected " + std::to_string(v.size()) + "x" + std::to_string(ec.dim));
    dst->data = src->data;
    for (int j = 0; j < dst->cols; ++j) (*dst)(Vocabulary::kPad, j) = 0.0;  // pad row stays frozen zero
  };
  load_init(in.init_in_a, space.in_a, va);
  load_init(in.init_in_b, space.in_b, vb);
  Encoder encoder(store, ec, &init);
  const std::vector<Slot*> enc_slots = encoder.slots();

  Slot* sin_a = &store.slot(emb_slot_name(va.language, false));
  Slot* sin_b = &store.slot(emb_slot_name(vb.language, false));
  Slot* sout_a = joint ? &store.slot(emb_slot_name(va.language, true)) : nullptr;
  Slot* sout_b = joint ? &store.slot(emb_slot_name(vb.language, true)) : nullptr;

  NegativeTable table_a, table_b;
  std::unique_ptr<SgStream> sg_a, sg_b;
  std::unique_ptr<AlignStream> align;
  if (joint) {
    table_a = NegativeTable::build(va);
    table_b = NegativeTable::build(vb);
    sg_a = std::make_unique<SgStream>(&in.mono_a, &va, &table_a, tc.sg, root.fork(1));
    sg_b = std::make_unique<SgStream>(&in.mono_b, &vb, &table_b, tc.sg, root.fork(2));
    align = std::make_unique<AlignStream>(&in.parallel, root.fork(3));
  }

  Rng shuffle_rng = root.fork(4);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  std::vector<const PreparedEntry*> batch;

  auto emit_epoch = [&](int epoch, const EpochLoss& e) {
    report.epochs.push_back(e);
    if (log)
      *log << epoch + 1 << '\t' << e.dict << '\t' << e.sg_a << '\t' << e.sg_b << '\t' << e.align << '\n';
    if (on_checkpoint && tc.checkpoint_every > 0 && (epoch + 1) % tc.checkpoint_every == 0 &&
        epoch + 1 != tc.epochs)
      on_checkpoint(epoch + 1, make_checkpoint(store, ec, tc.strategy, tc.lambda1, tc.lambda2, tc.seed, va, vb));
  };

  if (!joint || tc.sync_joint) {
    // Deterministic path: single, multitask, and round-robin joint.
    std::vector<SgExample> sgbatch;
    std::vector<const ParallelIdx*> abatch;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
      shuffle_rng.shuffle(order);
      EpochLoss el;
      std::int64_t nb = 0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
        batch.clear();
        for (std::size_t i = start; i < end; ++i) batch.push_back(pool[order[i]]);

        el.dict += dict_loss_grad(batch, encoder, space, true, joint ? &sin_a->grad : nullptr,
                                  joint ? &sin_b->grad : nullptr);
        ++report.dict_batches;
        ++nb;
        if (joint) {
          std::vector<Slot*> step = enc_slots;
          step.push_back(sin_a);
          step.push_back(sin_b);
          amsgrad_step(step, tc.opt);

          sg_a->next_batch(tc.batch_size, sgbatch);
          double s = 0.0;
          const double scale1 = tc.lambda1 / static_cast<double>(sgbatch.size());
          for (const auto& ex : sgbatch)
            s += skipgram_loss_grad(ex, sin_a->value, sout_a->value, &sin_a->grad, &sout_a->grad, scale1);
          el.sg_a += s / static_cast<double>(sgbatch.size());
          amsgrad_step({sin_a, sout_a}, tc.opt);
          ++report.sg_a_batches;

          sg_b->next_batch(tc.batch_size, sgbatch);
          s = 0.0;
          for (const auto& ex : sgbatch)
            s += skipgram_loss_grad(ex, sin_b->value, sout_b->value, &sin_b->grad, &sout_b->grad, scale1);
          el.sg_b += s / static_cast<double>(sgbatch.size());
          amsgrad_step({sin_b, sout_b}, tc.opt);
          ++report.sg_b_batches;

          align->next_batch(tc.batch_size, abatch);
          el.align +=
              alignment_loss_grad(abatch, sin_a->value, sin_b->value, &sin_a->grad, &sin_b->grad, tc.lambda2);
          amsgrad_step({sin_a, sin_b}, tc.opt);
          ++report.align_batches;
        } else {
          amsgrad_step(enc_slots, tc.opt);
        }
      }
      el.dict /= static_cast<double>(nb);
      el.sg_a /= static_cast<double>(nb);
      el.sg_b /= static_cast<double>(nb);
      el.align /= static_cast<double>(nb);
      if (!joint) el.sg_a = el.sg_b = el.align = 0.0;
      emit_epoch(epoch, el);
    }
  } else {
    // Asynchronous joint mode: 4 unsynchronized workers over the shared store
    // (dictionary worker on this thread owns the epoch count). Embedding
    // updates race benignly; each worker accumulates into its own gradient
    // buffers before applying.
    std::atomic<bool> stop{false};
    StatsBoard board;
    std::exception_ptr sg_a_err, sg_b_err, align_err;

    auto sg_worker = [&](SgStream* stream, Slot* sin, Slot* sout, WorkerStats StatsBoard::*stats,
                         std::exception_ptr* err) {
      try {
        Tensor g_in(sin->value.rows, sin->value.cols);
        Tensor g_out(sout->value.rows, sout->value.cols);
        std::vector<SgExample> buf;
        while (!stop.load(std::memory_order_relaxed)) {
          stream->next_batch(tc.batch_size, buf);
          g_in.fill(0.0);
          g_out.fill(0.0);
          double s = 0.0;
          const double scale = tc.lambda1 / static_cast<double>(buf.size());
          for (const auto& ex : buf) s += skipgram_loss_grad(ex, sin->value, sout->value, &g_in, &g_out, scale);
          amsgrad_apply(*sin, g_in, tc.opt);
          amsgrad_apply(*sout, g_out, tc.opt);
          std::lock_guard<std::mutex> lk(board.mu);
          (board.*stats).sum += s / static_cast<double>(buf.size());
          ++(board.*stats).batches;
        }
      } catch (...) {
        *err = std::current_exception();
      }
    };
    auto align_worker = [&]() {
      try {
        Tensor g_a(sin_a->value.rows, sin_a->value.cols);
        Tensor g_b(sin_b->value.rows, sin_b->value.cols);
        std::vector<const ParallelIdx*> buf;
        while (!stop.load(std::memory_order_relaxed)) {
          align->next_batch(tc.batch_size, buf);
          g_a.fill(0.0);
          g_b.fill(0.0);
          const double s = alignment_loss_grad(buf, sin_a->value, sin_b->value, &g_a, &g_b, tc.lambda2);
          amsgrad_apply(*sin_a, g_a, tc.opt);
          amsgrad_apply(*sin_b, g_b, tc.opt);
          std::lock_guard<std::mutex> lk(board.mu);
          board.align.sum += s;
          ++board.align.batches;
        }
      } catch (...) {
        align_err = std::current_exception();
      }
    };

    std::thread th_a(sg_worker, sg_a.get(), sin_a, sout_a, &StatsBoard::sg_a, &sg_a_err);
    std::thread th_b(sg_worker, sg_b.get(), sin_b, sout_b, &StatsBoard::sg_b, &sg_b_err);
    std::thread th_al(align_worker);

    std::exception_ptr dict_err;
    try {
      Tensor g_a(sin_a->value.rows, sin_a->value.cols);
      Tensor g_b(sin_b->value.rows, sin_b->value.cols);
      for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double dsum = 0.0;
        std::int64_t nb = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_size)) {
          const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
          batch.clear();
          for (std::size_t i = start; i < end; ++i) batch.push_back(pool[order[i]]);
          g_a.fill(0.0);
          g_b.fill(0.0);
          dsum += dict_loss_grad(batch, encoder, space, true, &g_a, &g_b);
          amsgrad_step(enc_slots, tc.opt);
          amsgrad_apply(*sin_a, g_a, tc.opt);
          amsgrad_apply(*sin_b, g_b, tc.opt);
          ++report.dict_batches;
          ++nb;
        }
        EpochLoss el;
        el.dict = dsum / static_cast<double>(nb);
        {
          std::lock_guard<std::mutex> lk(board.mu);
          el.sg_a = StatsBoard::window_mean(board.sg_a, board.sg_a_prev);
          el.sg_b = StatsBoard::window_mean(board.sg_b, board.sg_b_prev);
          el.align = StatsBoard::window_mean(board.align, board.align_prev);
        }
        emit_epoch(epoch, el);
      }
    } catch (...) {
      dict_err = std::current_exception();
    }
    stop.store(true);
    th_a.join();
    th_b.join();
    th_al.join();
    if (dict_err) std::rethrow_exception(dict_err);
    if (sg_a_err) std::rethrow_exception(sg_a_err);
    if (sg_b_err) std::rethrow_exception(sg_b_err);
    if (align_err) std::rethrow_exception(align_err);
    {
      std::lock_guard<std::mutex> lk(board.mu);
      report.sg_a_batches = board.sg_a.batches;
      report.sg_b_batches = board.sg_b.batches;
      report.align_batches = board.align.batches;
    }
  }

  if (!store.values_finite()) throw NumericError("training produced non-finite parameters");
  TrainResult result;
  result.checkpoint =
      make_checkpoint(store, ec, tc.strategy, tc.lambda1, tc.lambda2, tc.seed, va, vb);
  report.checksum = store.checksum();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.report = std::move(report);
  return result;
}

}  // namespace bildrl
