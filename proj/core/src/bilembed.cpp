#include "bildrl/bilembed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bildrl/error.hpp"

namespace bildrl {

void SkipGramConfig::validate() const {
  if (window < 1) throw ConfigError("skip-gram: window must be >= 1");
  if (negatives < 1) throw ConfigError("skip-gram: negatives must be >= 1");
  if (subsample < 0.0) throw ConfigError("skip-gram: subsample threshold must be >= 0");
}

void PretrainConfig::validate() const {
  sg.validate();
  opt.validate();
  if (batch < 1) throw ConfigError("pretrain: batch size must be >= 1");
  if (epochs < 0) throw ConfigError("pretrain: epochs must be >= 0");
}

namespace {

// log sigmoid(x), stable for large |x|.
double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace

double skipgram_loss_grad(const SgExample& ex, const Tensor& in, const Tensor& out, Tensor* d_in,
                          Tensor* d_out, double scale) {
  if (ex.center == Vocabulary::kPad || ex.context == Vocabulary::kPad)
    throw ContractError("skip-gram: pad index as center or context");
  const int k = in.cols;
  const double* vc = in.row(ex.center);
  const double* uc = out.row(ex.context);

  const double pos_score = dot(vc, uc, static_cast<std::size_t>(k));
  double loss = -log_sigmoid(pos_score);

  Vec gv;  // d loss / d v_center, accumulated
  if (d_in || d_out) gv.assign(static_cast<std::size_t>(k), 0.0);

  const double gpos = sigmoid(pos_score) - 1.0;
  if (d_out) axpy(scale * gpos, vc, d_out->row(ex.context), static_cast<std::size_t>(k));
  if (d_in || d_out) axpy(gpos, uc, gv.data(), gv.size());

  for (const int neg : ex.negatives) {
    const double* un = out.row(neg);
    const double score = dot(vc, un, static_cast<std::size_t>(k));
    loss -= log_sigmoid(-score);
    const double gneg = sigmoid(score);
    if (d_out) axpy(scale * gneg, vc, d_out->row(neg), static_cast<std::size_t>(k));
    if (d_in || d_out) axpy(gneg, un, gv.data(), gv.size());
  }
  if (d_in) axpy(scale, gv.data(), d_in->row(ex.center), static_cast<std::size_t>(k));
  return loss;
}

Vec sentence_mean(const std::vector<int>& ids, const Tensor& emb) {
  Vec mean(static_cast<std::size_t>(emb.cols), 0.0);
  int n = 0;
  for (const int id : ids) {
    if (id == Vocabulary::kPad) continue;
    axpy(1.0, emb.row(id), mean.data(), mean.size());
    ++n;
  }
  if (n == 0) throw ContractError("sentence_mean: sentence has no non-pad tokens");
  const double inv = 1.0 / n;
  for (double& v : mean) v *= inv;
  return mean;
}

double sentence_bow_distance(const std::vector<int>& sa, const std::vector<int>& sb, const Tensor& emb_a,
                             const Tensor& emb_b) {
  return squared_l2(sentence_mean(sa, emb_a), sentence_mean(sb, emb_b));
}

double alignment_loss_grad(const std::vector<const ParallelIdx*>& batch, const Tensor& emb_a,
                           const Tensor& emb_b, Tensor* d_a, Tensor* d_b, double scale) {
  if (batch.empty()) throw ContractError("alignment: empty batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const ParallelIdx* p : batch) {
    const Vec ma = sentence_mean(p->a, emb_a);
    const Vec mb = sentence_mean(p->b, emb_b);
    loss += squared_l2(ma, mb);
    if (!d_a && !d_b) continue;
    // d mean-loss / d mean_a = (2/|batch|) (mean_a - mean_b); each occurrence
    // in the sentence receives that divided by its sentence length.
    Vec diff(ma.size());
    for (std::size_t i = 0; i < ma.size(); ++i) diff[i] = ma[i] - mb[i];
    auto spread = [&](const std::vector<int>& ids, Tensor* sink, double sign) {
      if (!sink) return;
      int n = 0;
      for (const int id : ids)
        if (id != Vocabulary::kPad) ++n;
      const double c = sign * scale * 2.0 * inv_n / static_cast<double>(n);
      for (const int id : ids) {
        if (id == Vocabulary::kPad) continue;
        axpy(c, diff.data(), sink->row(id), diff.size());
      }
    };
    spread(p->a, d_a, 1.0);
    spread(p->b, d_b, -1.0);
  }
  return loss * inv_n;
}

SgStream::SgStream(const std::vector<std::vector<int>>* sentences, const Vocabulary* vocab,
                   const NegativeTable* table, const SkipGramConfig& cfg, Rng rng)
    : sentences_(sentences), vocab_(vocab), table_(table), cfg_(cfg), rng_(rng) {
  cfg_.validate();
  if (sentences_->empty()) throw ConfigError("skip-gram: empty corpus");
  for (const auto& s : *sentences_) total_tokens_ += static_cast<double>(s.size());
  order_.resize(sentences_->size());
  std::iota(order_.begin(), order_.end(), 0);
  rng_.shuffle(order_);
}

void SgStream::refill() {
  buffer_.clear();
  buffer_pos_ = 0;
  while (buffer_.empty()) {
    if (next_sentence_ == order_.size()) {
      if (!produced_this_pass_)
        throw ConfigError("skip-gram: corpus produced no training pairs (sentences too short?)");
      produced_this_pass_ = false;
      next_sentence_ = 0;
      rng_.shuffle(order_);
    }
    const auto& sentence = (*sentences_)[static_cast<std::size_t>(order_[next_sentence_++])];

    // word2vec-style subsampling: keep token with prob min(1, sqrt(t/f)).
    std::vector<int> kept;
    kept.reserve(sentence.size());
    for (const int id : sentence) {
      if (id == Vocabulary::kPad) continue;
      if (cfg_.subsample > 0.0) {
        const auto cnt = vocab_->counts[static_cast<std::size_t>(id)];
        if (cnt > 0) {
          const double f = static_cast<double>(cnt) / total_tokens_;
          const double keep = std::sqrt(cfg_.subsample / f);
          if (keep < 1.0 && rng_.uniform() >= keep) continue;
        }
      }
      kept.push_back(id);
    }
    const int n = static_cast<int>(kept.size());
    for (int t = 0; t < n; ++t) {
      const int lo = std::max(0, t - cfg_.window);
      const int hi = std::min(n - 1, t + cfg_.window);
      for (int c = lo; c <= hi; ++c) {
        if (c == t) continue;
        SgExample ex;
        ex.center = kept[static_cast<std::size_t>(t)];
        ex.context = kept[static_cast<std::size_t>(c)];
        ex.negatives = table_->sample_negatives(cfg_.negatives, ex.context, rng_);
        buffer_.push_back(std::move(ex));
      }
    }
    if (!buffer_.empty()) produced_this_pass_ = true;
  }
}

void SgStream::next_batch(int n, std::vector<SgExample>& out) {
  out.clear();
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    if (buffer_pos_ == buffer_.size()) refill();
    out.push_back(buffer_[buffer_pos_++]);
    ++emitted_;
  }
}

AlignStream::AlignStream(const std::vector<ParallelIdx>* pairs, Rng rng) : pairs_(pairs), rng_(rng) {
  if (pairs_->empty()) throw ConfigError("alignment: empty parallel corpus");
  order_.resize(pairs_->size());
  std::iota(order_.begin(), order_.end(), 0);
  rng_.shuffle(order_);
}

void AlignStream::next_batch(int n, std::vector<const ParallelIdx*>& out) {
  out.clear();
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    if (pos_ == order_.size()) {
      pos_ = 0;
      rng_.shuffle(order_);
    }
    out.push_back(&(*pairs_)[static_cast<std::size_t>(order_[pos_++])]);
  }
}

PretrainReport run_pretraining(ParamStore& store, const EmbeddingSpace& space, const Vocabulary& va,
                               const Vocabulary& vb, const std::vector<std::vector<int>>& mono_a,
                               const std::vector<std::vector<int>>& mono_b,
                               const std::vector<ParallelIdx>& pairs, const PretrainConfig& cfg) {
  cfg.validate();
  if (!space.out_a || !space.out_b)
    throw ContractError("pretraining requires output embedding matrices");

  const NegativeTable table_a = NegativeTable::build(va);
  const NegativeTable table_b = NegativeTable::build(vb);
  const Rng root(cfg.seed);
  SgStream sg_a(&mono_a, &va, &table_a, cfg.sg, root.fork(1));
  SgStream sg_b(&mono_b, &vb, &table_b, cfg.sg, root.fork(2));
  AlignStream align(&pairs, root.fork(3));

  // Per-pass sizes: one pass over each corpus' emitted pairs per epoch. The
  // number of SG examples varies with subsampling, so an epoch processes the
  // examples the stream emits until it has covered >= one full corpus pass.
  auto approx_pairs = [&](const std::vector<std::vector<int>>& mono) {
    std::int64_t n = 0;
    for (const auto& s : mono) {
      const int len = static_cast<int>(s.size());
      for (int t = 0; t < len; ++t)
        n += std::min(len - 1, t + cfg.sg.window) - std::max(0, t - cfg.sg.window);
    }
    return std::max<std::int64_t>(1, n);
  };
  // Upper bound of pairs per pass (no subsampling); used as the epoch quota.
  const std::int64_t quota_a = approx_pairs(mono_a);
  const std::int64_t quota_b = approx_pairs(mono_b);

  Slot& sin_a = store.slot(emb_slot_name(space.lang_a, false));
  Slot& sout_a = store.slot(emb_slot_name(space.lang_a, true));
  Slot& sin_b = store.slot(emb_slot_name(space.lang_b, false));
  Slot& sout_b = store.slot(emb_slot_name(space.lang_b, true));

  PretrainReport report;
  std::vector<SgExample> batch;
  std::vector<const ParallelIdx*> abatch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    PretrainEpoch stats;

    auto sg_pass = [&](SgStream& stream, Slot& sin, Slot& sout, std::int64_t quota) {
      double sum = 0.0;
      std::int64_t done = 0;
      while (done < quota) {
        const int n = static_cast<int>(std::min<std::int64_t>(cfg.batch, quota - done));
        stream.next_batch(n, batch);
        const double scale = 1.0 / n;
        for (const auto& ex : batch)
          sum += scale * skipgram_loss_grad(ex, sin.value, sout.value, &sin.grad, &sout.grad, scale);
        amsgrad_step({&sin, &sout}, cfg.opt);
        done += n;
      }
      return sum / std::ceil(static_cast<double>(quota) / cfg.batch);
    };
    stats.sg_a = sg_pass(sg_a, sin_a, sout_a, quota_a);
    stats.sg_b = sg_pass(sg_b, sin_b, sout_b, quota_b);

    double asum = 0.0;
    std::int64_t adone = 0;
    const auto apairs = static_cast<std::int64_t>(pairs.size());
    while (adone < apairs) {
      const int n = static_cast<int>(std::min<std::int64_t>(cfg.batch, apairs - adone));
      align.next_batch(n, abatch);
      asum += alignment_loss_grad(abatch, sin_a.value, sin_b.value, &sin_a.grad, &sin_b.grad, 1.0);
      amsgrad_step({&sin_a, &sin_b}, cfg.opt);
      adone += n;
    }
    stats.align = asum / std::ceil(static_cast<double>(apairs) / cfg.batch);

    report.epochs.push_back(stats);
  }
  if (!store.values_finite()) throw NumericError("pretraining produced non-finite parameters");
  return report;
}

}  // namespace bildrl
