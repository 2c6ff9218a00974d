#include "bildrl/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "bildrl/error.hpp"
#include "bildrl/vocab.hpp"

namespace bildrl {

EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "bow") return EncoderKind::bow;
  if (s == "cnn") return EncoderKind::cnn;
  if (s == "gru") return EncoderKind::gru;
  if (s == "att") return EncoderKind::att;
  throw ConfigError("unknown encoder '" + s + "' (expected bow|cnn|gru|att)");
}

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::bow: return "bow";
    case EncoderKind::cnn: return "cnn";
    case EncoderKind::gru: return "gru";
    case EncoderKind::att: return "att";
  }
  return "?";
}

void EncoderConfig::validate() const {
  if (dim < 1) throw ConfigError("encoder: dim must be >= 1");
  if (hidden < 1) throw ConfigError("encoder: hidden must be >= 1");
  if (layers < 1) throw ConfigError("encoder: layers must be >= 1");
  if (seq_len < 1) throw ConfigError("encoder: seq-len must be >= 1");
  if (kernel < 1) throw ConfigError("encoder: kernel must be >= 1");
  if (pool < 1) throw ConfigError("encoder: pool must be >= 1");
  if (kind == EncoderKind::cnn && kernel > seq_len)
    throw ConfigError("encoder: kernel " + std::to_string(kernel) + " exceeds seq-len " +
                      std::to_string(seq_len));
}

std::vector<SlotShape> Encoder::slot_shapes(const EncoderConfig& cfg) {
  cfg.validate();
  std::vector<SlotShape> shapes;
  auto add = [&](const std::string& n, int r, int c) { shapes.push_back({n, r, c}); };

  switch (cfg.kind) {
    case EncoderKind::bow:
      add("enc.bow.Mb", cfg.dim, cfg.dim);
      return shapes;  // no reduction head
    case EncoderKind::gru:
    case EncoderKind::att:
      for (int l = 0; l < cfg.layers; ++l) {
        const int in = l == 0 ? cfg.dim : cfg.hidden;
        const std::string p = "enc.gru.l" + std::to_string(l) + ".";
        add(p + "Mz", cfg.hidden, in);
        add(p + "Nz", cfg.hidden, cfg.hidden);
        add(p + "bz", cfg.hidden, 1);
        add(p + "Mr", cfg.hidden, in);
        add(p + "Nr", cfg.hidden, cfg.hidden);
        add(p + "br", cfg.hidden, 1);
        add(p + "Ms", cfg.hidden, in);
        add(p + "Ns", cfg.hidden, cfg.hidden);
        add(p + "bs", cfg.hidden, 1);
      }
      if (cfg.kind == EncoderKind::att) {
        add("enc.att.Ma", cfg.hidden, cfg.hidden);
        add("enc.att.ba", cfg.hidden, 1);
      }
      break;
    case EncoderKind::cnn:
      for (int l = 0; l < cfg.layers; ++l) {
        const int in = l == 0 ? cfg.dim : cfg.hidden;
        const std::string p = "enc.cnn.l" + std::to_string(l) + ".";
        add(p + "Mc", cfg.hidden, cfg.kernel * in);
        add(p + "bc", cfg.hidden, 1);
      }
      break;
  }
  const int rh = cfg.reduction_hidden();
  add("enc.red.W1", rh, cfg.hidden);
  add("enc.red.b1", rh, 1);
  add("enc.red.W2", cfg.dim, rh);
  add("enc.red.b2", cfg.dim, 1);
  return shapes;
}

Encoder::Encoder(ParamStore& store, const EncoderConfig& cfg, Rng* init) : cfg_(cfg) {
  const auto shapes = slot_shapes(cfg_);
  for (const auto& sh : shapes) {
    if (init != nullptr) {
      Tensor t(sh.rows, sh.cols);
      if (sh.cols > 1) {  // matrices; biases (n x 1) stay zero
        const double bound = std::sqrt(6.0 / (sh.rows + sh.cols));
        for (double& v : t.data) v = init->uniform(-bound, bound);
      }
      store.add(sh.name, std::move(t));
    } else {
      if (!store.has(sh.name)) throw IntegrityError("encoder: missing parameter slot '" + sh.name + "'");
      const Tensor& v = store.value(sh.name);
      if (v.rows != sh.rows || v.cols != sh.cols)
        throw IntegrityError("encoder: slot '" + sh.name + "' has shape " + shape_str(v) + ", expected " +
                             std::to_string(sh.rows) + "x" + std::to_string(sh.cols));
    }
    slots_.push_back(&store.slot(sh.name));
  }

  // Bind typed pointers in the same order slot_shapes emitted them.
  std::size_t i = 0;
  switch (cfg_.kind) {
    case EncoderKind::bow:
      Mb_ = slots_[i++];
      return;
    case EncoderKind::gru:
    case EncoderKind::att:
      gru_.resize(static_cast<std::size_t>(cfg_.layers));
      for (auto& g : gru_) {
        g.Mz = slots_[i++];
        g.Nz = slots_[i++];
        g.bz = slots_[i++];
        g.Mr = slots_[i++];
        g.Nr = slots_[i++];
        g.br = slots_[i++];
        g.Ms = slots_[i++];
        g.Ns = slots_[i++];
        g.bs = slots_[i++];
      }
      if (cfg_.kind == EncoderKind::att) {
        Ma_ = slots_[i++];
        ba_ = slots_[i++];
      }
      break;
    case EncoderKind::cnn:
      for (int l = 0; l < cfg_.layers; ++l) {
        Slot* mc = slots_[i++];
        Slot* bc = slots_[i++];
        cnn_.emplace_back(mc, bc);
      }
      break;
  }
  W1_ = slots_[i++];
  b1_ = slots_[i++];
  W2_ = slots_[i++];
  b2_ = slots_[i++];
}

void Encoder::run_gru(const std::vector<Vec>& X, std::vector<GruLayerTape>& tape) const {
  const int T = static_cast<int>(X.size());
  const std::size_t H = static_cast<std::size_t>(cfg_.hidden);
  tape.resize(gru_.size());
  const std::vector<Vec>* layer_in = &X;
  const Vec h0(H, 0.0);
  for (std::size_t l = 0; l < gru_.size(); ++l) {
    const GruSlots& g = gru_[l];
    GruLayerTape& tp = tape[l];
    tp.z.resize(T);
    tp.r.resize(T);
    tp.nh.resize(T);
    tp.c.resize(T);
    tp.h.resize(T);
    for (int t = 0; t < T; ++t) {
      const Vec& x = (*layer_in)[static_cast<std::size_t>(t)];
      const Vec& hp = t == 0 ? h0 : tp.h[static_cast<std::size_t>(t - 1)];
      Vec z = matvec(g.Mz->value, x);
      Vec zr = matvec(g.Nz->value, hp);
      Vec r = matvec(g.Mr->value, x);
      Vec rr = matvec(g.Nr->value, hp);
      Vec c = matvec(g.Ms->value, x);
      Vec nh = matvec(g.Ns->value, hp);
      for (std::size_t i = 0; i < H; ++i) {
        z[i] = sigmoid(z[i] + zr[i] + g.bz->value.data[i]);
        r[i] = sigmoid(r[i] + rr[i] + g.br->value.data[i]);
        c[i] = std::tanh(c[i] + r[i] * nh[i] + g.bs->value.data[i]);
      }
      Vec h(H);
      for (std::size_t i = 0; i < H; ++i) h[i] = z[i] * c[i] + (1.0 - z[i]) * hp[i];
      tp.z[static_cast<std::size_t>(t)] = std::move(z);
      tp.r[static_cast<std::size_t>(t)] = std::move(r);
      tp.nh[static_cast<std::size_t>(t)] = std::move(nh);
      tp.c[static_cast<std::size_t>(t)] = std::move(c);
      tp.h[static_cast<std::size_t>(t)] = std::move(h);
    }
    layer_in = &tp.h;
  }
}

Vec Encoder::head_forward(const Vec& q, EncoderTrace* trace) const {
  Vec y1 = affine(q, W1_->value, b1_->value);
  for (double& v : y1) v = std::tanh(v);
  Vec out = affine(y1, W2_->value, b2_->value);
  if (trace) {
    trace->red_in = q;
    trace->red_p = std::move(y1);
  }
  return out;
}

Vec Encoder::head_backward(const EncoderTrace& trace, const Vec& d_out) const {
  add_outer(W2_->grad, d_out, trace.red_p);
  axpy(1.0, d_out, b2_->grad.data);
  Vec gp = matvec_t(W2_->value, d_out);
  for (std::size_t i = 0; i < gp.size(); ++i) gp[i] *= 1.0 - trace.red_p[i] * trace.red_p[i];
  add_outer(W1_->grad, gp, trace.red_in);
  axpy(1.0, gp, b1_->grad.data);
  return matvec_t(W1_->value, gp);
}

Vec Encoder::encode(const std::vector<int>& tokens, int true_len, const Tensor& emb,
                    EncoderTrace* trace) const {
  if (true_len < 1) throw ContractError("encoder: sequence has no non-pad tokens");
  if (true_len > static_cast<int>(tokens.size()))
    throw ContractError("encoder: true length " + std::to_string(true_len) + " exceeds sequence length " +
                        std::to_string(tokens.size()));
  if (emb.cols != cfg_.dim)
    throw ContractError("encoder: embedding dim " + std::to_string(emb.cols) + " does not match configured dim " +
                        std::to_string(cfg_.dim));
  const int T = true_len;
  std::vector<Vec> X;
  X.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const int id = tokens[static_cast<std::size_t>(t)];
    if (id == Vocabulary::kPad) throw ContractError("encoder: pad token inside the true-length prefix");
    if (id < 0 || id >= emb.rows)
      throw ContractError("encoder: token index " + std::to_string(id) + " out of embedding range");
    X.emplace_back(emb.row(id), emb.row(id) + cfg_.dim);
  }
  if (trace) {
    *trace = EncoderTrace{};
    trace->tokens.assign(tokens.begin(), tokens.begin() + T);
    trace->inputs = X;
  }

  switch (cfg_.kind) {
    case EncoderKind::bow: {
      Vec sum(static_cast<std::size_t>(cfg_.dim), 0.0);
      for (const Vec& x : X) axpy(1.0, x, sum);
      Vec out = matvec(Mb_->value, sum);
      if (trace) trace->bow_sum = std::move(sum);
      return out;
    }
    case EncoderKind::gru: {
      EncoderTrace local;
      EncoderTrace& tr = trace ? *trace : local;
      run_gru(X, tr.gru);
      const Vec q = tr.gru.back().h.back();
      return head_forward(q, trace);
    }
    case EncoderKind::att: {
      EncoderTrace local;
      EncoderTrace& tr = trace ? *trace : local;
      run_gru(X, tr.gru);
      const std::vector<Vec>& h = tr.gru.back().h;
      std::vector<Vec> u(h.size());
      for (std::size_t t = 0; t < h.size(); ++t) {
        u[t] = affine(h[t], Ma_->value, ba_->value);
        for (double& v : u[t]) v = std::tanh(v);
      }
      const Vec& uS = u.back();  // the last state's projection is the query
      Vec scores(u.size());
      for (std::size_t t = 0; t < u.size(); ++t) scores[t] = dot(u[t], uS);
      Vec a = softmax(scores);
      Vec q(static_cast<std::size_t>(cfg_.hidden), 0.0);
      for (std::size_t t = 0; t < u.size(); ++t) {
        const double w = cfg_.attention_single_weight ? a[t] : a[t] * a[t];
        axpy(w, u[t], q);
      }
      if (trace) {
        trace->att_u = std::move(u);
        trace->att_a = std::move(a);
      }
      return head_forward(q, trace);
    }
    case EncoderKind::cnn: {
      EncoderTrace local;
      EncoderTrace& tr = trace ? *trace : local;
      tr.cnn_in.clear();
      tr.cnn.clear();
      std::vector<Vec> cur = X;
      for (int l = 0; l < cfg_.layers; ++l) {
        const int m = static_cast<int>(cur.size());
        if (m < cfg_.kernel)
          throw ContractError("cnn: layer " + std::to_string(l) + " input length " + std::to_string(m) +
                              " shorter than kernel " + std::to_string(cfg_.kernel));
        tr.cnn_in.push_back(cur);
        const Tensor& Mc = cnn_[static_cast<std::size_t>(l)].first->value;
        const Tensor& bc = cnn_[static_cast<std::size_t>(l)].second->value;
        const int w = static_cast<int>(cur[0].size());
        const int conv_len = m - cfg_.kernel + 1;
        CnnLayerTape tape;
        tape.y.resize(static_cast<std::size_t>(conv_len));
        Vec window(static_cast<std::size_t>(cfg_.kernel * w));
        for (int t = 0; t < conv_len; ++t) {
          for (int i = 0; i < cfg_.kernel; ++i)
            std::copy(cur[static_cast<std::size_t>(t + i)].begin(), cur[static_cast<std::size_t>(t + i)].end(),
                      window.begin() + static_cast<std::ptrdiff_t>(i) * w);
          Vec y = affine(window, Mc, bc);
          for (double& v : y) v = std::tanh(v);
          tape.y[static_cast<std::size_t>(t)] = std::move(y);
        }
        if (l + 1 < cfg_.layers) {
          // max-pool, window = stride = pool, ceiling on the last window
          const int nw = (conv_len + cfg_.pool - 1) / cfg_.pool;
          std::vector<Vec> pooled(static_cast<std::size_t>(nw));
          tape.argmax.resize(static_cast<std::size_t>(nw));
          for (int j = 0; j < nw; ++j) {
            const int lo = j * cfg_.pool;
            const int hi = std::min(conv_len, lo + cfg_.pool);
            Vec best = tape.y[static_cast<std::size_t>(lo)];
            std::vector<int> arg(static_cast<std::size_t>(cfg_.hidden), lo);
            for (int t = lo + 1; t < hi; ++t)
              for (int d = 0; d < cfg_.hidden; ++d)
                if (tape.y[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)] >
                    best[static_cast<std::size_t>(d)]) {
                  best[static_cast<std::size_t>(d)] = tape.y[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)];
                  arg[static_cast<std::size_t>(d)] = t;
                }
            pooled[static_cast<std::size_t>(j)] = std::move(best);
            tape.argmax[static_cast<std::size_t>(j)] = std::move(arg);
          }
          cur = std::move(pooled);
        } else {
          // mean-pool after the last layer
          Vec q(static_cast<std::size_t>(cfg_.hidden), 0.0);
          for (const Vec& y : tape.y) axpy(1.0, y, q);
          const double inv = 1.0 / static_cast<double>(conv_len);
          for (double& v : q) v *= inv;
          cur = {std::move(q)};
        }
        tr.cnn.push_back(std::move(tape));
      }
      return head_forward(cur[0], trace);
    }
  }
  throw ContractError("encoder: unreachable kind");
}

void Encoder::backward_gru(const EncoderTrace& trace, std::vector<Vec>& gh_top, Tensor* d_emb) const {
  const int T = static_cast<int>(trace.tokens.size());
  const std::size_t H = static_cast<std::size_t>(cfg_.hidden);
  const Vec h0(H, 0.0);
  std::vector<Vec> gh = std::move(gh_top);  // grads wrt current layer's h_t
  for (int l = static_cast<int>(gru_.size()) - 1; l >= 0; --l) {
    const GruSlots& g = gru_[static_cast<std::size_t>(l)];
    const GruLayerTape& tp = trace.gru[static_cast<std::size_t>(l)];
    const bool bottom = l == 0;
    std::vector<Vec> gx(static_cast<std::size_t>(T));
    const std::size_t in_dim = bottom ? static_cast<std::size_t>(cfg_.dim) : H;
    for (auto& v : gx) v.assign(in_dim, 0.0);

    Vec carry(H, 0.0);  // gradient flowing into h_{t-1}
    for (int t = T - 1; t >= 0; --t) {
      const std::size_t st = static_cast<std::size_t>(t);
      Vec ghc = gh[st];
      axpy(1.0, carry, ghc);
      const Vec& hp = t == 0 ? h0 : tp.h[st - 1];
      const Vec& x = bottom ? trace.inputs[st] : trace.gru[static_cast<std::size_t>(l - 1)].h[st];

      Vec gz(H), gc(H), ghp(H);
      for (std::size_t i = 0; i < H; ++i) {
        const double z = tp.z[st][i], c = tp.c[st][i];
        gz[i] = ghc[i] * (c - hp[i]) * z * (1.0 - z);
        gc[i] = ghc[i] * z * (1.0 - c * c);  // through tanh already
        ghp[i] = ghc[i] * (1.0 - z);
      }
      // gc is d/d(pre-tanh candidate)
      Vec gr(H), gnh(H);
      for (std::size_t i = 0; i < H; ++i) {
        const double r = tp.r[st][i];
        gr[i] = gc[i] * tp.nh[st][i] * r * (1.0 - r);
        gnh[i] = gc[i] * r;
      }

      add_outer(g.Mz->grad, gz, x);
      add_outer(g.Nz->grad, gz, hp);
      axpy(1.0, gz, g.bz->grad.data);
      add_outer(g.Mr->grad, gr, x);
      add_outer(g.Nr->grad, gr, hp);
      axpy(1.0, gr, g.br->grad.data);
      add_outer(g.Ms->grad, gc, x);
      add_outer(g.Ns->grad, gnh, hp);
      axpy(1.0, gc, g.bs->grad.data);

      axpy(1.0, matvec_t(g.Mz->value, gz), gx[st]);
      axpy(1.0, matvec_t(g.Mr->value, gr), gx[st]);
      axpy(1.0, matvec_t(g.Ms->value, gc), gx[st]);

      axpy(1.0, matvec_t(g.Nz->value, gz), ghp);
      axpy(1.0, matvec_t(g.Nr->value, gr), ghp);
      axpy(1.0, matvec_t(g.Ns->value, gnh), ghp);
      carry = std::move(ghp);
    }
    if (bottom) {
      if (d_emb)
        for (int t = 0; t < T; ++t)
          axpy(1.0, gx[static_cast<std::size_t>(t)].data(), d_emb->row(trace.tokens[static_cast<std::size_t>(t)]),
               gx[static_cast<std::size_t>(t)].size());
    } else {
      gh = std::move(gx);
    }
  }
}

void Encoder::backward(const EncoderTrace& trace, const Vec& d_out, Tensor* d_emb) const {
  if (static_cast<int>(d_out.size()) != cfg_.dim)
    throw ContractError("encoder backward: gradient size " + std::to_string(d_out.size()) +
                        " does not match dim " + std::to_string(cfg_.dim));
  const int T = static_cast<int>(trace.tokens.size());
  if (T == 0) throw ContractError("encoder backward: empty trace");

  switch (cfg_.kind) {
    case EncoderKind::bow: {
      add_outer(Mb_->grad, d_out, trace.bow_sum);
      if (d_emb) {
        const Vec gw = matvec_t(Mb_->value, d_out);
        for (const int tok : trace.tokens) axpy(1.0, gw.data(), d_emb->row(tok), gw.size());
      }
      return;
    }
    case EncoderKind::gru: {
      const Vec gq = head_backward(trace, d_out);
      std::vector<Vec> gh(static_cast<std::size_t>(T));
      for (auto& v : gh) v.assign(static_cast<std::size_t>(cfg_.hidden), 0.0);
      gh.back() = gq;
      backward_gru(trace, gh, d_emb);
      return;
    }
    case EncoderKind::att: {
      const Vec gq = head_backward(trace, d_out);
      const std::vector<Vec>& u = trace.att_u;
      const Vec& a = trace.att_a;
      const std::size_t n = u.size();
      std::vector<Vec> gu(n);
      for (auto& v : gu) v.assign(static_cast<std::size_t>(cfg_.hidden), 0.0);
      Vec ga(n);
      for (std::size_t t = 0; t < n; ++t) {
        const double udotg = dot(u[t], gq);
        if (cfg_.attention_single_weight) {
          axpy(a[t], gq, gu[t]);
          ga[t] = udotg;
        } else {
          axpy(a[t] * a[t], gq, gu[t]);
          ga[t] = 2.0 * a[t] * udotg;
        }
      }
      // softmax backward
      double dot_ag = 0.0;
      for (std::size_t t = 0; t < n; ++t) dot_ag += a[t] * ga[t];
      Vec guS(static_cast<std::size_t>(cfg_.hidden), 0.0);
      for (std::size_t t = 0; t < n; ++t) {
        const double ge = a[t] * (ga[t] - dot_ag);
        axpy(ge, u.back(), gu[t]);  // e_t = u_t . u_S
        axpy(ge, u[t], guS);
      }
      axpy(1.0, guS, gu.back());  // u_S is u_last

      std::vector<Vec> gh(n);
      for (std::size_t t = 0; t < n; ++t) {
        Vec gpre(static_cast<std::size_t>(cfg_.hidden));
        for (std::size_t i = 0; i < gpre.size(); ++i) gpre[i] = gu[t][i] * (1.0 - u[t][i] * u[t][i]);
        add_outer(Ma_->grad, gpre, trace.gru.back().h[t]);
        axpy(1.0, gpre, ba_->grad.data);
        gh[t] = matvec_t(Ma_->value, gpre);
      }
      backward_gru(trace, gh, d_emb);
      return;
    }
    case EncoderKind::cnn: {
      Vec gq = head_backward(trace, d_out);
      // Gradient wrt the current layer's OUTPUT sequence, walked backward.
      std::vector<Vec> gout = {std::move(gq)};
      for (int l = cfg_.layers - 1; l >= 0; --l) {
        const CnnLayerTape& tape = trace.cnn[static_cast<std::size_t>(l)];
        const std::vector<Vec>& in_seq = trace.cnn_in[static_cast<std::size_t>(l)];
        const int conv_len = static_cast<int>(tape.y.size());
        const int w = static_cast<int>(in_seq[0].size());
        std::vector<Vec> gy(static_cast<std::size_t>(conv_len));
        for (auto& v : gy) v.assign(static_cast<std::size_t>(cfg_.hidden), 0.0);
        if (l + 1 < cfg_.layers) {
          for (std::size_t j = 0; j < tape.argmax.size(); ++j)
            for (int d = 0; d < cfg_.hidden; ++d)
              gy[static_cast<std::size_t>(tape.argmax[j][static_cast<std::size_t>(d)])]
                [static_cast<std::size_t>(d)] += gout[j][static_cast<std::size_t>(d)];
        } else {
          const double inv = 1.0 / static_cast<double>(conv_len);
          for (int t = 0; t < conv_len; ++t) axpy(inv, gout[0], gy[static_cast<std::size_t>(t)]);
        }
        Slot* Mc = cnn_[static_cast<std::size_t>(l)].first;
        Slot* bc = cnn_[static_cast<std::size_t>(l)].second;
        std::vector<Vec> gin(in_seq.size());
        for (auto& v : gin) v.assign(static_cast<std::size_t>(w), 0.0);
        Vec window(static_cast<std::size_t>(cfg_.kernel * w));
        for (int t = 0; t < conv_len; ++t) {
          Vec gpre(static_cast<std::size_t>(cfg_.hidden));
          const Vec& y = tape.y[static_cast<std::size_t>(t)];
          for (std::size_t i = 0; i < gpre.size(); ++i)
            gpre[i] = gy[static_cast<std::size_t>(t)][i] * (1.0 - y[i] * y[i]);
          for (int i = 0; i < cfg_.kernel; ++i)
            std::copy(in_seq[static_cast<std::size_t>(t + i)].begin(),
                      in_seq[static_cast<std::size_t>(t + i)].end(),
                      window.begin() + static_cast<std::ptrdiff_t>(i) * w);
          add_outer(Mc->grad, gpre, window);
          axpy(1.0, gpre, bc->grad.data);
          const Vec gwin = matvec_t(Mc->value, gpre);
          for (int i = 0; i < cfg_.kernel; ++i)
            axpy(1.0, gwin.data() + static_cast<std::ptrdiff_t>(i) * w,
                 gin[static_cast<std::size_t>(t + i)].data(), static_cast<std::size_t>(w));
        }
        gout = std::move(gin);
      }
      if (d_emb)
        for (int t = 0; t < T; ++t)
          axpy(1.0, gout[static_cast<std::size_t>(t)].data(), d_emb->row(trace.tokens[static_cast<std::size_t>(t)]),
               gout[static_cast<std::size_t>(t)].size());
      return;
    }
  }
}

}  // namespace bildrl
