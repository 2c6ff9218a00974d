#include "bildrl/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bildrl/error.hpp"

namespace bildrl {

Metric metric_from_string(const std::string& s) {
  if (s == "sq_l2") return Metric::sq_l2;
  if (s == "cosine") return Metric::cosine;
  throw ConfigError("unknown metric '" + s + "' (expected sq_l2|cosine)");
}

std::string to_string(Metric m) { return m == Metric::sq_l2 ? "sq_l2" : "cosine"; }

double row_distance(const Vec& query, const Tensor& emb, int row, Metric metric) {
  if (row < 0 || row >= emb.rows)
    throw EvalError("retrieval: row " + std::to_string(row) + " out of range for " + shape_str(emb));
  const double* r = emb.row(row);
  const std::size_t k = query.size();
  if (k != static_cast<std::size_t>(emb.cols))
    throw EvalError("retrieval: query dim " + std::to_string(k) + " does not match embeddings " + shape_str(emb));
  if (metric == Metric::sq_l2) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double d = query[i] - r[i];
      s += d * d;
    }
    return s;
  }
  const double qq = dot(query.data(), query.data(), k);
  const double rr = dot(r, r, k);
  const double qr = dot(query.data(), r, k);
  const double denom = std::sqrt(qq) * std::sqrt(rr);
  if (denom == 0.0) return 1.0;  // zero vector: treat as orthogonal
  return 1.0 - qr / denom;
}

int rank_target(const Vec& query, int target, const std::vector<int>& candidates, const Tensor& emb,
                Metric metric) {
  if (candidates.empty()) throw EvalError("retrieval: empty candidate set");
  if (std::find(candidates.begin(), candidates.end(), target) == candidates.end())
    throw EvalError("retrieval: target index " + std::to_string(target) + " not in the candidate set");
  const double dt = row_distance(query, emb, target, metric);
  int rank = 1;
  for (const int c : candidates) {
    if (c == target) continue;
    const double d = row_distance(query, emb, c, metric);
    if (d < dt || (d == dt && c < target)) ++rank;
  }
  return rank;
}

RetrievalMetrics retrieval_metrics(const std::vector<int>& ranks) {
  if (ranks.empty()) throw EvalError("retrieval: no ranks to aggregate");
  RetrievalMetrics m;
  double rr = 0.0;
  int hit1 = 0, hit10 = 0;
  for (const int r : ranks) {
    if (r < 1) throw EvalError("retrieval: rank must be >= 1, got " + std::to_string(r));
    hit1 += r == 1;
    hit10 += r <= 10;
    rr += 1.0 / r;
  }
  const double n = static_cast<double>(ranks.size());
  m.p_at_1 = 100.0 * hit1 / n;
  m.p_at_10 = 100.0 * hit10 / n;
  m.mrr = rr / n;
  return m;
}

namespace {

// Nearest candidate to the query; ties prefer the lower vocabulary index.
int nearest_word(const Vec& query, const std::vector<int>& candidates, const Tensor& emb, Metric metric) {
  if (candidates.empty()) throw EvalError("retrieval: empty candidate set");
  int best = -1;
  double best_d = 0.0;
  for (const int c : candidates) {
    const double d = row_distance(query, emb, c, metric);
    if (best < 0 || d < best_d || (d == best_d && c < best)) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

int mono_retrieval_rank(const Vec& query, int mono_word, int true_target,
                        const std::vector<int>& def_candidates, const Tensor& def_emb,
                        const std::vector<int>& target_candidates, const Tensor& target_emb, Metric metric) {
  if (mono_word < 0 || mono_word >= def_emb.rows)
    throw EvalError("two-stage retrieval: mono word index " + std::to_string(mono_word) + " out of vocabulary");
  const int stage1 = nearest_word(query, def_candidates, def_emb, metric);
  const Vec stage2_query(def_emb.row(stage1), def_emb.row(stage1) + def_emb.cols);
  return rank_target(stage2_query, true_target, target_candidates, target_emb, metric);
}

int pick_paraphrase_negative(int source_word, const std::vector<int>& candidates, const Tensor& emb,
                             int nn, Rng& rng) {
  if (nn < 1) throw ContractError("paraphrase negatives: nn must be >= 1");
  const Vec src(emb.row(source_word), emb.row(source_word) + emb.cols);
  std::vector<std::pair<double, int>> scored;
  scored.reserve(candidates.size());
  for (const int c : candidates) {
    if (c == source_word) continue;
    scored.emplace_back(row_distance(src, emb, c, Metric::sq_l2), c);
  }
  if (static_cast<int>(scored.size()) < nn)
    throw EvalError("paraphrase negatives: need " + std::to_string(nn) + " neighbor candidates, have " +
                    std::to_string(scored.size()));
  std::sort(scored.begin(), scored.end());  // (distance, index): ties prefer lower index
  return scored[static_cast<std::size_t>(rng.uniform_int(nn))].second;
}

// ---- MLP -----------------------------------------------------------------

namespace {

Vec mlp_logits(const Tensor& W1, const Tensor& b1, const Tensor& W2, const Tensor& b2, const Vec& x,
               Vec* hidden_out) {
  Vec h = affine(x, W1, b1);
  for (double& v : h) v = std::tanh(v);
  Vec logits = affine(h, W2, b2);
  if (hidden_out) *hidden_out = std::move(h);
  return logits;
}

}  // namespace

double mlp_predict_prob(const MlpClassifier& clf, const Vec& x) {
  const Vec logits = mlp_logits(clf.W1, clf.b1, clf.W2, clf.b2, x, nullptr);
  const Vec p = softmax(logits);
  return p[1];
}

int mlp_predict(const MlpClassifier& clf, const Vec& x) { return mlp_predict_prob(clf, x) >= 0.5 ? 1 : 0; }

void register_mlp(ParamStore& store, int input_dim, int hidden, Rng& rng) {
  if (input_dim < 1 || hidden < 1) throw ConfigError("mlp: dimensions must be >= 1");
  auto init = [&](int r, int c) {
    Tensor t(r, c);
    const double bound = std::sqrt(6.0 / (r + c));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
    return t;
  };
  store.add("mlp.W1", init(hidden, input_dim));
  store.add("mlp.b1", Tensor(hidden, 1));
  store.add("mlp.W2", init(2, hidden));
  store.add("mlp.b2", Tensor(2, 1));
}

MlpClassifier extract_mlp(const ParamStore& store) {
  MlpClassifier clf;
  clf.W1 = store.slot("mlp.W1").value;
  clf.b1 = store.slot("mlp.b1").value;
  clf.W2 = store.slot("mlp.W2").value;
  clf.b2 = store.slot("mlp.b2").value;
  clf.hidden = clf.W1.rows;
  clf.input_dim = clf.W1.cols;
  return clf;
}

double mlp_loss_grad(ParamStore& store, const std::vector<const Vec*>& xs, const std::vector<int>& ys,
                     bool compute_grads, double scale) {
  if (xs.empty() || xs.size() != ys.size()) throw ContractError("mlp: bad batch");
  Slot& W1 = store.slot("mlp.W1");
  Slot& b1 = store.slot("mlp.b1");
  Slot& W2 = store.slot("mlp.W2");
  Slot& b2 = store.slot("mlp.b2");
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(xs.size());
  for (std::size_t n = 0; n < xs.size(); ++n) {
    Vec h;
    const Vec logits = mlp_logits(W1.value, b1.value, W2.value, b2.value, *xs[n], &h);
    const Vec p = softmax(logits);
    const int y = ys[n];
    if (y != 0 && y != 1) throw ContractError("mlp: label must be 0 or 1");
    loss -= std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
    if (!compute_grads) continue;
    Vec glogits = p;
    glogits[static_cast<std::size_t>(y)] -= 1.0;
    for (double& v : glogits) v *= scale * inv;
    add_outer(W2.grad, glogits, h);
    axpy(1.0, glogits, b2.grad.data);
    Vec gh = matvec_t(W2.value, glogits);
    for (std::size_t i = 0; i < gh.size(); ++i) gh[i] *= 1.0 - h[i] * h[i];
    add_outer(W1.grad, gh, *xs[n]);
    axpy(1.0, gh, b1.grad.data);
  }
  return loss * inv;
}

MlpClassifier train_paraphrase_classifier(const std::vector<Vec>& x_train, const std::vector<int>& y_train,
                                          const std::vector<Vec>& x_valid, const std::vector<int>& y_valid,
                                          int hidden, const OptConfig& opt, int batch_size, int max_epochs,
                                          int patience, std::uint64_t seed, MlpTrainInfo* info) {
  if (x_train.empty() || x_valid.empty()) throw EvalError("paraphrase classifier: empty train or valid split");
  if (x_train.size() != y_train.size() || x_valid.size() != y_valid.size())
    throw ContractError("paraphrase classifier: feature/label size mismatch");
  if (batch_size < 1 || max_epochs < 1 || patience < 1)
    throw ConfigError("paraphrase classifier: batch/epochs/patience must be >= 1");
  const bool has0 = std::find(y_train.begin(), y_train.end(), 0) != y_train.end();
  const bool has1 = std::find(y_train.begin(), y_train.end(), 1) != y_train.end();
  if (!has0 || !has1) throw EvalError("paraphrase classifier: training labels contain a single class");

  ParamStore store;
  Rng root(seed);
  Rng init = root.fork(0);
  register_mlp(store, static_cast<int>(x_train[0].size()), hidden, init);
  Rng shuffle_rng = root.fork(1);

  std::vector<std::size_t> order(x_train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  MlpClassifier best = extract_mlp(store);
  double best_acc = -1.0;
  int best_epoch = 0;
  int since_improve = 0;
  int epoch = 0;
  std::vector<const Vec*> xb;
  std::vector<int> yb;
  for (; epoch < max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
      xb.clear();
      yb.clear();
      for (std::size_t i = start; i < end; ++i) {
        xb.push_back(&x_train[order[i]]);
        yb.push_back(y_train[order[i]]);
      }
      mlp_loss_grad(store, xb, yb, true, 1.0);
      amsgrad_step(store, opt);
    }
    const MlpClassifier cur = extract_mlp(store);
    int correct = 0;
    for (std::size_t i = 0; i < x_valid.size(); ++i) correct += mlp_predict(cur, x_valid[i]) == y_valid[i];
    const double acc = static_cast<double>(correct) / static_cast<double>(x_valid.size());
    if (acc > best_acc) {
      best_acc = acc;
      best = cur;
      best_epoch = epoch + 1;
      since_improve = 0;
    } else if (++since_improve >= patience) {
      ++epoch;
      break;
    }
  }
  if (info) {
    info->epochs_run = epoch;
    info->best_epoch = best_epoch;
    info->best_valid_acc = best_acc;
  }
  return best;
}

BinaryScores binary_scores(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.empty() || predicted.size() != truth.size())
    throw EvalError("scores: prediction/truth size mismatch");
  int tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    correct += predicted[i] == truth[i];
    tp += predicted[i] == 1 && truth[i] == 1;
    fp += predicted[i] == 1 && truth[i] == 0;
    fn += predicted[i] == 0 && truth[i] == 1;
  }
  BinaryScores s;
  s.accuracy = static_cast<double>(correct) / static_cast<double>(predicted.size());
  s.f1 = (2 * tp + fp + fn) == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  return s;
}

}  // namespace bildrl
