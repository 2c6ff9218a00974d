#include "bildrl/embedding.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "bildrl/error.hpp"

namespace bildrl {

Tensor& EmbeddingSpace::input(const std::string& lang) const {
  if (lang == lang_a && in_a) return *in_a;
  if (lang == lang_b && in_b) return *in_b;
  throw ContractError("embedding space: no input matrix for language '" + lang + "'");
}

Tensor& EmbeddingSpace::output(const std::string& lang) const {
  if (lang == lang_a && out_a) return *out_a;
  if (lang == lang_b && out_b) return *out_b;
  throw ContractError("embedding space: no output matrix for language '" + lang + "'");
}

namespace {

Tensor init_embedding_matrix(int V, int k, Rng& rng) {
  Tensor t(V, k);
  const double bound = std::sqrt(6.0 / (V + k));
  for (int i = 1; i < V; ++i)  // row 0 (<pad>) stays zero
    for (int j = 0; j < k; ++j) t(i, j) = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

EmbeddingSpace register_embeddings(ParamStore& store, const std::string& lang_a, int vocab_a,
                                   const std::string& lang_b, int vocab_b, int dim, Rng& rng,
                                   bool with_output) {
  if (!valid_language_tag(lang_a) || !valid_language_tag(lang_b))
    throw ConfigError("embedding space: bad language tags '" + lang_a + "', '" + lang_b + "'");
  if (lang_a == lang_b) throw ConfigError("embedding space: languages must differ, got '" + lang_a + "' twice");
  if (dim < 1) throw ConfigError("embedding space: dimension must be >= 1");
  if (vocab_a < 2 || vocab_b < 2) throw ConfigError("embedding space: vocabularies must include the specials");

  EmbeddingSpace s;
  s.lang_a = lang_a;
  s.lang_b = lang_b;
  s.dim = dim;
  s.in_a = &store.add(emb_slot_name(lang_a, false), init_embedding_matrix(vocab_a, dim, rng));
  s.in_b = &store.add(emb_slot_name(lang_b, false), init_embedding_matrix(vocab_b, dim, rng));
  if (with_output) {
    s.out_a = &store.add(emb_slot_name(lang_a, true), init_embedding_matrix(vocab_a, dim, rng));
    s.out_b = &store.add(emb_slot_name(lang_b, true), init_embedding_matrix(vocab_b, dim, rng));
  }
  return s;
}

EmbeddingSpace bind_embeddings(ParamStore& store, const std::string& lang_a, const std::string& lang_b) {
  EmbeddingSpace s;
  s.lang_a = lang_a;
  s.lang_b = lang_b;
  s.in_a = &store.value(emb_slot_name(lang_a, false));
  s.in_b = &store.value(emb_slot_name(lang_b, false));
  s.dim = s.in_a->cols;
  if (store.has(emb_slot_name(lang_a, true))) s.out_a = &store.value(emb_slot_name(lang_a, true));
  if (store.has(emb_slot_name(lang_b, true))) s.out_b = &store.value(emb_slot_name(lang_b, true));
  return s;
}

void export_embeddings_text(std::ostream& out, const Vocabulary& va, const Vocabulary& vb,
                            const EmbeddingSpace& space) {
  const int total = va.size() + vb.size();
  out << total << ' ' << space.dim << '\n';
  out << std::fixed << std::setprecision(6);
  auto dump = [&](const Vocabulary& v, const Tensor& m) {
    for (int i = 0; i < v.size(); ++i) {
      out << v.language << ':' << v.token(i);
      for (int j = 0; j < m.cols; ++j) out << ' ' << m(i, j);
      out << '\n';
    }
  };
  dump(va, space.input(va.language));
  dump(vb, space.input(vb.language));
}

TextEmbeddings import_embeddings_text(std::istream& in, const std::string& where) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError(where + ":" + std::to_string(lineno) + ": " + msg);
  };

  if (!next_line()) throw ParseError(where + ": empty embedding file");
  std::istringstream header(line);
  long long total = 0;
  int dim = 0;
  if (!(header >> total >> dim) || total < 1 || dim < 1)
    throw fail("expected header 'V k' with positive integers, got '" + line + "'");
  std::string extra;
  if (header >> extra) throw fail("trailing content in header");

  TextEmbeddings result;
  result.dim = dim;
  result.entries.reserve(static_cast<std::size_t>(total));
  for (long long i = 0; i < total; ++i) {
    if (!next_line()) throw ParseError(where + ": expected " + std::to_string(total) + " vectors, found " +
                                       std::to_string(i));
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) throw fail("missing 'lang:token' key");
    const std::size_t colon = key.find(':');
    if (colon == std::string::npos) throw fail("key '" + key + "' is not of the form lang:token");
    TextEmbeddings::Entry e;
    e.lang = key.substr(0, colon);
    e.token = key.substr(colon + 1);
    if (!valid_language_tag(e.lang)) throw fail("unknown language tag '" + e.lang + "'");
    if (e.token.empty()) throw fail("empty token in key '" + key + "'");
    e.vec.reserve(static_cast<std::size_t>(dim));
    double x = 0.0;
    while (ss >> x) e.vec.push_back(x);
    if (!ss.eof()) throw fail("non-numeric vector component");
    if (static_cast<int>(e.vec.size()) != dim)
      throw fail("expected " + std::to_string(dim) + " components, got " + std::to_string(e.vec.size()));
    result.entries.push_back(std::move(e));
  }
  return result;
}

}  // namespace bildrl
