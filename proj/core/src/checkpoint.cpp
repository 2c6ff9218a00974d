#include "bildrl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "bildrl/embedding.hpp"
#include "bildrl/encoders.hpp"
#include "bildrl/error.hpp"

namespace bildrl {

static_assert(std::numeric_limits<float>::is_iec559, "needs IEEE-754 floats");

F32Tensor F32Tensor::from(const Tensor& t) {
  F32Tensor f(static_cast<std::uint32_t>(t.rows), static_cast<std::uint32_t>(t.cols));
  for (std::size_t i = 0; i < t.data.size(); ++i) f.data[i] = static_cast<float>(t.data[i]);
  return f;
}

Tensor F32Tensor::to_double() const {
  Tensor t(static_cast<int>(rows), static_cast<int>(cols));
  for (std::size_t i = 0; i < data.size(); ++i) t.data[i] = static_cast<double>(data[i]);
  return t;
}

const std::string* Checkpoint::find(const std::string& key) const {
  for (const auto& [k, v] : config)
    if (k == key) return &v;
  return nullptr;
}

const std::string& Checkpoint::require(const std::string& key) const {
  const std::string* v = find(key);
  if (!v) throw IntegrityError("checkpoint: missing config key '" + key + "'");
  return *v;
}

void Checkpoint::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : config) {
    if (k == key) {
      v = value;
      return;
    }
  }
  config.emplace_back(key, value);
}

namespace {

constexpr char kMagic[4] = {'B', 'D', 'R', 'L'};
constexpr std::uint32_t kMaxString = 64u << 20;
constexpr std::uint32_t kMaxDim = 1u << 24;
constexpr std::uint32_t kMaxRecords = 1u << 20;

class Writer {
 public:
  Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    bytes(b, 4);
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void close() {
    out_.flush();
    if (!out_) throw IoError("write failed for '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path + "'");
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw IoError("checkpoint '" + path_ + "': truncated at offset " + std::to_string(offset_));
    offset_ += n;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > kMaxString) throw IoError("checkpoint '" + path_ + "': implausible string length at offset " +
                                      std::to_string(offset_ - 4));
    std::string s(n, '\0');
    if (n) bytes(s.data(), n);
    return s;
  }
  const std::string& path() const { return path_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t offset_ = 0;
};

int config_int(const Checkpoint& c, const std::string& key) {
  const std::string& s = c.require(key);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IntegrityError("checkpoint: config key '" + key + "' has non-integer value '" + s + "'");
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(ckpt.version);
  w.u32(static_cast<std::uint32_t>(ckpt.config.size()));
  for (const auto& [k, v] : ckpt.config) w.str(k + "=" + v);
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    w.str(name);
    w.u32(t.rows);
    w.u32(t.cols);
    for (const float v : t.data) w.f32(v);
  }
  w.close();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("checkpoint '" + path + "': bad magic at offset 0");
  Checkpoint c;
  c.version = r.u32();
  if (c.version != Checkpoint::kVersion)
    throw IoError("checkpoint '" + path + "': unsupported version " + std::to_string(c.version));

  const std::uint32_t nlines = r.u32();
  if (nlines > kMaxRecords) throw IoError("checkpoint '" + path + "': implausible config line count");
  for (std::uint32_t i = 0; i < nlines; ++i) {
    const std::string line = r.str();
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw IntegrityError("checkpoint '" + path + "': config line " + std::to_string(i + 1) +
                           " has no '=' separator");
    c.config.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }

  const std::uint32_t ntensors = r.u32();
  if (ntensors > kMaxRecords) throw IoError("checkpoint '" + path + "': implausible tensor count");
  for (std::uint32_t i = 0; i < ntensors; ++i) {
    const std::string name = r.str();
    F32Tensor t;
    t.rows = r.u32();
    t.cols = r.u32();
    if (t.rows > kMaxDim || t.cols > kMaxDim)
      throw IoError("checkpoint '" + path + "': implausible tensor shape for '" + name + "'");
    t.data.resize(static_cast<std::size_t>(t.rows) * t.cols);
    for (float& v : t.data) v = r.f32();
    if (!c.tensors.emplace(name, std::move(t)).second)
      throw IntegrityError("checkpoint '" + path + "': duplicate tensor '" + name + "'");
  }
  validate_checkpoint(c);
  return c;
}

void validate_checkpoint(const Checkpoint& c) {
  if (c.find("format") == nullptr || *c.find("format") != "bildrl-model")
    throw IntegrityError("checkpoint: missing or unknown format marker");

  EncoderConfig enc;
  enc.kind = encoder_kind_from_string(c.require("encoder"));
  enc.dim = config_int(c, "dim");
  enc.hidden = config_int(c, "hidden");
  enc.layers = config_int(c, "layers");
  enc.seq_len = config_int(c, "seq_len");
  enc.kernel = config_int(c, "kernel");
  enc.pool = config_int(c, "pool");
  enc.attention_single_weight = config_int(c, "attention_single_weight") != 0;
  try {
    enc.validate();
  } catch (const ConfigError& e) {
    throw IntegrityError(std::string("checkpoint: invalid encoder config: ") + e.what());
  }

  const std::string& lang_a = c.require("lang_a");
  const std::string& lang_b = c.require("lang_b");

  auto expect = [&](const std::string& name, int rows, int cols) {
    auto it = c.tensors.find(name);
    if (it == c.tensors.end()) throw IntegrityError("checkpoint: missing tensor '" + name + "'");
    if (static_cast<int>(it->second.rows) != rows || static_cast<int>(it->second.cols) != cols)
      throw IntegrityError("checkpoint: tensor '" + name + "' has shape " + std::to_string(it->second.rows) +
                           "x" + std::to_string(it->second.cols) + ", expected " + std::to_string(rows) + "x" +
                           std::to_string(cols));
  };

  std::set<std::string> expected;
  for (const std::string& lang : {lang_a, lang_b}) {
    const std::string& joined = c.require("vocab." + lang);
    std::size_t vocab_size = joined.empty() ? 0 : 1;
    for (const char ch : joined) vocab_size += ch == ' ';
    expect(emb_slot_name(lang, false), static_cast<int>(vocab_size), enc.dim);
    expected.insert(emb_slot_name(lang, false));
    if (c.tensors.count(emb_slot_name(lang, true))) {
      expect(emb_slot_name(lang, true), static_cast<int>(vocab_size), enc.dim);
      expected.insert(emb_slot_name(lang, true));
    }
  }
  for (const auto& sh : Encoder::slot_shapes(enc)) {
    expect(sh.name, sh.rows, sh.cols);
    expected.insert(sh.name);
  }
  // The MLP head of a paraphrase classifier may ride along in eval artifacts.
  for (const auto& [name, t] : c.tensors)
    if (!expected.count(name) && name.rfind("mlp.", 0) != 0)
      throw IntegrityError("checkpoint: unexpected tensor '" + name + "'");
}

}  // namespace bildrl
