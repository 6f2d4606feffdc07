// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "reczero/errors.hpp"

namespace reczero {
namespace {

constexpr char kMagic[8] = {'R', 'Z', 'C', 'K', 'P', 'T', '\0', '\1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  template <class T>
  void put(T v) {
    v = to_le(v);
    os_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_reals(const std::vector<double>& xs) {
    put<std::uint64_t>(xs.size());
    for (double x : xs) put(x);
  }
  void put_bytes(const std::string& s) {
    put<std::uint64_t>(s.size());
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  template <class T>
  T get() {
    T v{};
    is_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is_) throw ConfigError("truncated checkpoint", "checkpoint");
    return to_le(v);
  }
  std::vector<double> get_reals(std::uint64_t limit) {
    const auto n = get<std::uint64_t>();
    if (n > limit) throw ConfigError("implausible array length", "checkpoint");
    std::vector<double> xs(n);
    for (double& x : xs) x = get<double>();
    return xs;
  }
  std::string get_bytes() {
    const auto n = get<std::uint64_t>();
    if (n > (1u << 20)) throw ConfigError("implausible string length", "checkpoint");
    std::string s(n, '\0');
    is_.read(s.data(), static_cast<std::streamsize>(n));
    if (!is_) throw ConfigError("truncated checkpoint", "checkpoint");
    return s;
  }

 private:
  std::istream& is_;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PrerequisiteError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  Writer w(out);
  w.put(kVersion);
  const PolicyDescriptor& d = ckpt.params.descriptor;
  w.put<std::int32_t>(d.vocab_size);
  w.put<std::int32_t>(d.embed_dim);
  w.put<std::int32_t>(d.hidden_dim);
  w.put<std::int32_t>(d.layers);
  w.put<std::int32_t>(static_cast<std::int32_t>(d.cell));
  w.put<std::int32_t>(d.attention_heads);
  w.put<std::int32_t>(d.attention_dim);
  w.put<std::uint64_t>(ckpt.vocab_hash);
  w.put<std::int64_t>(ckpt.step);
  w.put_reals(ckpt.params.values);
  w.put<std::uint32_t>(ckpt.optimizer_kind == OptimizerKind::adam ? 0 : 1);
  w.put<std::uint64_t>(ckpt.optimizer.t);
  w.put_reals(ckpt.optimizer.m);
  w.put_reals(ckpt.optimizer.v);
  w.put_bytes(ckpt.rng_state);
  if (!out) throw PrerequisiteError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PrerequisiteError("missing checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("not a checkpoint file: " + path.string(), "checkpoint");
  }
  Reader r(in);
  if (r.get<std::uint32_t>() != kVersion) throw ConfigError("unsupported version", "checkpoint");
  Checkpoint c;
  PolicyDescriptor& d = c.params.descriptor;
  d.vocab_size = r.get<std::int32_t>();
  d.embed_dim = r.get<std::int32_t>();
  d.hidden_dim = r.get<std::int32_t>();
  d.layers = r.get<std::int32_t>();
  const auto cell = r.get<std::int32_t>();
  if (cell < 0 || cell > 2) throw ConfigError("unknown cell kind", "checkpoint");
  d.cell = static_cast<CellKind>(cell);
  d.attention_heads = r.get<std::int32_t>();
  d.attention_dim = r.get<std::int32_t>();
  c.vocab_hash = r.get<std::uint64_t>();
  if (c.vocab_hash != vocab.hash()) {
    throw ConfigError("checkpoint vocabulary hash does not match the trace vocabulary",
                      "checkpoint");
  }
  check_vocabulary(d, vocab);
  const std::size_t expected = parameter_count(d);
  c.step = r.get<std::int64_t>();
  c.params.values = r.get_reals(expected);
  if (c.params.values.size() != expected) {
    throw ConfigError("parameter count does not match the descriptor", "checkpoint");
  }
  const auto kind = r.get<std::uint32_t>();
  if (kind > 1) throw ConfigError("unknown optimizer kind", "checkpoint");
  c.optimizer_kind = kind == 0 ? OptimizerKind::adam : OptimizerKind::sgd;
  c.optimizer.t = r.get<std::uint64_t>();
  c.optimizer.m = r.get_reals(expected);
  c.optimizer.v = r.get_reals(expected);
  c.rng_state = r.get_bytes();
  return c;
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PrerequisiteError("cannot write " + path.string());
  out << vocab.manifest();
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PrerequisiteError("missing vocabulary manifest " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Vocabulary::from_manifest(text);
}

}  // namespace reczero
