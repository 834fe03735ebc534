#pragma once

// Binary checkpoint of a training run. Byte layout (all integers and reals
// little-endian; reals are IEEE-754 binary64):
//
//   offset  size  field
//   0       8     magic "ICLCKPT\0"
//   8       4     u32 format version (1)
//   12      4     u32 loss kind (0 = l2, 1 = l1)
//   16      40    u64 d_model, n_layers, n_heads, d_input, max_seq
//   56      8     u64 training step
//   64      8     u64 parameter count n
//   72      8n    f64 parameters
//   ..      40    f64 lr, beta1, beta2, eps, weight_decay
//   ..      8     u64 optimizer step
//   ..      8n    f64 first moments
//   ..      8n    f64 second moments
//   ..      32    u64 x4 data-stream RNG state
//   ..      8     u64 FNV-1a 64 checksum of every preceding byte

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "icl/error.hpp"
#include "icl/random.hpp"
#include "icl/transformer.hpp"

namespace icl {

/// Everything needed to resume training bit-exactly.
struct ModelState {
  Parameters params;
  AdamState optimizer;
  std::uint64_t step = 0;
  Rng::State rng{};
};

inline constexpr std::array<std::uint8_t, 8> kCheckpointMagic = {'I', 'C', 'L', 'C', 'K', 'P', 'T', 0};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

[[nodiscard]] inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }
  void raw(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  std::vector<std::uint8_t>& bytes() noexcept { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[at_ + i]) << (8 * i);
    at_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[at_ + i]) << (8 * i);
    at_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> f64s(std::size_t n) {
    if (n > (in_.size() - at_) / 8) throw CorruptCheckpoint("checkpoint truncated");
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  std::span<const std::uint8_t> raw(std::size_t n) {
    need(n);
    auto s = in_.subspan(at_, n);
    at_ += n;
    return s;
  }
  [[nodiscard]] std::size_t position() const noexcept { return at_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - at_ < n) throw CorruptCheckpoint("checkpoint truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t at_ = 0;
};

}  // namespace detail

[[nodiscard]] inline std::vector<std::uint8_t> save_checkpoint(const ModelState& s) {
  const auto& c = s.params.config;
  const std::size_t n = s.params.values.size();
  if (s.optimizer.m.size() != n || s.optimizer.v.size() != n)
    throw InvalidInput("save_checkpoint: optimizer moments do not match parameters");
  detail::ByteWriter w;
  w.raw(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(c.loss == LossKind::l2 ? 0 : 1);
  w.u64(c.d_model);
  w.u64(c.n_layers);
  w.u64(c.n_heads);
  w.u64(c.d_input);
  w.u64(c.max_seq);
  w.u64(s.step);
  w.u64(n);
  w.f64s(s.params.values);
  w.f64(s.optimizer.lr);
  w.f64(s.optimizer.beta1);
  w.f64(s.optimizer.beta2);
  w.f64(s.optimizer.eps);
  w.f64(s.optimizer.weight_decay);
  w.u64(s.optimizer.step);
  w.f64s(s.optimizer.m);
  w.f64s(s.optimizer.v);
  for (std::uint64_t x : s.rng) w.u64(x);
  w.u64(detail::fnv1a64(w.bytes()));
  return std::move(w.bytes());
}

[[nodiscard]] inline ModelState load_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  const auto magic = r.raw(kCheckpointMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kCheckpointMagic.begin()))
    throw CorruptCheckpoint("checkpoint: bad magic bytes");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CorruptCheckpoint("checkpoint: unsupported format version " + std::to_string(version));
  const std::uint32_t loss = r.u32();
  if (loss > 1) throw CorruptCheckpoint("checkpoint: bad loss kind");
  ModelConfig c;
  c.loss = loss == 0 ? LossKind::l2 : LossKind::l1;
  c.d_model = r.u64();
  c.n_layers = r.u64();
  c.n_heads = r.u64();
  c.d_input = r.u64();
  c.max_seq = r.u64();
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw CorruptCheckpoint(std::string("checkpoint: ") + e.what());
  }
  ModelState s;
  s.step = r.u64();
  const std::uint64_t n = r.u64();
  if (n != parameter_count(c)) throw CorruptCheckpoint("checkpoint: parameter count does not match config");
  s.params = Parameters(c);
  s.params.values = r.f64s(n);
  s.optimizer.lr = r.f64();
  s.optimizer.beta1 = r.f64();
  s.optimizer.beta2 = r.f64();
  s.optimizer.eps = r.f64();
  s.optimizer.weight_decay = r.f64();
  s.optimizer.step = r.u64();
  s.optimizer.m = r.f64s(n);
  s.optimizer.v = r.f64s(n);
  for (auto& x : s.rng) x = r.u64();
  const std::size_t body = r.position();
  const std::uint64_t stored = r.u64();
  if (stored != detail::fnv1a64(bytes.first(body))) throw CorruptCheckpoint("checkpoint: checksum mismatch");
  if (r.position() != bytes.size()) throw CorruptCheckpoint("checkpoint: trailing bytes");
  return s;
}

/// Writes to a temporary sibling and renames, so an interrupted write never
/// replaces a valid checkpoint with a partial one.
inline void write_checkpoint_file(const std::filesystem::path& path, const ModelState& s) {
  const auto bytes = save_checkpoint(s);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

[[nodiscard]] inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[nodiscard]] inline ModelState read_checkpoint_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return load_checkpoint(bytes);
}

}  // namespace icl
