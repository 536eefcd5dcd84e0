// SPDX-License-Identifier: Apache-2.0
#include "gruc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "gruc/errors.hpp"

namespace gruc {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'G', 'R', 'U', 'C', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void doubles(const Tensor& t) {
    out_.write(reinterpret_cast<const char*>(t.data()),
               static_cast<std::streamsize>(t.size() * sizeof(double)));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, const std::filesystem::path& path) : in_(in), path_(path) {}
  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ULL << 32)) fail("implausible string length");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    check();
    return s;
  }
  void doubles(Tensor& t) {
    in_.read(reinterpret_cast<char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
    check();
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw DataError("checkpoint " + path_.string() + ": " + why);
  }

 private:
  void check() const {
    if (!in_) fail("truncated file");
  }
  std::ifstream& in_;
  std::filesystem::path path_;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  // Write to a sibling temp file and rename, so readers never see a partial file.
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("checkpoint: cannot open " + tmp.string() + " for writing");
    Writer w(out);
    out.write(kMagic, sizeof(kMagic));
    w.pod<std::uint32_t>(ckpt.version);
    w.pod<std::uint64_t>(ckpt.seed);
    w.str(ckpt.metadata);
    w.pod<std::uint64_t>(ckpt.params.size());
    for (const auto& [name, p] : ckpt.params) {
      w.str(name);
      w.pod<std::uint64_t>(p.value.rows());
      w.pod<std::uint64_t>(p.value.cols());
      w.doubles(p.value);
    }
    w.pod<std::int64_t>(ckpt.adam.step);
    w.pod<double>(ckpt.adam.config.beta1);
    w.pod<double>(ckpt.adam.config.beta2);
    w.pod<double>(ckpt.adam.config.eps);
    w.pod<std::uint64_t>(ckpt.adam.moments.size());
    for (const auto& [name, mv] : ckpt.adam.moments) {
      w.str(name);
      w.pod<std::uint64_t>(mv.m.rows());
      w.pod<std::uint64_t>(mv.m.cols());
      w.doubles(mv.m);
      w.doubles(mv.v);
    }
    w.pod<double>(ckpt.schedule_epoch);
    w.pod<std::int64_t>(ckpt.global_step);
    w.str(ckpt.rng_state);
    if (!out) throw DataError("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  Reader r(in, path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.fail("bad magic");
  Checkpoint ckpt;
  ckpt.version = r.pod<std::uint32_t>();
  if (ckpt.version != kCheckpointVersion) {
    r.fail("unsupported format version " + std::to_string(ckpt.version));
  }
  ckpt.seed = r.pod<std::uint64_t>();
  ckpt.metadata = r.str();
  const auto count = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const auto rows = r.pod<std::uint64_t>();
    const auto cols = r.pod<std::uint64_t>();
    if (rows * cols > (1ULL << 32)) r.fail("implausible tensor shape for " + name);
    Tensor t(rows, cols);
    r.doubles(t);
    ckpt.params.set(name, std::move(t));
  }
  ckpt.adam.step = r.pod<std::int64_t>();
  ckpt.adam.config.beta1 = r.pod<double>();
  ckpt.adam.config.beta2 = r.pod<double>();
  ckpt.adam.config.eps = r.pod<double>();
  const auto moments = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < moments; ++i) {
    std::string name = r.str();
    const auto rows = r.pod<std::uint64_t>();
    const auto cols = r.pod<std::uint64_t>();
    if (rows * cols > (1ULL << 32)) r.fail("implausible moment shape for " + name);
    AdamMoments mv{Tensor(rows, cols), Tensor(rows, cols)};
    r.doubles(mv.m);
    r.doubles(mv.v);
    ckpt.adam.moments.emplace(std::move(name), std::move(mv));
  }
  ckpt.schedule_epoch = r.pod<double>();
  ckpt.global_step = r.pod<std::int64_t>();
  ckpt.rng_state = r.str();
  return ckpt;
}

}  // namespace gruc
