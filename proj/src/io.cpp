#include "qtt/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace qtt {

namespace {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

constexpr char kMagic[4] = {'Q', 'T', 'T', 'B'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void save_cores(std::ostream& os, const std::vector<Core>& cores, Index mode) {
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(mode));
  put_u32(os, static_cast<std::uint32_t>(cores.size()));
  put_u64(os, 1);
  for (const Core& c : cores) put_u64(os, static_cast<std::uint64_t>(c.r_right));
  for (const Core& c : cores)
    os.write(reinterpret_cast<const char*>(c.a.data()),
             static_cast<std::streamsize>(c.a.size() * sizeof(double)));
  if (!os) throw Error("save: write failed");
}

std::vector<Core> load_cores(std::istream& is, Index expect_mode) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw Error("load: bad magic, not a QTT container");
  if (get_u32(is) != kVersion) throw Error("load: unsupported version");
  const Index mode = get_u32(is);
  if (mode != expect_mode)
    throw Error("load: container holds mode " + std::to_string(mode) +
                ", expected " + std::to_string(expect_mode));
  const std::uint32_t level = get_u32(is);
  if (level == 0 || level > 64) throw Error("load: bad level");
  std::vector<Index> ranks(level + 1);
  for (auto& r : ranks) {
    r = static_cast<Index>(get_u64(is));
    if (r < 1 || r > (Index(1) << 20)) throw Error("load: bad rank");
  }
  if (ranks.front() != 1 || ranks.back() != 1)
    throw Error("load: boundary ranks must be 1");
  std::vector<Core> cores;
  for (std::uint32_t k = 0; k < level; ++k) {
    Core c(ranks[k], mode, ranks[k + 1]);
    is.read(reinterpret_cast<char*>(c.a.data()),
            static_cast<std::streamsize>(c.a.size() * sizeof(double)));
    cores.push_back(std::move(c));
  }
  if (!is) throw Error("load: truncated container");
  return cores;
}

}  // namespace

void save(std::ostream& os, const QttVector& x) { save_cores(os, x.cores(), 2); }
void save(std::ostream& os, const QttMatrix& a) { save_cores(os, a.cores(), 4); }

void save_file(const std::string& path, const QttVector& x) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save: cannot open " + path);
  save(os, x);
}
void save_file(const std::string& path, const QttMatrix& a) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save: cannot open " + path);
  save(os, a);
}

QttVector load_vector(std::istream& is) { return QttVector(load_cores(is, 2)); }
QttMatrix load_matrix(std::istream& is) { return QttMatrix(load_cores(is, 4)); }

QttVector load_vector_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load: cannot open " + path);
  return load_vector(is);
}
QttMatrix load_matrix_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load: cannot open " + path);
  return load_matrix(is);
}

int peek_mode(std::istream& is) {
  const auto pos = is.tellg();
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw Error("peek_mode: not a QTT container");
  get_u32(is);
  const int mode = static_cast<int>(get_u32(is));
  is.seekg(pos);
  return mode;
}

}  // namespace qtt
