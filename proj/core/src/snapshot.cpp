#include "rlk/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "rlk/error.hpp"

namespace rlk {
namespace {

constexpr char kMagic[8] = {'R', 'L', 'K', 'S', 'N', 'A', 'P', '1'};

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(sizeof(T) == 8);
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw Error("snapshot: truncated file");
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  T v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void write_snapshot(const std::string& path, const DistributionField& f, std::size_t n) {
  if (f.nodes != n * n * n) throw GridMismatch("snapshot: node count does not match N^3");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("snapshot: cannot open " + path);
  os.write(kMagic, 8);
  put_le<std::int64_t>(os, static_cast<std::int64_t>(f.nx));
  for (int d = 0; d < 3; ++d) put_le<std::int64_t>(os, static_cast<std::int64_t>(n));
  for (double v : f.values) put_le<double>(os, v);
  if (!os) throw Error("snapshot: write failed for " + path);
}

DistributionField read_snapshot(const std::string& path, std::size_t* n_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("snapshot: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) throw Error("snapshot: bad header in " + path);
  auto nx = get_le<std::int64_t>(is);
  std::int64_t dims[3];
  for (auto& d : dims) d = get_le<std::int64_t>(is);
  if (nx <= 0 || dims[0] <= 0 || dims[0] != dims[1] || dims[1] != dims[2])
    throw Error("snapshot: bad dimensions in " + path);
  std::size_t n = static_cast<std::size_t>(dims[0]);
  DistributionField f(static_cast<std::size_t>(nx), n * n * n);
  for (auto& v : f.values) v = get_le<double>(is);
  if (n_out) *n_out = n;
  return f;
}

}  // namespace rlk
