#include "nimai/nn/model_io.hpp"

#include <bit>
#include <fstream>

#include "nimai/common.hpp"

namespace nimai::nn {

namespace {

constexpr char kMagic[4] = {'N', 'M', 'A', 'I'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = char((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = char((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  return std::bit_cast<double>(get_u64(in));
}

}  // namespace

void write_model_file(const std::filesystem::path& path, const ModelFile& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out.write(kMagic, 4);
  put_u32(out, m.version);
  put_u32(out, static_cast<std::uint32_t>(m.kind));
  put_u64(out, m.schema_hash);
  put_u32(out, std::uint32_t(m.dims.size()));
  for (auto d : m.dims) put_u32(out, d);
  put_u64(out, m.aux.size());
  for (double v : m.aux) put_f64(out, v);
  put_u64(out, m.params.size());
  for (double v : m.params) put_f64(out, v);
  if (!out) throw DataError("short write on model file: " + path.string());
}

ModelFile read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != std::string_view(kMagic, 4))
    throw DataError("not a model file: " + path.string());
  ModelFile m;
  m.version = get_u32(in);
  if (m.version != 1)
    throw DataError("unsupported model file version " +
                    std::to_string(m.version));
  m.kind = static_cast<ModelKind>(get_u32(in));
  m.schema_hash = get_u64(in);
  m.dims.resize(get_u32(in));
  for (auto& d : m.dims) d = get_u32(in);
  m.aux.resize(get_u64(in));
  for (auto& v : m.aux) v = get_f64(in);
  m.params.resize(get_u64(in));
  for (auto& v : m.params) v = get_f64(in);
  if (!in) throw DataError("truncated model file: " + path.string());
  return m;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::uint64_t h = kFnvOffset;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= kFnvPrime;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace nimai::nn
