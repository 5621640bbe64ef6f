#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace nimai::nn {

enum class ModelKind : std::uint32_t {
  kVqvae = 1,
  kMtm = 2,
  kClassifier = 3,
};

// Versioned binary container: "NMAI" magic, version, kind, schema hash,
// integer size fields, auxiliary reals (loss weights, EMA state, codebook
// block), then the little-endian 64-bit parameter vector.
struct ModelFile {
  std::uint32_t version = 1;
  ModelKind kind = ModelKind::kVqvae;
  std::uint64_t schema_hash = 0;
  std::vector<std::uint32_t> dims;
  std::vector<double> aux;
  std::vector<double> params;
};

void write_model_file(const std::filesystem::path& path, const ModelFile& m);
ModelFile read_model_file(const std::filesystem::path& path);

// FNV-1a over raw file bytes; used to assert frozen models stay frozen.
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace nimai::nn
