#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rjepa/matrix.hpp"

namespace rjepa {

// Patch values are quantized to f32 at generation time so that the on-disk
// format round-trips bit-exactly.
struct SequenceDataset {
  int patch_height = 0;
  int patch_width = 0;
  int channels = 1;
  int T = 0;
  std::vector<std::vector<Vec>> sequences;  // [seq][t] flattened patch

  std::uint64_t seed = 0;
  std::string generator;
  std::string split;

  int patch_dim() const { return patch_height * patch_width * channels; }
  int count() const { return static_cast<int>(sequences.size()); }
  void validate() const;  // T >= 2, shared dims, finite
};

struct LatentProcessParams {
  Matrix u;         // transition, spectral radius < 1
  Matrix sigma;     // noise covariance, symmetric PSD (zero allowed)
  Matrix emission;  // patch_dim x latent_dim
  int patch_height = 0;
  int patch_width = 0;
  int channels = 1;

  int latent_dim() const { return u.rows(); }
  void validate() const;
};

// power-iteration estimate, adequate for the diagonalizable transitions used here
double spectral_radius_estimate(const Matrix& u, int iters = 96);

// AR(1) latents with a 100-step burn-in, patches = emission * latent.
// Sequence index_offset keys the per-sequence substreams, which is what makes
// train/test splits disjoint by construction.
SequenceDataset gen_latent_sequences(const LatentProcessParams& params, int count, int T,
                                     std::uint64_t seed, std::uint64_t index_offset = 0);

// Procedural images (sum of 32 oriented Gaussian blobs) with a fixation walk
// mixing small steps and occasional long saccades; patches cropped at the
// fixation points.
SequenceDataset gen_scanpath_sequences(int image_size, int count, int T, int patch_size,
                                       std::uint64_t seed, std::uint64_t index_offset = 0);

// second-half / first-half variance ratio over time, pooled across sequences
double variance_drift_ratio(const SequenceDataset& ds);

// Binary format, little-endian: "RJPA1\0", u16 version=1, u32 count, u32 T,
// u32 height, u32 width, u32 channels, f32 payload (sequence-major,
// time-major, row-major), u32 CRC-32 of the payload bytes. A text manifest
// (key=value) sits next to the file at <path>.manifest.
void write_dataset(const SequenceDataset& ds, const std::string& path);
SequenceDataset read_dataset(const std::string& path);

std::uint32_t crc32(const unsigned char* data, std::size_t len);

// Checkpoints: "RJPW1", u16 version=1, u32 entry count, then per entry a
// named f64 matrix: u32 name length, name, u32 rows, u32 cols, doubles.
using NamedMatrices = std::vector<std::pair<std::string, Matrix>>;
void write_checkpoint(const NamedMatrices& entries, const std::string& path);
NamedMatrices read_checkpoint(const std::string& path);

}  // namespace rjepa
