#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cmcfae/errors.hpp"

namespace cmcfae {

/// Flattened dataset with pixels (or coordinates) normalized into [0, 1].
/// labels is empty when no label file was given.
struct Dataset {
  std::size_t n = 0;
  std::size_t input_dim = 0;
  std::vector<double> images;  // n x input_dim row-major
  std::vector<int> labels;
  std::string name;
};

/// Parses big-endian IDX files: magic 0x00000803 for images (dims N, rows,
/// cols), 0x00000801 for labels. Pixels are scaled by 1/255. A wrong magic
/// reports the offending bytes; short files report a length error.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path = "");

void write_idx_images(const std::string& path, const std::uint8_t* pixels,
                      std::size_t n, std::size_t rows, std::size_t cols);
void write_idx_labels(const std::string& path, const std::uint8_t* labels,
                      std::size_t n);

enum class SyntheticKind { gaussian_blobs, ring };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::gaussian_blobs;
  std::size_t components = 1;
  double noise_std = 0.0;
  std::size_t n = 0;

  void validate() const;
};

/// 2-D benchmark data, mapped into [0, 1]^2 by the fixed affine map
/// u = x / (2 R) + 1/2 with R = 4 + 5 * noise_std. gaussian_blobs places
/// component means evenly on a circle of radius 4 (labels carry the
/// component); ring draws a uniform angle on the same circle with radial
/// noise. Deterministic given the seed.
Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Half-extent R of the pre-normalization coordinate box for a spec.
double synthetic_extent(const SyntheticSpec& spec);

/// The k-th blob center after the [0, 1] mapping.
std::array<double, 2> synthetic_blob_center(const SyntheticSpec& spec,
                                            std::size_t k);

/// One epoch's batches: a seeded permutation of {0..n-1} derived from
/// (seed, epoch), cut into floor(n / batch_size) full batches. The ragged
/// tail is dropped so every batch has exactly batch_size rows (the pairwise
/// estimator normalizes by n(n-1) and needs a fixed n).
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed,
                                                    std::uint64_t epoch);

}  // namespace cmcfae
