#include "cmcfae/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cmcfae/rng.hpp"

namespace cmcfae {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;
constexpr double kPi = 3.14159265358979323846;

std::uint32_t read_u32_be(std::ifstream& is, const std::string& path,
                          const char* what) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) {
    throw FormatError("idx: " + path + ": truncated while reading " + what);
  }
  return (static_cast<std::uint32_t>(b[0]) << 24) |
         (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

void write_u32_be(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>((v >> 24) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>(v & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::string hex_bytes(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream is(images_path, std::ios::binary);
  if (!is) throw FormatError("idx: cannot open " + images_path);
  const std::uint32_t magic = read_u32_be(is, images_path, "magic");
  if (magic != kImagesMagic) {
    throw FormatError("idx: " + images_path + ": bad image magic " +
                      hex_bytes(magic) + ", expected " + hex_bytes(kImagesMagic));
  }
  const std::uint32_t n = read_u32_be(is, images_path, "count");
  const std::uint32_t rows = read_u32_be(is, images_path, "rows");
  const std::uint32_t cols = read_u32_be(is, images_path, "cols");
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> raw(static_cast<std::size_t>(n) * dim);
  is.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size()) {
    throw FormatError("idx: " + images_path + ": truncated pixel payload (got " +
                      std::to_string(is.gcount()) + " of " +
                      std::to_string(raw.size()) + " bytes)");
  }

  Dataset ds;
  ds.n = n;
  ds.input_dim = dim;
  ds.name = images_path;
  ds.images.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    ds.images[i] = static_cast<double>(raw[i]) / 255.0;
  }

  if (!labels_path.empty()) {
    std::ifstream ls(labels_path, std::ios::binary);
    if (!ls) throw FormatError("idx: cannot open " + labels_path);
    const std::uint32_t lmagic = read_u32_be(ls, labels_path, "magic");
    if (lmagic != kLabelsMagic) {
      throw FormatError("idx: " + labels_path + ": bad label magic " +
                        hex_bytes(lmagic) + ", expected " + hex_bytes(kLabelsMagic));
    }
    const std::uint32_t ln = read_u32_be(ls, labels_path, "count");
    if (ln != n) {
      throw DimensionError("idx: label count " + std::to_string(ln) +
                           " != image count " + std::to_string(n));
    }
    std::vector<unsigned char> lraw(ln);
    ls.read(reinterpret_cast<char*>(lraw.data()), static_cast<std::streamsize>(ln));
    if (static_cast<std::size_t>(ls.gcount()) != lraw.size()) {
      throw FormatError("idx: " + labels_path + ": truncated label payload");
    }
    ds.labels.assign(lraw.begin(), lraw.end());
  }
  return ds;
}

void write_idx_images(const std::string& path, const std::uint8_t* pixels,
                      std::size_t n, std::size_t rows, std::size_t cols) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("idx: cannot open for writing: " + path);
  write_u32_be(os, kImagesMagic);
  write_u32_be(os, static_cast<std::uint32_t>(n));
  write_u32_be(os, static_cast<std::uint32_t>(rows));
  write_u32_be(os, static_cast<std::uint32_t>(cols));
  os.write(reinterpret_cast<const char*>(pixels),
           static_cast<std::streamsize>(n * rows * cols));
  if (!os) throw FormatError("idx: write failed: " + path);
}

void write_idx_labels(const std::string& path, const std::uint8_t* labels,
                      std::size_t n) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("idx: cannot open for writing: " + path);
  write_u32_be(os, kLabelsMagic);
  write_u32_be(os, static_cast<std::uint32_t>(n));
  os.write(reinterpret_cast<const char*>(labels), static_cast<std::streamsize>(n));
  if (!os) throw FormatError("idx: write failed: " + path);
}

void SyntheticSpec::validate() const {
  if (components < 1) throw ContractError("synthetic: components must be >= 1");
  if (n < components) throw ContractError("synthetic: need n >= components");
  if (noise_std < 0.0) throw ContractError("synthetic: noise_std must be >= 0");
}

double synthetic_extent(const SyntheticSpec& spec) {
  return 4.0 + 5.0 * spec.noise_std;
}

std::array<double, 2> synthetic_blob_center(const SyntheticSpec& spec,
                                            std::size_t k) {
  const double angle = 2.0 * kPi * static_cast<double>(k) /
                       static_cast<double>(spec.components);
  const double r = synthetic_extent(spec);
  return {4.0 * std::cos(angle) / (2.0 * r) + 0.5,
          4.0 * std::sin(angle) / (2.0 * r) + 0.5};
}

Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const double r = synthetic_extent(spec);
  Dataset ds;
  ds.n = spec.n;
  ds.input_dim = 2;
  ds.images.resize(spec.n * 2);
  ds.labels.resize(spec.n);
  ds.name = spec.kind == SyntheticKind::gaussian_blobs ? "gaussian_blobs" : "ring";
  for (std::size_t i = 0; i < spec.n; ++i) {
    double x, y;
    int label;
    if (spec.kind == SyntheticKind::gaussian_blobs) {
      const std::size_t k = rng.bounded(spec.components);
      const double angle = 2.0 * kPi * static_cast<double>(k) /
                           static_cast<double>(spec.components);
      x = 4.0 * std::cos(angle) + spec.noise_std * rng.normal();
      y = 4.0 * std::sin(angle) + spec.noise_std * rng.normal();
      label = static_cast<int>(k);
    } else {
      const double angle = rng.uniform(0.0, 2.0 * kPi);
      const double radius = 4.0 + spec.noise_std * rng.normal();
      x = radius * std::cos(angle);
      y = radius * std::sin(angle);
      label = 0;
    }
    // Draws beyond 5 sigma would leave the unit box; clamp the (rare) strays.
    ds.images[i * 2 + 0] = std::clamp(x / (2.0 * r) + 0.5, 0.0, 1.0);
    ds.images[i * 2 + 1] = std::clamp(y / (2.0 * r) + 0.5, 0.0, 1.0);
    ds.labels[i] = label;
  }
  return ds;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n,
                                                    std::size_t batch_size,
                                                    std::uint64_t seed,
                                                    std::uint64_t epoch) {
  if (batch_size == 0) throw ContractError("epoch_batches: batch_size must be >= 1");
  if (batch_size > n) throw ContractError("epoch_batches: batch_size exceeds dataset");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(derive_seed(seed, epoch));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.bounded(i);
    std::swap(perm[i - 1], perm[j]);
  }
  const std::size_t n_batches = n / batch_size;
  std::vector<std::vector<std::size_t>> batches(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    batches[b].assign(perm.begin() + static_cast<std::ptrdiff_t>(b * batch_size),
                      perm.begin() + static_cast<std::ptrdiff_t>((b + 1) * batch_size));
  }
  return batches;
}

}  // namespace cmcfae
