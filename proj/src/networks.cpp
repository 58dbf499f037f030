#include "cmcfae/networks.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "cmcfae/errors.hpp"
#include "cmcfae/parallel.hpp"
#include "cmcfae/rng.hpp"

namespace cmcfae {

void MlpSpec::validate() const {
  if (layer_widths.size() < 2) {
    throw ContractError("mlp spec: need at least input and output widths");
  }
  for (std::size_t w : layer_widths) {
    if (w == 0) throw ContractError("mlp spec: zero layer width");
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.w.size() + l.b.size();
  return n;
}

Mlp make_mlp(const MlpSpec& spec, std::uint64_t seed, double final_layer_scale) {
  spec.validate();
  Mlp net;
  net.spec = spec;
  const std::size_t n_layers = spec.layer_widths.size() - 1;
  net.layers.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    DenseLayer& layer = net.layers[l];
    layer.in = spec.layer_widths[l];
    layer.out = spec.layer_widths[l + 1];
    layer.w.resize(layer.in * layer.out);
    layer.b.assign(layer.out, 0.0);
    const bool small_final = final_layer_scale > 0.0 && l == n_layers - 1;
    const double limit = small_final ? final_layer_scale
                                     : std::sqrt(6.0 / static_cast<double>(layer.in));
    Rng rng(derive_seed(seed, l));
    for (double& w : layer.w) w = rng.uniform(-limit, limit);
  }
  return net;
}

BoundMlp bind(Tape& tape, const Mlp& net) {
  BoundMlp bound;
  bound.net = &net;
  bound.weights.reserve(net.layers.size());
  bound.biases.reserve(net.layers.size());
  for (const DenseLayer& l : net.layers) {
    bound.weights.push_back(tape.leaf({l.in, l.out}, l.w));
    bound.biases.push_back(tape.leaf({1, l.out}, l.b));
  }
  return bound;
}

Tensor forward(Tape& tape, const BoundMlp& bound, const Tensor& x) {
  const Mlp& net = *bound.net;
  if (x.shape().size() != 2 || x.cols() != net.spec.input_dim()) {
    throw DimensionError("mlp forward: input width " + std::to_string(x.cols()) +
                         " does not match spec " +
                         std::to_string(net.spec.input_dim()));
  }
  Tensor h = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    h = add_rowvec(matmul(h, bound.weights[l]), bound.biases[l]);
    const bool last = l + 1 == net.layers.size();
    if (!last) {
      h = relu(h);
    } else if (net.spec.output_activation == OutputActivation::sigmoid) {
      h = sigmoid(h);
    }
  }
  (void)tape;
  return h;
}

std::vector<double> forward_plain(const Mlp& net, std::span<const double> x,
                                  std::size_t n) {
  net.spec.validate();
  const std::size_t in_dim = net.spec.input_dim();
  if (x.size() != n * in_dim) {
    throw DimensionError("mlp forward_plain: data length does not match n x input_dim");
  }
  std::vector<double> h(x.begin(), x.end());
  std::size_t width = in_dim;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    std::vector<double> next(n * layer.out, 0.0);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        double* row = &next[i * layer.out];
        const double* hin = &h[i * width];
        for (std::size_t kk = 0; kk < layer.in; ++kk) {
          const double a = hin[kk];
          const double* wk = &layer.w[kk * layer.out];
          for (std::size_t j = 0; j < layer.out; ++j) row[j] += a * wk[j];
        }
        for (std::size_t j = 0; j < layer.out; ++j) row[j] += layer.b[j];
      }
    }, /*grain=*/8);
    const bool last = l + 1 == net.layers.size();
    if (!last) {
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    } else if (net.spec.output_activation == OutputActivation::sigmoid) {
      for (double& v : next) v = 1.0 / (1.0 + std::exp(-v));
    }
    h = std::move(next);
    width = layer.out;
  }
  return h;
}

Autoencoder make_autoencoder(std::size_t input_dim,
                             const std::vector<std::size_t>& hidden_widths,
                             std::size_t latent_dim, std::uint64_t seed) {
  if (latent_dim == 0 || input_dim == 0) {
    throw ContractError("autoencoder: input_dim and latent_dim must be >= 1");
  }
  MlpSpec enc_spec;
  enc_spec.layer_widths.push_back(input_dim);
  for (std::size_t w : hidden_widths) enc_spec.layer_widths.push_back(w);
  enc_spec.layer_widths.push_back(latent_dim);
  enc_spec.output_activation = OutputActivation::none;

  MlpSpec dec_spec;
  dec_spec.layer_widths.push_back(latent_dim);
  for (auto it = hidden_widths.rbegin(); it != hidden_widths.rend(); ++it) {
    dec_spec.layer_widths.push_back(*it);
  }
  dec_spec.layer_widths.push_back(input_dim);
  dec_spec.output_activation = OutputActivation::sigmoid;

  Autoencoder model;
  // Small-uniform final encoder layer: initial latents start near zero,
  // inside the mass of the fixed prior.
  model.encoder = make_mlp(enc_spec, derive_seed(seed, 1), 1e-3);
  model.decoder = make_mlp(dec_spec, derive_seed(seed, 2));
  return model;
}

BoundAutoencoder bind(Tape& tape, const Autoencoder& model) {
  return {bind(tape, model.encoder), bind(tape, model.decoder)};
}

Tensor encode(Tape& tape, const BoundAutoencoder& bound, const Tensor& x) {
  return forward(tape, bound.encoder, x);
}

Tensor decode(Tape& tape, const BoundAutoencoder& bound, const Tensor& z) {
  return forward(tape, bound.decoder, z);
}

std::vector<double> encode_plain(const Autoencoder& model,
                                 std::span<const double> x, std::size_t n) {
  return forward_plain(model.encoder, x, n);
}

std::vector<double> decode_plain(const Autoencoder& model,
                                 std::span<const double> z, std::size_t n) {
  return forward_plain(model.decoder, z, n);
}

// --- Checkpoint I/O ---------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'M', 'C', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw FormatError("checkpoint: truncated header field");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw FormatError("checkpoint: truncated float payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

struct RawMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<double> data;
};

void write_matrix(std::ostream& os, std::uint32_t rows, std::uint32_t cols,
                  const std::vector<double>& data) {
  put_u32(os, rows);
  put_u32(os, cols);
  for (double v : data) put_f64(os, v);
}

void write_mlp(std::ostream& os, const Mlp& net) {
  for (const DenseLayer& l : net.layers) {
    write_matrix(os, static_cast<std::uint32_t>(l.in),
                 static_cast<std::uint32_t>(l.out), l.w);
    write_matrix(os, 1, static_cast<std::uint32_t>(l.out), l.b);
  }
}

Mlp mlp_from_matrices(const std::vector<RawMatrix>& mats, std::size_t first,
                      std::size_t count, OutputActivation out_act) {
  Mlp net;
  net.spec.output_activation = out_act;
  for (std::size_t k = 0; k < count; k += 2) {
    const RawMatrix& w = mats[first + k];
    const RawMatrix& b = mats[first + k + 1];
    if (b.rows != 1 || b.cols != w.cols) {
      throw FormatError("checkpoint: bias block does not match its weight block");
    }
    if (!net.layers.empty() && net.layers.back().out != w.rows) {
      throw FormatError("checkpoint: layer widths do not chain");
    }
    DenseLayer layer;
    layer.in = w.rows;
    layer.out = w.cols;
    layer.w = w.data;
    layer.b = b.data;
    net.layers.push_back(std::move(layer));
  }
  net.spec.layer_widths.push_back(net.layers.front().in);
  for (const DenseLayer& l : net.layers) net.spec.layer_widths.push_back(l.out);
  return net;
}

}  // namespace

void save_checkpoint(const std::string& path, const Autoencoder& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("checkpoint: cannot open for writing: " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  write_mlp(os, model.encoder);
  write_mlp(os, model.decoder);
  if (!os) throw FormatError("checkpoint: write failed: " + path);
}

Autoencoder load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("checkpoint: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic bytes");
  }
  const std::uint32_t version = get_u32(is);
  if (version != kVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  std::vector<RawMatrix> mats;
  for (;;) {
    is.peek();
    if (is.eof()) break;
    RawMatrix m;
    m.rows = get_u32(is);
    m.cols = get_u32(is);
    if (m.rows == 0 || m.cols == 0) throw FormatError("checkpoint: zero-extent matrix");
    m.data.resize(static_cast<std::size_t>(m.rows) * m.cols);
    for (double& v : m.data) v = get_f64(is);
    mats.push_back(std::move(m));
  }
  if (mats.size() < 4 || mats.size() % 2 != 0) {
    throw FormatError("checkpoint: expected an even number of W/b blocks, >= 4");
  }
  // The latent boundary is the unique narrowest layer output. The final
  // W/b pair is the decoder's output layer (width == input_dim) and is
  // excluded, which keeps input_dim == latent_dim models unambiguous.
  std::uint32_t latent = std::numeric_limits<std::uint32_t>::max();
  for (std::size_t k = 0; k + 2 < mats.size(); k += 2) {
    latent = std::min(latent, mats[k].cols);
  }
  std::size_t boundary = mats.size();
  for (std::size_t k = 0; k + 2 < mats.size(); k += 2) {
    if (mats[k].cols == latent) {
      if (boundary != mats.size()) {
        throw FormatError("checkpoint: ambiguous latent boundary");
      }
      boundary = k + 2;  // encoder ends after this W/b pair
    }
  }
  if (boundary >= mats.size()) {
    throw FormatError("checkpoint: no latent boundary found");
  }
  Autoencoder model;
  model.encoder = mlp_from_matrices(mats, 0, boundary, OutputActivation::none);
  model.decoder = mlp_from_matrices(mats, boundary, mats.size() - boundary,
                                    OutputActivation::sigmoid);
  if (model.decoder.spec.input_dim() != model.encoder.spec.output_dim()) {
    throw FormatError("checkpoint: encoder/decoder widths do not chain");
  }
  return model;
}

}  // namespace cmcfae
