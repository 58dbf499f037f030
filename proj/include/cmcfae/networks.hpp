#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cmcfae/tensor.hpp"

namespace cmcfae {

enum class OutputActivation { sigmoid, none };

/// Fully connected architecture: layer_widths[0] is the input width,
/// layer_widths.back() the output width. Hidden activations are ReLU;
/// the output layer applies output_activation.
struct MlpSpec {
  std::vector<std::size_t> layer_widths;
  OutputActivation output_activation = OutputActivation::none;

  void validate() const;
  std::size_t input_dim() const { return layer_widths.front(); }
  std::size_t output_dim() const { return layer_widths.back(); }
};

/// One dense layer; w is in x out row-major, b has out entries.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;
  std::vector<double> b;
};

struct Mlp {
  MlpSpec spec;
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
};

/// He-uniform fan-in initialization (U(+-sqrt(6/in))) for every layer, zero
/// biases. When final_layer_scale > 0 the last layer's weights are drawn
/// from U(+-final_layer_scale) instead, which keeps initial outputs near
/// zero. Deterministic given the seed.
Mlp make_mlp(const MlpSpec& spec, std::uint64_t seed,
             double final_layer_scale = 0.0);

/// Per-step leaf bindings of an Mlp's parameters on a tape.
struct BoundMlp {
  const Mlp* net = nullptr;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
};

BoundMlp bind(Tape& tape, const Mlp& net);

/// Tape forward pass over a batch x of shape (n, input_dim).
Tensor forward(Tape& tape, const BoundMlp& bound, const Tensor& x);

/// Tape-free forward pass; same accumulation order as the recorded one, so
/// outputs agree bitwise. x is n x input_dim row-major.
std::vector<double> forward_plain(const Mlp& net, std::span<const double> x,
                                  std::size_t n);

/// Deterministic MLP encoder/decoder pair. The encoder maps inputs in [0, 1]
/// to latent codes (linear output head, small-uniform init so codes start
/// near zero); the decoder mirrors the hidden widths and ends in a sigmoid.
struct Autoencoder {
  Mlp encoder;
  Mlp decoder;

  std::size_t input_dim() const { return encoder.spec.input_dim(); }
  std::size_t latent_dim() const { return encoder.spec.output_dim(); }
};

Autoencoder make_autoencoder(std::size_t input_dim,
                             const std::vector<std::size_t>& hidden_widths,
                             std::size_t latent_dim, std::uint64_t seed);

struct BoundAutoencoder {
  BoundMlp encoder;
  BoundMlp decoder;
};

BoundAutoencoder bind(Tape& tape, const Autoencoder& model);

Tensor encode(Tape& tape, const BoundAutoencoder& bound, const Tensor& x);
Tensor decode(Tape& tape, const BoundAutoencoder& bound, const Tensor& z);
std::vector<double> encode_plain(const Autoencoder& model,
                                 std::span<const double> x, std::size_t n);
std::vector<double> decode_plain(const Autoencoder& model,
                                 std::span<const double> z, std::size_t n);

/// Checkpoint format: magic bytes "CMCF", version u32, then one
/// (rows u32, cols u32, row-major float64 payload) block per parameter
/// matrix, all little-endian. Matrices appear as W then b (as a 1 x out row)
/// for each encoder layer, then the same for the decoder. On load, the
/// encoder/decoder boundary is the unique narrowest layer output (the latent
/// width) among all but the final output layer; ambiguous files are
/// rejected.
void save_checkpoint(const std::string& path, const Autoencoder& model);
Autoencoder load_checkpoint(const std::string& path);

}  // namespace cmcfae
