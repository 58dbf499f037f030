#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cmcfae/networks.hpp"
#include "cmcfae/rng.hpp"
#include "support.hpp"

using namespace cmcfae;

namespace {

std::vector<double> random_batch(std::size_t n, std::size_t dim,
                                 std::uint64_t seed, double lo = 0.0,
                                 double hi = 1.0) {
  Rng rng(seed);
  std::vector<double> x(n * dim);
  for (double& v : x) v = rng.uniform(lo, hi);
  return x;
}

double recon_error(const Autoencoder& model, const std::vector<double>& x,
                   std::size_t n) {
  const std::size_t dim = model.input_dim();
  const std::vector<double> z = encode_plain(model, x, n);
  const std::vector<double> xh = decode_plain(model, z, n);
  double err =0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    err += (x[i] - xh[i]) * (x[i] - xh[i]);
  }
  return err / static_cast<double>(n);
}

}  // namespace

TEST_CASE("spec validation") {
  MlpSpec bad;
  bad.layer_widths = {4};
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad.layer_widths = {4, 0, 2};
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("initialization bounds") {
  MlpSpec spec;
  spec.layer_widths = {20, 10, 4};
  const Mlp net = make_mlp(spec, 3, 1e-3);
  const double limit0 = std::sqrt(6.0 / 20.0);
  for (double w : net.layers[0].w) {
    CHECK(std::abs(w) <= limit0);
  }
  for (double w : net.layers[1].w) {
    CHECK(std::abs(w) <= 1e-3);  // small-uniform final layer
  }
  for (double b : net.layers[0].b) CHECK(b == 0.0);
  CHECK(net.parameter_count() == 20 * 10 + 10 + 10 * 4 + 4);
}

TEST_CASE("zero final layer outputs the bias row for any input") {
  MlpSpec spec;
  spec.layer_widths = {6, 5, 3};
  Mlp net = make_mlp(spec, 5);
  for (double& w : net.layers.back().w) w = 0.0;
  net.layers.back().b = {1.5, -2.0, 0.25};

  const auto x = random_batch(4, 6, 8);
  const std::vector<double> out = forward_plain(net, x, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(out[i * 3 + 0] == 1.5);
    CHECK(out[i * 3 + 1] == -2.0);
    CHECK(out[i * 3 + 2] == 0.25);
  }
}

TEST_CASE("identical inputs give identical rows, bitwise") {
  const Autoencoder model = make_autoencoder(12, {8}, 3, 77);
  std::vector<double> one = random_batch(1, 12, 9);
  std::vector<double> batch;
  for (int i = 0; i < 5; ++i) batch.insert(batch.end(), one.begin(), one.end());
  const std::vector<double> z = encode_plain(model, batch, 5);
  for (int i = 1; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(z[i * 3 + j] == z[j]);
  }
}

TEST_CASE("forward determinism across repeated evaluations") {
  const Autoencoder model = make_autoencoder(10, {7}, 2, 41);
  const auto x = random_batch(6, 10, 42);
  const auto a = encode_plain(model, x, 6);
  const auto b = encode_plain(model, x, 6);
  CHECK(a == b);
}

TEST_CASE("tape forward equals plain forward bitwise") {
  const Autoencoder model = make_autoencoder(9, {6, 5}, 2, 1234);
  const auto x = random_batch(7, 9, 4321);

  Tape tape;
  const BoundAutoencoder bound = bind(tape, model);
  Tensor xt = tape.leaf({7, 9}, x);
  Tensor z = encode(tape, bound, xt);
  Tensor xh = decode(tape, bound, z);

  CHECK(z.value() == encode_plain(model, x, 7));
  const std::vector<double> xh_plain =
      decode_plain(model, encode_plain(model, x, 7), 7);
  CHECK(xh.value() == xh_plain);
}

TEST_CASE("sigmoid decoder output lies strictly inside (0, 1)") {
  const Autoencoder model = make_autoencoder(20, {16}, 4, 2);
  Rng rng(3);
  std::vector<double> z(8 * 4);
  for (double& v : z) v = rng.normal(0.0, 3.0);
  const std::vector<double> xh = decode_plain(model, z, 8);
  CHECK(xh.size() == 8 * 20);  // decode(encode(x)) shape == x shape
  for (double v : xh) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("random init reconstructs Bernoulli(0.5) at the uniform-guess level") {
  const Autoencoder model = make_autoencoder(64, {32}, 8, 6);
  Rng rng(7);
  const std::size_t n = 200;
  std::vector<double> x(n * 64);
  for (double& v : x) v = rng.bounded(2) ? 1.0 : 0.0;
  const double per_pixel = recon_error(model, x, n) / 64.0;
  CHECK(per_pixel == doctest::Approx(0.25).epsilon(0.2));  // 0.25 +- 0.05
}

TEST_CASE("gradient of sum(z) w.r.t. first layer weights matches FD") {
  const Autoencoder model = make_autoencoder(5, {4}, 3, 10);
  const auto x = random_batch(3, 5, 11);

  Tape tape;
  const BoundAutoencoder bound = bind(tape, model);
  Tensor xt = tape.leaf({3, 5}, x);
  Tensor z = encode(tape, bound, xt);
  tape.backward(sum_all(z));
  const std::vector<double> grad = tape.grad(bound.encoder.weights[0]);

  auto f = [&](const std::vector<double>& wflat) {
    Autoencoder m = model;
    m.encoder.layers[0].w = wflat;
    const auto zz = encode_plain(m, x, 3);
    double s = 0.0;
    for (double v : zz) s += v;
    return s;
  };
  const auto fd =
      testsupport::finite_diff_gradient(f, model.encoder.layers[0].w);
  CHECK(testsupport::max_rel_error(grad, fd) <= 1e-5);
}

TEST_CASE("one SGD step reduces reconstruction error at some small lr") {
  const Autoencoder base = make_autoencoder(16, {10}, 4, 20);
  const auto x = random_batch(1, 16, 21);
  const double before = recon_error(base, x, 1);

  // Gradients of the per-example squared error.
  Tape tape;
  const BoundAutoencoder bound = bind(tape, base);
  Tensor xt = tape.leaf({1, 16}, x);
  Tensor xh = decode(tape, bound, encode(tape, bound, xt));
  tape.backward(sum_all(square(sub(xt, xh))));

  bool improved = false;
  for (double lr : {1e-2, 1e-3, 1e-4}) {
    Autoencoder stepped = base;
    auto apply = [&](Mlp& net, const BoundMlp& b) {
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& gw = tape.grad(b.weights[l]);
        const auto& gb = tape.grad(b.biases[l]);
        for (std::size_t i = 0; i < gw.size(); ++i) net.layers[l].w[i] -= lr * gw[i];
        for (std::size_t i = 0; i < gb.size(); ++i) net.layers[l].b[i] -= lr * gb[i];
      }
    };
    apply(stepped.encoder, bound.encoder);
    apply(stepped.decoder, bound.decoder);
    if (recon_error(stepped, x, 1) < before) {
      improved = true;
      break;
    }
  }
  CHECK(improved);
}

TEST_CASE("checkpoint round trip preserves everything") {
  testsupport::TempDir dir("cmcfae-ckpt");
  const Autoencoder model = make_autoencoder(14, {9, 6}, 3, 30);
  const std::string path = dir.file("model.bin");
  save_checkpoint(path, model);
  const Autoencoder loaded = load_checkpoint(path);

  CHECK(loaded.input_dim() == 14);
  CHECK(loaded.latent_dim() == 3);
  CHECK(loaded.encoder.spec.layer_widths == model.encoder.spec.layer_widths);
  CHECK(loaded.decoder.spec.layer_widths == model.decoder.spec.layer_widths);
  for (std::size_t l = 0; l < model.encoder.layers.size(); ++l) {
    CHECK(loaded.encoder.layers[l].w == model.encoder.layers[l].w);
    CHECK(loaded.encoder.layers[l].b == model.encoder.layers[l].b);
  }
  for (std::size_t l = 0; l < model.decoder.layers.size(); ++l) {
    CHECK(loaded.decoder.layers[l].w == model.decoder.layers[l].w);
    CHECK(loaded.decoder.layers[l].b == model.decoder.layers[l].b);
  }
  CHECK(loaded.decoder.spec.output_activation == OutputActivation::sigmoid);

  // input_dim == latent_dim stays unambiguous (final pair is excluded).
  const Autoencoder square_model = make_autoencoder(2, {16}, 2, 31);
  const std::string path2 = dir.file("square.bin");
  save_checkpoint(path2, square_model);
  const Autoencoder loaded2 = load_checkpoint(path2);
  CHECK(loaded2.latent_dim() == 2);
  CHECK(loaded2.encoder.spec.layer_widths == std::vector<std::size_t>{2, 16, 2});
}

TEST_CASE("checkpoint rejects corruption") {
  testsupport::TempDir dir("cmcfae-ckpt-bad");
  const Autoencoder model = make_autoencoder(6, {4}, 2, 32);
  const std::string path = dir.file("model.bin");
  save_checkpoint(path, model);

  std::string bytes = testsupport::slurp(path);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  const std::string bad_path = dir.file("bad_magic.bin");
  {
    std::ofstream os(bad_path, std::ios::binary);
    os << bad_magic;
  }
  CHECK_THROWS_AS(load_checkpoint(bad_path), FormatError);

  const std::string trunc_path = dir.file("trunc.bin");
  {
    std::ofstream os(trunc_path, std::ios::binary);
    os << bytes.substr(0, bytes.size() - 5);
  }
  CHECK_THROWS_AS(load_checkpoint(trunc_path), FormatError);

  CHECK_THROWS_AS(load_checkpoint(dir.file("missing.bin")), FormatError);
}
