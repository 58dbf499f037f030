// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the number of
// failures. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cmcfae/cf_mmd.hpp"
#include "cmcfae/cloud_model.hpp"
#include "cmcfae/data.hpp"
#include "cmcfae/networks.hpp"
#include "cmcfae/parallel.hpp"
#include "cmcfae/quadrature.hpp"
#include "cmcfae/rng.hpp"
#include "cmcfae/trainer.hpp"
#include "digit_fixture.hpp"
#include "support.hpp"

using namespace cmcfae;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// --- Criterion 1: closed-form CF vs quadrature oracle and empirical CF ----

Outcome criterion_cf_validation() {
  Outcome out;
  double worst_quad = 0.0, worst_mc = 0.0;
  const std::size_t mc_n = 1000000;
  const double mc_tol = 4.0 / std::sqrt(static_cast<double>(mc_n));

  Rng rng(20240001);
  for (int trial = 0; trial < 20; ++trial) {
    CloudModelParams p{{rng.uniform(-2.0, 2.0)},
                       {rng.uniform(0.5, 5.0)},
                       {trial == 0 ? 0.0 : rng.uniform(0.0, 1.0)}};

    std::vector<double> zs;
    for (double z = -5.0; z <= 5.0 + 1e-9; z += 0.25) zs.push_back(z);

    const auto droplets = fcg_sample(p, mc_n, derive_seed(555, trial));
    std::vector<double> xs(mc_n);
    for (std::size_t i = 0; i < mc_n; ++i) xs[i] = droplets[i].x[0];

    std::vector<double> quad_err(zs.size()), mc_err(zs.size());
    parallel_for(zs.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t k = lo; k < hi; ++k) {
        const double z = zs[k];
        const CfValue closed = characteristic_function(p, {&z, 1});
        const CfValue quad = cf_integral_oracle(p, z);
        quad_err[k] = std::hypot(closed.re - quad.re, closed.im - quad.im);
        double c = 0.0, s = 0.0;
        for (double x : xs) {
          c += std::cos(z * x);
          s += std::sin(z * x);
        }
        c /= static_cast<double>(mc_n);
        s /= static_cast<double>(mc_n);
        mc_err[k] = std::hypot(closed.re - c, closed.im - s);
      }
    }, /*grain=*/1);
    for (double e : quad_err) worst_quad = std::max(worst_quad, e);
    for (double e : mc_err) worst_mc = std::max(worst_mc, e);
  }

  out.pass = worst_quad <= 1e-8 && worst_mc <= mc_tol;
  std::ostringstream os;
  os << "max quad err " << worst_quad << " (tol 1e-8), max mc err " << worst_mc
     << " (tol " << mc_tol << ")";
  out.detail = os.str();
  return out;
}

// --- Criterion 2: Gaussian degeneration at He = 0 --------------------------

Outcome criterion_gaussian_degeneration() {
  Outcome out;
  double worst = 0.0;
  Rng rng(20240002);
  for (int trial = 0; trial < 10; ++trial) {
    const double ex = rng.uniform(-3.0, 3.0);
    const double en = rng.uniform(0.5, 5.0);
    CloudModelParams p{{ex}, {en}, {0.0}};
    for (double z = -5.0; z <= 5.0 + 1e-9; z += 0.25) {
      const CfValue v = characteristic_function(p, {&z, 1});
      const double amp = std::exp(-0.5 * en * en * z * z);
      worst = std::max(worst, std::hypot(v.re - amp * std::cos(ex * z),
                                         v.im - amp * std::sin(ex * z)));
    }
  }
  out.pass = worst <= 1e-12;
  out.detail = "max deviation from exp(izEx - En^2 z^2 / 2): " +
               std::to_string(worst);
  return out;
}

// --- Criterion 3: numeric PDF normalizes to 1 -------------------------------

Outcome criterion_pdf_normalization() {
  Outcome out;
  double worst = 0.0;
  Rng rng(20240003);
  for (int trial = 0; trial < 10; ++trial) {
    const double ex = rng.uniform(-2.0, 2.0);
    const double en = rng.uniform(0.5, 3.0);
    // He small relative to En keeps the stated 12*En window capturing the
    // full mass of the scale mixture.
    const double he = en * rng.uniform(0.02, 0.1);
    CloudModelParams p{{ex}, {en}, {he}};
    const double total = integrate_adaptive(
        [&](double x) { return pdf_numeric(p, x); }, ex - 12.0 * en,
        ex + 12.0 * en, /*rel_tol=*/1e-9, /*fail_tol=*/1e-5);
    worst = std::max(worst, std::abs(total - 1.0));
  }
  out.pass = worst <= 1e-4;
  out.detail = "max |integral - 1| = " + std::to_string(worst);
  return out;
}

// --- Criterion 4: CF-form MMD matches the Gaussian-kernel U-statistic ------

Outcome criterion_bochner_equivalence() {
  Outcome out;
  const std::size_t n = 256, d = 2;
  const double bandwidth = 1.5;
  Rng rng(20240004);
  std::vector<double> z1(n * d), z2(n * d);
  for (double& v : z1) v = rng.normal();
  for (double& v : z2) v = rng.normal(0.8, 1.2);

  const double kernel_value = kernel_mmd_oracle(z1, n, z2, n, d, bandwidth);

  const std::size_t resamples = 20;
  std::vector<double> cf_values(resamples);
  parallel_for(resamples, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      const FrequencyBatch w =
          sample_frequencies(d, 100000, bandwidth, derive_seed(777, r));
      cf_values[r] = cf_mmd_squared_two_sample(z1, n, z2, n, d, w);
    }
  }, /*grain=*/1);

  const double mean = testsupport::mean(cf_values);
  const double se = testsupport::standard_error(cf_values);
  out.pass = std::abs(mean - kernel_value) <= 3.0 * se;
  std::ostringstream os;
  os << "kernel " << kernel_value << ", cf-form " << mean << " +- " << se
     << " (3 SE = " << 3.0 * se << ")";
  out.detail = os.str();
  return out;
}

// --- Criterion 5: null behavior of gamma + c_p ------------------------------

Outcome criterion_null_behavior() {
  Outcome out;
  const CloudModelParams prior = fp_prior(8);
  const std::size_t n = 512, m = 2048;
  std::vector<double> values;
  bool negative_gamma_seen = false;
  for (std::uint64_t r = 0; r < 50; ++r) {
    const auto droplets = fcg_sample(prior, n, derive_seed(888, 2 * r));
    std::vector<double> z(n * 8);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < 8; ++j) z[i * 8 + j] = droplets[i].x[j];
    }
    const FrequencyBatch w =
        sample_frequencies(8, m, default_freq_scale(8), derive_seed(888, 2 * r + 1));
    const GammaValue g = gamma(z, n, 8, w, prior);
    values.push_back(g.gamma + g.c_p);
    if (g.gamma < 0.0) negative_gamma_seen = true;
  }
  const double mean = testsupport::mean(values);
  const double se = testsupport::standard_error(values);
  out.pass = std::abs(mean) <= 5.0 * se && negative_gamma_seen;
  std::ostringstream os;
  os << "mean(gamma + c_p) " << mean << " vs 5 SE " << 5.0 * se
     << ", negative gamma seen: " << (negative_gamma_seen ? "yes" : "no");
  out.detail = os.str();
  return out;
}

// --- Criterion 6: full-loss gradient vs finite differences ------------------

Outcome criterion_gradient_integrity() {
  Outcome out;
  const std::size_t input_dim = 5, d = 3, n = 4, m = 7;
  Autoencoder model = make_autoencoder(input_dim, {4}, d, 60001);
  const CloudModelParams prior = fp_prior(d);
  const FrequencyBatch w = sample_frequencies(d, m, default_freq_scale(d), 60002);
  const double lambda = 2.5;
  Rng rng(60003);
  std::vector<double> x(n * input_dim);
  for (double& v : x) v = rng.uniform();

  Tape tape;
  const BoundAutoencoder bound = bind(tape, model);
  Tensor xt = tape.leaf({n, input_dim}, x);
  Tensor total = loss_node(tape, xt, bound, prior, w, lambda);
  tape.backward(total);
  std::vector<double> grad;
  for (const BoundMlp* net : {&bound.encoder, &bound.decoder}) {
    for (std::size_t l = 0; l < net->weights.size(); ++l) {
      const auto& gw = tape.grad(net->weights[l]);
      grad.insert(grad.end(), gw.begin(), gw.end());
      const auto& gb = tape.grad(net->biases[l]);
      grad.insert(grad.end(), gb.begin(), gb.end());
    }
  }

  std::vector<double> flat;
  for (const Mlp* net : {&model.encoder, &model.decoder}) {
    for (const DenseLayer& l : net->layers) {
      flat.insert(flat.end(), l.w.begin(), l.w.end());
      flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
  }
  auto f = [&](const std::vector<double>& params) {
    Autoencoder m2 = model;
    std::size_t pos = 0;
    for (Mlp* net : {&m2.encoder, &m2.decoder}) {
      for (DenseLayer& l : net->layers) {
        std::copy(params.begin() + pos, params.begin() + pos + l.w.size(),
                  l.w.begin());
        pos += l.w.size();
        std::copy(params.begin() + pos, params.begin() + pos + l.b.size(),
                  l.b.begin());
        pos += l.b.size();
      }
    }
    Tape t;
    const BoundAutoencoder b2 = bind(t, m2);
    Tensor xx = t.leaf({n, input_dim}, x);
    return loss_node(t, xx, b2, prior, w, lambda).scalar();
  };
  const auto fd = testsupport::finite_diff_gradient(f, flat);
  const double err = testsupport::max_rel_error(grad, fd);
  out.pass = err <= 1e-5;
  out.detail = "max relative gradient error " + std::to_string(err) + " over " +
               std::to_string(flat.size()) + " parameters";
  return out;
}

// --- Criteria 7 and 8: desk-scale training effect and determinism -----------

struct DigitData {
  testsupport::TempDir dir{"cmcfae-acceptance"};
  std::string images;
  std::string labels;

  DigitData() {
    images = dir.file("digits10k.idx");
    labels = dir.file("digits10k-labels.idx");
    testsupport::write_digit_idx(images, labels, 10000, 424242);
  }
};

TrainConfig desk_config(std::uint64_t seed, double lambda) {
  TrainConfig config;
  config.lambda = lambda;
  config.lr = 1e-3;
  config.beta1 = 0.5;
  config.beta2 = 0.999;
  config.batch_size = 100;
  config.epochs = 20;
  config.latent_dim = 8;
  config.m_frequencies = 128;
  config.prior_mode = PriorMode::FP;
  config.rng_seed = seed;
  return config;
}

const std::vector<std::size_t> kDeskHidden{128, 64};

Outcome criterion_training_effect(const DigitData& data) {
  Outcome out;
  std::ostringstream os;
  const Dataset ds = load_idx(data.images, data.labels);

  // (a) + (b): the lambda = 10, seed 1 run.
  const TrainResult main_run = train(desk_config(1, 10.0), ds, kDeskHidden);
  bool monotone = true;
  for (std::size_t e = 2; e < main_run.epoch_recon_mean.size(); ++e) {
    if (!(main_run.epoch_recon_mean[e] < main_run.epoch_recon_mean[e - 1])) {
      monotone = false;
      os << "(a) violated at epoch " << e + 1 << "; ";
    }
  }
  const double gcp_first = main_run.epoch_gamma_plus_cp_mean.front();
  const double gcp_last = main_run.epoch_gamma_plus_cp_mean.back();
  const bool regularized = gcp_last < gcp_first;

  // (c): paired lambda = 0 controls over 5 seeds; the seed-1 regularized run
  // is the one from (a)/(b).
  std::vector<double> diffs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double reg_final =
        seed == 1 ? gcp_last
                  : train(desk_config(seed, 10.0), ds, kDeskHidden)
                        .epoch_gamma_plus_cp_mean.back();
    const TrainResult control = train(desk_config(seed, 0.0), ds, kDeskHidden);
    diffs.push_back(control.epoch_gamma_plus_cp_mean.back() - reg_final);
  }
  const double mean_diff = testsupport::mean(diffs);
  const double se_diff = testsupport::standard_error(diffs);
  const bool separated = mean_diff >= 3.0 * se_diff && mean_diff > 0.0;

  out.pass = monotone && regularized && separated;
  os << "(a) epoch recon strictly decreasing after epoch 2: "
     << (monotone ? "yes" : "NO") << "; (b) gamma+c_p " << gcp_first << " -> "
     << gcp_last << (regularized ? " (down)" : " (NOT down)")
     << "; (c) lambda-0 minus lambda-10 gap " << mean_diff << " vs 3 SE "
     << 3.0 * se_diff;
  out.detail = os.str();
  return out;
}

Outcome criterion_determinism(const DigitData& data) {
  Outcome out;
  // Two fresh CLI runs of the criterion-7 config: metrics logs and
  // checkpoints must be byte-identical.
  nlohmann::json cfg = desk_config(1, 10.0).to_json();
  cfg["hidden_widths"] = kDeskHidden;
  cfg["dataset"] = {{"kind", "idx"},
                    {"images", data.images},
                    {"labels", data.labels}};
  const std::string cfg_path = data.dir.file("determinism-config.json");
  {
    std::ofstream os_file(cfg_path);
    os_file << cfg.dump(2);
  }
  const std::string out_a = data.dir.file("det-a");
  const std::string out_b = data.dir.file("det-b");
  for (const std::string& out_dir : {out_a, out_b}) {
    const std::string cmd = std::string(CMCFAE_CLI_PATH) + " train --config " +
                            cfg_path + " --out " + out_dir + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (WEXITSTATUS(status) != 0) {
      out.pass = false;
      out.detail = "training run exited with " +
                   std::to_string(WEXITSTATUS(status));
      return out;
    }
  }
  const std::string metrics_a = testsupport::slurp(out_a + "/metrics.jsonl");
  const std::string metrics_b = testsupport::slurp(out_b + "/metrics.jsonl");
  const std::string ckpt_a = testsupport::slurp(out_a + "/checkpoint.bin");
  const std::string ckpt_b = testsupport::slurp(out_b + "/checkpoint.bin");
  const bool metrics_same = !metrics_a.empty() && metrics_a == metrics_b;
  const bool ckpt_same = !ckpt_a.empty() && ckpt_a == ckpt_b;
  out.pass = metrics_same && ckpt_same;
  std::ostringstream os;
  os << "metrics " << metrics_a.size() << " bytes "
     << (metrics_same ? "identical" : "DIFFER") << ", checkpoint "
     << ckpt_a.size() << " bytes " << (ckpt_same ? "identical" : "DIFFER");
  out.detail = os.str();
  return out;
}

// --- Criterion 9: IDX ingestion at canonical sizes --------------------------

Outcome criterion_idx_ingestion() {
  Outcome out;
  testsupport::TempDir dir("cmcfae-idx-canonical");
  const std::string train_imgs = dir.file("train-images-idx3-ubyte");
  const std::string train_lbls = dir.file("train-labels-idx1-ubyte");
  const std::string test_imgs = dir.file("t10k-images-idx3-ubyte");
  const std::string test_lbls = dir.file("t10k-labels-idx1-ubyte");
  testsupport::write_digit_idx(train_imgs, train_lbls, 60000, 1001);
  testsupport::write_digit_idx(test_imgs, test_lbls, 10000, 1002);

  const Dataset train = load_idx(train_imgs, train_lbls);
  const Dataset test = load_idx(test_imgs, test_lbls);
  const bool shapes_ok = train.n == 60000 && test.n == 10000 &&
                         train.input_dim == 28 * 28 && test.input_dim == 28 * 28 &&
                         train.labels.size() == 60000;

  bool rejected = false;
  std::string message;
  try {
    load_idx(train_lbls);  // label magic fed to the image loader
  } catch (const FormatError& e) {
    rejected = true;
    message = e.what();
  }
  const bool message_ok = message.find("bad image magic") != std::string::npos;

  out.pass = shapes_ok && rejected && message_ok;
  std::ostringstream os;
  os << "train 60000x784 " << (shapes_ok ? "parsed" : "WRONG SHAPE")
     << ", corrupted magic " << (rejected && message_ok ? "rejected" : "NOT rejected");
  out.detail = os.str();
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  auto wanted = [&](int id) { return selected.empty() || selected.count(id); };

  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };

  // The digit dataset is shared by criteria 7 and 8 and generated lazily.
  std::unique_ptr<DigitData> digits;
  auto digit_data = [&]() -> DigitData& {
    if (!digits) {
      std::printf("  (generating 10k-image desk-scale digit dataset; canonical"
                  " MNIST is not fetchable in this environment)\n");
      digits = std::make_unique<DigitData>();
    }
    return *digits;
  };

  const std::vector<Entry> entries{
      {1, "closed-form CF vs quadrature oracle and 1e6-sample empirical CF",
       criterion_cf_validation},
      {2, "He=0 degeneration to the Gaussian CF", criterion_gaussian_degeneration},
      {3, "numeric PDF normalization", criterion_pdf_normalization},
      {4, "CF-form MMD vs Gaussian-kernel U-statistic (Bochner)",
       criterion_bochner_equivalence},
      {5, "null behavior of gamma + c_p under the prior", criterion_null_behavior},
      {6, "full-loss gradient vs central finite differences",
       criterion_gradient_integrity},
      {7, "desk-scale training effect (recon curve, regularizer pull, "
          "lambda contrast)",
       [&] { return criterion_training_effect(digit_data()); }},
      {8, "determinism: byte-identical metrics and checkpoints",
       [&] { return criterion_determinism(digit_data()); }},
      {9, "IDX ingestion at canonical sizes", criterion_idx_ingestion},
  };

  int failures = 0;
  for (const Entry& entry : entries) {
    if (!wanted(entry.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = entry.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[criterion %d] %s: %s (%s) [%.1fs]\n", entry.id, entry.name,
                outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str(), secs);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures > 0) std::printf("%d criterion(s) FAILED\n", failures);
  return failures;
}
