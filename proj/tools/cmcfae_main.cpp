// Command-line surface over the library: training, decoding from the prior,
// dataset/latent exports, and the executable diagnostic checks (cf-check,
// mmd-null) whose exit codes make the math claims CI-gateable.
//
// Exit codes: 0 success; 2 usage/config/dimension/format problems;
// 3 non-finite-loss abort during training; 4 a diagnostic check ran fine but
// failed its tolerance.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmcfae/cf_mmd.hpp"
#include "cmcfae/cloud_model.hpp"
#include "cmcfae/data.hpp"
#include "cmcfae/errors.hpp"
#include "cmcfae/networks.hpp"
#include "cmcfae/parallel.hpp"
#include "cmcfae/rng.hpp"
#include "cmcfae/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNanAbort = 3;
constexpr int kExitCheckFailed = 4;

int fail(const std::string& tag, int code, const std::string& msg) {
  std::cerr << "error tag=" << tag << " exit=" << code << " msg=\"" << msg
            << "\"\n";
  return code;
}

/// Shortest round-trippable decimal form of a double.
std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw cmcfae::FormatError("cannot open " + path);
  json j;
  is >> j;
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw cmcfae::FormatError("cannot open for writing: " + path);
  os << content;
  if (!os) throw cmcfae::FormatError("write failed: " + path);
}

cmcfae::CloudModelParams prior_from_arg(const std::string& arg,
                                        std::size_t latent_dim,
                                        std::uint64_t seed) {
  if (arg == "fp") return cmcfae::fp_prior(latent_dim);
  if (arg == "vp") return cmcfae::vp_prior(latent_dim, cmcfae::derive_seed(seed, 0));
  return cmcfae::CloudModelParams::from_json(load_json_file(arg));
}

cmcfae::Dataset dataset_from_config(const json& cfg) {
  const std::string kind = cfg.at("kind").get<std::string>();
  if (kind == "idx") {
    const std::string images = cfg.at("images").get<std::string>();
    const std::string labels = cfg.value("labels", std::string{});
    cmcfae::Dataset ds = cmcfae::load_idx(images, labels);
    if (cfg.contains("limit")) {
      const std::size_t limit = cfg.at("limit").get<std::size_t>();
      if (limit < ds.n) {
        ds.n = limit;
        ds.images.resize(limit * ds.input_dim);
        if (!ds.labels.empty()) ds.labels.resize(limit);
      }
    }
    return ds;
  }
  if (kind == "synthetic") {
    cmcfae::SyntheticSpec spec;
    const std::string skind = cfg.at("synthetic_kind").get<std::string>();
    if (skind == "gaussian_blobs") {
      spec.kind = cmcfae::SyntheticKind::gaussian_blobs;
    } else if (skind == "ring") {
      spec.kind = cmcfae::SyntheticKind::ring;
    } else {
      throw cmcfae::ContractError("dataset: unknown synthetic_kind \"" + skind +
                                  "\"");
    }
    spec.components = cfg.value("components", std::size_t{1});
    spec.noise_std = cfg.value("noise_std", 0.0);
    spec.n = cfg.at("n").get<std::size_t>();
    return cmcfae::make_synthetic(spec, cfg.value("seed", std::uint64_t{1}));
  }
  throw cmcfae::ContractError("dataset: unknown kind \"" + kind + "\"");
}

// --- train ------------------------------------------------------------------

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  json cfg;
  try {
    cfg = load_json_file(config_path);
  } catch (const json::exception& e) {
    return fail("config_error", kExitUsage,
                config_path + ": " + std::string(e.what()));
  } catch (const cmcfae::FormatError& e) {
    return fail("config_error", kExitUsage, e.what());
  }

  cmcfae::TrainConfig config;
  cmcfae::Dataset dataset;
  std::vector<std::size_t> hidden;
  try {
    config = cmcfae::TrainConfig::from_json(cfg);
    hidden = cfg.value("hidden_widths", std::vector<std::size_t>{512, 256});
    dataset = dataset_from_config(cfg.at("dataset"));
  } catch (const json::exception& e) {
    return fail("config_error", kExitUsage, std::string(e.what()));
  } catch (const cmcfae::ContractError& e) {
    return fail("config_error", kExitUsage, e.what());
  } catch (const cmcfae::FormatError& e) {
    return fail("format_error", kExitUsage, e.what());
  } catch (const cmcfae::DimensionError& e) {
    return fail("dimension_error", kExitUsage, e.what());
  }

  fs::create_directories(out_dir);
  const std::string metrics_path = out_dir + "/metrics.jsonl";

  // Writer thread consumes a bounded queue; training blocks when it is full.
  cmcfae::BoundedQueue<cmcfae::StepMetrics> queue(1024);
  std::ofstream metrics_os(metrics_path, std::ios::binary);
  if (!metrics_os) {
    return fail("io_error", kExitUsage, "cannot open " + metrics_path);
  }
  std::thread writer([&] {
    while (auto item = queue.pop()) {
      metrics_os << item->to_json().dump() << "\n";
    }
    metrics_os.flush();
  });

  cmcfae::TrainResult result;
  try {
    result = cmcfae::train(config, dataset, hidden,
                           [&](const cmcfae::StepMetrics& m) { queue.push(m); });
  } catch (const cmcfae::TrainAbort& abort) {
    queue.close();
    writer.join();
    json dump{{"step", abort.step()},
              {"tensor", abort.tensor_name()},
              {"last_metrics", abort.last_metrics().to_json()}};
    write_text_file(out_dir + "/nan_dump.json", dump.dump(2) + "\n");
    return fail("nan_abort", kExitNanAbort, abort.what());
  } catch (...) {
    queue.close();
    writer.join();
    throw;
  }
  queue.close();
  writer.join();

  cmcfae::save_checkpoint(out_dir + "/checkpoint.bin", result.model);
  write_text_file(out_dir + "/prior.json", result.prior.to_json().dump(2) + "\n");

  json summary{
      {"final_recon", result.epoch_recon_mean.back()},
      {"final_gamma", result.epoch_gamma_mean.back()},
      {"final_gamma_plus_c_p", result.epoch_gamma_plus_cp_mean.back()},
      {"epoch_recon_mean", result.epoch_recon_mean},
      {"epoch_gamma_mean", result.epoch_gamma_mean},
      {"epoch_gamma_plus_cp_mean", result.epoch_gamma_plus_cp_mean},
      {"steps", result.metrics.size()},
      {"config", config.to_json()}};
  write_text_file(out_dir + "/summary.json", summary.dump(2) + "\n");
  std::cout << "train: " << result.metrics.size() << " steps, final recon "
            << fmt(result.epoch_recon_mean.back()) << ", final gamma+c_p "
            << fmt(result.epoch_gamma_plus_cp_mean.back()) << "\n";
  return kExitOk;
}

// --- generate -----------------------------------------------------------------

int cmd_generate(const std::string& checkpoint, const std::string& prior_arg,
                 std::size_t n, std::uint64_t seed, const std::string& out_csv) {
  const cmcfae::Autoencoder model = cmcfae::load_checkpoint(checkpoint);
  const std::size_t d = model.latent_dim();
  const cmcfae::CloudModelParams prior = prior_from_arg(prior_arg, d, seed);
  if (prior.dim() != d) {
    return fail("dimension_error", kExitUsage,
                "prior dimension " + std::to_string(prior.dim()) +
                    " != checkpoint latent dimension " + std::to_string(d));
  }
  const std::size_t out_dim = model.input_dim();
  std::string csv;
  for (std::size_t j = 0; j < out_dim; ++j) {
    if (j) csv += ",";
    csv += "p" + std::to_string(j);
  }
  csv += "\n";
  if (n > 0) {
    const auto droplets = cmcfae::fcg_sample(prior, n, cmcfae::derive_seed(seed, 1));
    std::vector<double> latents(n * d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) latents[i * d + j] = droplets[i].x[j];
    }
    const std::vector<double> pixels = cmcfae::decode_plain(model, latents, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < out_dim; ++j) {
        if (j) csv += ",";
        csv += fmt(pixels[i * out_dim + j]);
      }
      csv += "\n";
    }
  }
  write_text_file(out_csv, csv);
  std::cout << "generate: wrote " << n << " samples to " << out_csv << "\n";
  return kExitOk;
}

// --- cf-check -----------------------------------------------------------------

int cmd_cf_check(double ex, double en, double he, std::vector<double> grid,
                 std::size_t mc_n, std::uint64_t seed, const std::string& out_csv) {
  cmcfae::CloudModelParams params{{ex}, {en}, {he}};
  params.validate();
  if (grid.size() != 3) {
    return fail("usage_error", kExitUsage, "--grid needs zmin zmax step");
  }
  const double zmin = grid[0], zmax = grid[1], step = grid[2];
  if (!(step > 0.0) || zmin > zmax) {
    return fail("usage_error", kExitUsage, "--grid needs zmin <= zmax, step > 0");
  }
  if (mc_n == 0) {
    return fail("usage_error", kExitUsage, "--mc-n must be >= 1");
  }
  std::vector<double> zs;
  for (double z = zmin; z <= zmax + 0.5 * step; z += step) zs.push_back(z);

  const auto droplets = cmcfae::fcg_sample(params, mc_n, seed);
  std::vector<double> xs(mc_n);
  for (std::size_t i = 0; i < mc_n; ++i) xs[i] = droplets[i].x[0];

  struct Row {
    double z;
    cmcfae::CfValue theorem, quad, mc;
    double err_quad, err_mc;
  };
  std::vector<Row> rows(zs.size());
  std::vector<std::string> quad_errors(zs.size());
  cmcfae::parallel_for(zs.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      Row& row = rows[k];
      row.z = zs[k];
      row.theorem = cmcfae::characteristic_function(params, {&row.z, 1});
      try {
        row.quad = cmcfae::cf_integral_oracle(params, row.z);
      } catch (const cmcfae::NumericError& e) {
        quad_errors[k] = e.what();
        continue;
      }
      double c = 0.0, s = 0.0;
      for (double x : xs) {
        c += std::cos(row.z * x);
        s += std::sin(row.z * x);
      }
      row.mc = {c / static_cast<double>(mc_n), s / static_cast<double>(mc_n)};
      row.err_quad = std::hypot(row.theorem.re - row.quad.re,
                                row.theorem.im - row.quad.im);
      row.err_mc = std::hypot(row.theorem.re - row.mc.re,
                              row.theorem.im - row.mc.im);
    }
  }, /*grain=*/1);
  for (const std::string& err : quad_errors) {
    if (!err.empty()) return fail("numeric_error", kExitCheckFailed, err);
  }

  std::string csv =
      "z,cf_theorem_re,cf_theorem_im,cf_quad_re,cf_quad_im,cf_mc_re,cf_mc_im,"
      "abs_err_quad,abs_err_mc\n";
  double max_quad = 0.0, max_mc = 0.0;
  for (const Row& row : rows) {
    max_quad = std::max(max_quad, row.err_quad);
    max_mc = std::max(max_mc, row.err_mc);
    csv += fmt(row.z) + "," + fmt(row.theorem.re) + "," + fmt(row.theorem.im) +
           "," + fmt(row.quad.re) + "," + fmt(row.quad.im) + "," + fmt(row.mc.re) +
           "," + fmt(row.mc.im) + "," + fmt(row.err_quad) + "," + fmt(row.err_mc) +
           "\n";
  }
  write_text_file(out_csv, csv);

  const double mc_tol = 4.0 / std::sqrt(static_cast<double>(mc_n));
  std::cout << "cf-check: max_abs_err_quad " << fmt(max_quad)
            << " (tol 1e-08), max_abs_err_mc " << fmt(max_mc) << " (tol "
            << fmt(mc_tol) << ")\n";
  if (max_quad > 1e-8 || max_mc > mc_tol) {
    return fail("tolerance_failure", kExitCheckFailed,
                "cf-check exceeded tolerance: quad " + fmt(max_quad) + ", mc " +
                    fmt(max_mc));
  }
  return kExitOk;
}

// --- mmd-null -----------------------------------------------------------------

int cmd_mmd_null(const std::string& prior_config, std::size_t n, std::size_t m,
                 std::size_t reseeds, double shift, double freq_scale,
                 std::uint64_t seed, const std::string& out_json) {
  if (n < 2) {
    return fail("usage_error", kExitUsage,
                "--n must be >= 2 (the estimator divides by n(n-1))");
  }
  if (reseeds < 2) {
    return fail("usage_error", kExitUsage, "--reseeds must be >= 2");
  }

  cmcfae::CloudModelParams prior;
  if (prior_config.rfind("fp:", 0) == 0) {
    prior = cmcfae::fp_prior(std::stoul(prior_config.substr(3)));
  } else if (prior_config.rfind("vp:", 0) == 0) {
    const std::string rest = prior_config.substr(3);
    const auto colon = rest.find(':');
    const std::size_t d = std::stoul(rest.substr(0, colon));
    const std::uint64_t pseed =
        colon == std::string::npos ? 0 : std::stoull(rest.substr(colon + 1));
    prior = cmcfae::vp_prior(d, pseed);
  } else {
    prior = cmcfae::CloudModelParams::from_json(load_json_file(prior_config));
  }
  const std::size_t d = prior.dim();
  const double scale = freq_scale > 0.0 ? freq_scale : cmcfae::default_freq_scale(d);

  std::vector<double> values(reseeds);
  for (std::size_t r = 0; r < reseeds; ++r) {
    const auto droplets =
        cmcfae::fcg_sample(prior, n, cmcfae::derive_seed(seed, 2 * r));
    std::vector<double> z(n * d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) z[i * d + j] = droplets[i].x[j] + shift;
    }
    const cmcfae::FrequencyBatch w = cmcfae::sample_frequencies(
        d, m, scale, cmcfae::derive_seed(seed, 2 * r + 1));
    const cmcfae::GammaValue g = cmcfae::gamma(z, n, d, w, prior);
    values[r] = g.gamma + g.c_p;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(reseeds);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(reseeds - 1);
  const double se = std::sqrt(var / static_cast<double>(reseeds));
  const bool pass = std::abs(mean) <= 5.0 * se;

  json out{{"n", n},           {"m", m},
           {"reseeds", reseeds}, {"shift", shift},
           {"freq_scale", scale}, {"mean", mean},
           {"se", se},          {"pass", pass},
           {"values", values}};
  write_text_file(out_json, out.dump(2) + "\n");
  std::cout << "mmd-null: mean(gamma + c_p) " << fmt(mean) << ", se " << fmt(se)
            << (pass ? " -> consistent with 0\n" : " -> NOT consistent with 0\n");
  if (!pass) {
    return fail("statistical_failure", kExitCheckFailed,
                "mean " + fmt(mean) + " exceeds 5*SE " + fmt(5.0 * se));
  }
  return kExitOk;
}

// --- latent-dump / reconstruct ---------------------------------------------

int cmd_latent_dump(const std::string& checkpoint, const std::string& images,
                    const std::string& labels, const std::string& out_csv) {
  const cmcfae::Autoencoder model = cmcfae::load_checkpoint(checkpoint);
  const cmcfae::Dataset ds = cmcfae::load_idx(images, labels);
  if (ds.input_dim != model.input_dim()) {
    return fail("dimension_error", kExitUsage,
                "dataset width " + std::to_string(ds.input_dim) +
                    " != checkpoint input width " +
                    std::to_string(model.input_dim()));
  }
  const std::size_t d = model.latent_dim();
  std::string csv = "label";
  for (std::size_t j = 1; j <= d; ++j) csv += ",z_" + std::to_string(j);
  csv += "\n";
  const std::size_t chunk = 512;
  for (std::size_t start = 0; start < ds.n; start += chunk) {
    const std::size_t count = std::min(chunk, ds.n - start);
    const std::vector<double> z = cmcfae::encode_plain(
        model,
        {ds.images.data() + start * ds.input_dim, count * ds.input_dim}, count);
    for (std::size_t i = 0; i < count; ++i) {
      const int label = ds.labels.empty() ? -1 : ds.labels[start + i];
      csv += std::to_string(label);
      for (std::size_t j = 0; j < d; ++j) csv += "," + fmt(z[i * d + j]);
      csv += "\n";
    }
  }
  write_text_file(out_csv, csv);
  std::cout << "latent-dump: wrote " << ds.n << " rows to " << out_csv << "\n";
  return kExitOk;
}

int cmd_reconstruct(const std::string& checkpoint, const std::string& images,
                    const std::string& labels, std::size_t limit,
                    const std::string& out_csv) {
  const cmcfae::Autoencoder model = cmcfae::load_checkpoint(checkpoint);
  cmcfae::Dataset ds = cmcfae::load_idx(images, labels);
  if (ds.input_dim != model.input_dim()) {
    return fail("dimension_error", kExitUsage,
                "dataset width " + std::to_string(ds.input_dim) +
                    " != checkpoint input width " +
                    std::to_string(model.input_dim()));
  }
  const std::size_t n = limit > 0 ? std::min(limit, ds.n) : ds.n;
  const std::size_t dim = ds.input_dim;
  std::string csv = "index,recon_error";
  for (std::size_t j = 0; j < dim; ++j) csv += ",p" + std::to_string(j);
  csv += "\n";
  double total_err = 0.0;
  const std::size_t chunk = 256;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t count = std::min(chunk, n - start);
    const std::span<const double> x{ds.images.data() + start * dim, count * dim};
    const std::vector<double> z = cmcfae::encode_plain(model, x, count);
    const std::vector<double> xh = cmcfae::decode_plain(model, z, count);
    for (std::size_t i = 0; i < count; ++i) {
      double err = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = x[i * dim + j] - xh[i * dim + j];
        err += diff * diff;
      }
      total_err += err;
      csv += std::to_string(start + i) + "," + fmt(err);
      for (std::size_t j = 0; j < dim; ++j) csv += "," + fmt(xh[i * dim + j]);
      csv += "\n";
    }
  }
  write_text_file(out_csv, csv);
  std::cout << "reconstruct: mean recon error "
            << fmt(total_err / static_cast<double>(n)) << " over " << n
            << " images\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cloud-model characteristic-function autoencoder"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a model from a JSON config");
  std::string train_config, train_out;
  train->add_option("--config", train_config, "config JSON path")->required();
  train->add_option("--out", train_out, "output directory")->required();

  // generate
  auto* generate =
      app.add_subcommand("generate", "decode latents drawn from the prior");
  std::string gen_ckpt, gen_prior = "fp", gen_out;
  std::size_t gen_n = 16;
  std::uint64_t gen_seed = 1;
  generate->add_option("--checkpoint", gen_ckpt, "checkpoint path")->required();
  generate->add_option("--prior", gen_prior,
                       "fp | vp | path to a cloud-params JSON");
  generate->add_option("--n", gen_n, "number of samples");
  generate->add_option("--seed", gen_seed, "rng seed");
  generate->add_option("--out", gen_out, "output CSV path")->required();

  // cf-check
  auto* cf_check = app.add_subcommand(
      "cf-check", "closed-form CF vs quadrature and Monte Carlo");
  double cf_ex = 0.0, cf_en = 1.0, cf_he = 0.1;
  std::vector<double> cf_grid{-5.0, 5.0, 0.25};
  std::size_t cf_mc_n = 1000000;
  std::uint64_t cf_seed = 1;
  std::string cf_out;
  cf_check->add_option("--ex", cf_ex, "expectation");
  cf_check->add_option("--en", cf_en, "entropy (> 0)");
  cf_check->add_option("--he", cf_he, "hyper-entropy (>= 0)");
  cf_check->add_option("--grid", cf_grid, "zmin zmax step")->expected(3);
  cf_check->add_option("--mc-n", cf_mc_n, "Monte Carlo sample count");
  cf_check->add_option("--seed", cf_seed, "rng seed");
  cf_check->add_option("--out", cf_out, "output CSV path")->required();

  // mmd-null
  auto* mmd_null = app.add_subcommand(
      "mmd-null", "null distribution of gamma + c_p under the prior");
  std::string null_prior = "fp:8", null_out;
  std::size_t null_n = 512, null_m = 2048, null_reseeds = 50;
  double null_shift = 0.0, null_scale = 0.0;
  std::uint64_t null_seed = 1;
  mmd_null->add_option("--prior-config", null_prior,
                       "fp:<d> | vp:<d>:<seed> | path to a cloud-params JSON");
  mmd_null->add_option("--n", null_n, "latent batch size");
  mmd_null->add_option("--m", null_m, "frequency count");
  mmd_null->add_option("--reseeds", null_reseeds, "number of reseeds");
  mmd_null->add_option("--shift", null_shift,
                       "additive shift applied to every latent coordinate");
  mmd_null->add_option("--freq-scale", null_scale,
                       "frequency scale (default sqrt(d))");
  mmd_null->add_option("--seed", null_seed, "rng seed");
  mmd_null->add_option("--out", null_out, "output JSON path")->required();

  // latent-dump
  auto* latent_dump =
      app.add_subcommand("latent-dump", "encode a dataset and export latents");
  std::string dump_ckpt, dump_images, dump_labels, dump_out;
  latent_dump->add_option("--checkpoint", dump_ckpt, "checkpoint path")->required();
  latent_dump->add_option("--images", dump_images, "IDX images path")->required();
  latent_dump->add_option("--labels", dump_labels, "IDX labels path (optional)");
  latent_dump->add_option("--out", dump_out, "output CSV path")->required();

  // reconstruct
  auto* reconstruct =
      app.add_subcommand("reconstruct", "encode-decode a dataset and export");
  std::string rec_ckpt, rec_images, rec_labels, rec_out;
  std::size_t rec_limit = 0;
  reconstruct->add_option("--checkpoint", rec_ckpt, "checkpoint path")->required();
  reconstruct->add_option("--images", rec_images, "IDX images path")->required();
  reconstruct->add_option("--labels", rec_labels, "IDX labels path (optional)");
  reconstruct->add_option("--limit", rec_limit, "reconstruct first N (0 = all)");
  reconstruct->add_option("--out", rec_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage_error", kExitUsage, e.what());
  }

  try {
    if (*train) return cmd_train(train_config, train_out);
    if (*generate) return cmd_generate(gen_ckpt, gen_prior, gen_n, gen_seed, gen_out);
    if (*cf_check) {
      return cmd_cf_check(cf_ex, cf_en, cf_he, cf_grid, cf_mc_n, cf_seed, cf_out);
    }
    if (*mmd_null) {
      return cmd_mmd_null(null_prior, null_n, null_m, null_reseeds, null_shift,
                          null_scale, null_seed, null_out);
    }
    if (*latent_dump) {
      return cmd_latent_dump(dump_ckpt, dump_images, dump_labels, dump_out);
    }
    if (*reconstruct) {
      return cmd_reconstruct(rec_ckpt, rec_images, rec_labels, rec_limit, rec_out);
    }
  } catch (const cmcfae::DimensionError& e) {
    return fail("dimension_error", kExitUsage, e.what());
  } catch (const cmcfae::ContractError& e) {
    return fail("contract_error", kExitUsage, e.what());
  } catch (const cmcfae::FormatError& e) {
    return fail("format_error", kExitUsage, e.what());
  } catch (const cmcfae::NumericError& e) {
    return fail("numeric_error", kExitCheckFailed, e.what());
  } catch (const json::exception& e) {
    return fail("config_error", kExitUsage, e.what());
  } catch (const std::exception& e) {
    return fail("internal_error", kExitUsage, e.what());
  }
  return fail("usage_error", kExitUsage, "no subcommand given");
}
