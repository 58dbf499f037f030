#include "cmcfae/trainer.hpp"

#include <cmath>
#include <string>

#include "cmcfae/rng.hpp"

namespace cmcfae {

namespace {

// Sub-stream ids hung off config.rng_seed.
constexpr std::uint64_t kStreamInit = 11;
constexpr std::uint64_t kStreamShuffle = 22;
constexpr std::uint64_t kStreamFrequencies = 33;
constexpr std::uint64_t kStreamPrior = 44;

std::string prior_mode_name(PriorMode mode) {
  return mode == PriorMode::FP ? "FP" : "VP";
}

PriorMode prior_mode_from_name(const std::string& name) {
  if (name == "FP") return PriorMode::FP;
  if (name == "VP") return PriorMode::VP;
  throw ContractError("prior_mode must be \"FP\" or \"VP\", got \"" + name + "\"");
}

}  // namespace

double TrainConfig::effective_freq_scale() const {
  return freq_scale > 0.0 ? freq_scale : default_freq_scale(latent_dim);
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw ContractError("config: lambda must be >= 0");
  if (!(lr > 0.0)) throw ContractError("config: lr must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ContractError("config: beta1 must be in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ContractError("config: beta2 must be in (0, 1)");
  if (batch_size < 2) throw ContractError("config: batch_size must be >= 2");
  if (epochs == 0) throw ContractError("config: epochs must be >= 1");
  if (latent_dim == 0) throw ContractError("config: latent_dim must be >= 1");
  if (m_frequencies == 0) throw ContractError("config: m_frequencies must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return nlohmann::json{{"lambda", lambda},
                        {"lr", lr},
                        {"beta1", beta1},
                        {"beta2", beta2},
                        {"batch_size", batch_size},
                        {"epochs", epochs},
                        {"latent_dim", latent_dim},
                        {"m_frequencies", m_frequencies},
                        {"prior_mode", prior_mode_name(prior_mode)},
                        {"freq_scale", freq_scale},
                        {"rng_seed", rng_seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.m_frequencies = j.at("m_frequencies").get<std::size_t>();
  c.prior_mode = prior_mode_from_name(j.at("prior_mode").get<std::string>());
  if (j.contains("freq_scale")) c.freq_scale = j.at("freq_scale").get<double>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.validate();
  return c;
}

nlohmann::json StepMetrics::to_json() const {
  return nlohmann::json{{"step", step},
                        {"recon_loss", recon_loss},
                        {"gamma", gamma.to_json()},
                        {"total_loss", total_loss}};
}

StepMetrics StepMetrics::from_json(const nlohmann::json& j) {
  StepMetrics m;
  m.step = j.at("step").get<std::size_t>();
  m.recon_loss = j.at("recon_loss").get<double>();
  m.gamma = GammaValue::from_json(j.at("gamma"));
  m.total_loss = j.at("total_loss").get<double>();
  return m;
}

Tensor loss_node(Tape& tape, const Tensor& x, const BoundAutoencoder& bound,
                 const CloudModelParams& prior, const FrequencyBatch& w,
                 double lambda, Tensor* recon_out, Tensor* gamma_out,
                 std::pair<Tensor, Tensor>* gamma_parts, Tensor* z_out) {
  const std::size_t n = x.rows();
  Tensor z = encode(tape, bound, x);
  Tensor x_hat = decode(tape, bound, z);
  Tensor recon = mul_scalar(sum_all(square(sub(x, x_hat))),
                            1.0 / static_cast<double>(n));
  Tensor g = gamma_node(z, w, prior, gamma_parts);
  Tensor total = add(recon, mul_scalar(g, lambda));
  if (recon_out) *recon_out = recon;
  if (gamma_out) *gamma_out = g;
  if (z_out) *z_out = z;
  return total;
}

void adam_step(std::vector<ParamSlot>& slots, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  if (state.m.empty()) {
    state.m.resize(slots.size());
    state.v.resize(slots.size());
    for (std::size_t s = 0; s < slots.size(); ++s) {
      state.m[s].assign(slots[s].size, 0.0);
      state.v[s].assign(slots[s].size, 0.0);
    }
  }
  if (state.m.size() != slots.size()) {
    throw DimensionError("adam_step: state does not match parameter slots");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t s = 0; s < slots.size(); ++s) {
    ParamSlot& slot = slots[s];
    if (state.m[s].size() != slot.size) {
      throw DimensionError("adam_step: slot " + std::to_string(s) +
                           " size changed");
    }
    double* m = state.m[s].data();
    double* v = state.v[s].data();
    for (std::size_t i = 0; i < slot.size; ++i) {
      const double g = slot.grad[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      slot.value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  const std::vector<std::size_t>& hidden_widths,
                  const std::function<void(const StepMetrics&)>& on_step) {
  config.validate();
  if (dataset.n == 0) throw ContractError("train: dataset is empty");
  if (config.batch_size > dataset.n) {
    throw ContractError("train: batch_size exceeds dataset size");
  }

  TrainResult result;
  result.prior = config.prior_mode == PriorMode::FP
                     ? fp_prior(config.latent_dim)
                     : vp_prior(config.latent_dim,
                                derive_seed(config.rng_seed, kStreamPrior));
  result.model = make_autoencoder(dataset.input_dim, hidden_widths,
                                  config.latent_dim,
                                  derive_seed(config.rng_seed, kStreamInit));
  Autoencoder& model = result.model;

  AdamState adam;
  const double scale = config.effective_freq_scale();
  const std::uint64_t freq_base = derive_seed(config.rng_seed, kStreamFrequencies);
  std::size_t step = 0;
  StepMetrics last;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = epoch_batches(dataset.n, config.batch_size,
                                       derive_seed(config.rng_seed, kStreamShuffle),
                                       epoch);
    double epoch_recon = 0.0;
    double epoch_gamma = 0.0;
    double epoch_gcp = 0.0;
    for (const auto& batch : batches) {
      // Fresh frequency draws each step.
      const FrequencyBatch w = sample_frequencies(
          config.latent_dim, config.m_frequencies, scale,
          derive_seed(freq_base, step));

      std::vector<double> xbatch(batch.size() * dataset.input_dim);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const double* src = &dataset.images[batch[i] * dataset.input_dim];
        std::copy(src, src + dataset.input_dim,
                  xbatch.begin() + static_cast<std::ptrdiff_t>(i * dataset.input_dim));
      }

      Tape tape;
      BoundAutoencoder bound = bind(tape, model);
      Tensor x = tape.leaf({batch.size(), dataset.input_dim}, std::move(xbatch));
      Tensor recon, gamma_t;
      std::pair<Tensor, Tensor> gamma_parts;
      Tensor total = loss_node(tape, x, bound, result.prior, w, config.lambda,
                               &recon, &gamma_t, &gamma_parts);

      // Component values straight off the tape so the logged decomposition
      // is the one that was differentiated.
      StepMetrics metrics;
      metrics.step = step;
      metrics.recon_loss = recon.scalar();
      metrics.gamma.c_q = gamma_parts.first.scalar();
      metrics.gamma.c_qp = gamma_parts.second.scalar();
      metrics.gamma.gamma = gamma_t.scalar();
      metrics.gamma.c_p = c_p_const(result.prior, w);
      metrics.total_loss = total.scalar();

      const char* bad = nullptr;
      if (!std::isfinite(metrics.recon_loss)) bad = "recon_loss";
      else if (!std::isfinite(metrics.gamma.c_q)) bad = "gamma.c_q";
      else if (!std::isfinite(metrics.gamma.c_qp)) bad = "gamma.c_qp";
      else if (!std::isfinite(metrics.total_loss)) bad = "total_loss";
      if (bad) throw TrainAbort(step, bad, last);

      tape.backward(total);

      std::vector<ParamSlot> slots;
      auto add_slots = [&](Mlp& net, const BoundMlp& bound_net) {
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
          slots.push_back({net.layers[l].w.data(),
                           tape.grad(bound_net.weights[l]).data(),
                           net.layers[l].w.size()});
          slots.push_back({net.layers[l].b.data(),
                           tape.grad(bound_net.biases[l]).data(),
                           net.layers[l].b.size()});
        }
      };
      add_slots(model.encoder, bound.encoder);
      add_slots(model.decoder, bound.decoder);
      adam_step(slots, adam, config.lr, config.beta1, config.beta2);

      epoch_recon += metrics.recon_loss;
      epoch_gamma += metrics.gamma.gamma;
      epoch_gcp += metrics.gamma.gamma + metrics.gamma.c_p;
      last = metrics;
      result.metrics.push_back(metrics);
      if (on_step) on_step(metrics);
      ++step;
    }
    const double steps_in_epoch = static_cast<double>(batches.size());
    result.epoch_recon_mean.push_back(epoch_recon / steps_in_epoch);
    result.epoch_gamma_mean.push_back(epoch_gamma / steps_in_epoch);
    result.epoch_gamma_plus_cp_mean.push_back(epoch_gcp / steps_in_epoch);
  }
  return result;
}

}  // namespace cmcfae
