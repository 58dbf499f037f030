#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmcfae/cf_mmd.hpp"
#include "cmcfae/cloud_model.hpp"
#include "cmcfae/data.hpp"
#include "cmcfae/networks.hpp"

namespace cmcfae {

enum class PriorMode { FP, VP };

/// Training hyperparameters. JSON round-trips with these exact field names;
/// freq_scale <= 0 means "use sqrt(latent_dim)".
struct TrainConfig {
  double lambda = 10.0;
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::size_t batch_size = 100;
  std::size_t epochs = 200;
  std::size_t latent_dim = 8;
  std::size_t m_frequencies = 128;
  PriorMode prior_mode = PriorMode::FP;
  double freq_scale = 0.0;
  std::uint64_t rng_seed = 1;

  double effective_freq_scale() const;
  void validate() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// One training step's log record; total_loss == recon_loss +
/// lambda * gamma.gamma exactly (the same doubles that formed the tape
/// scalar).
struct StepMetrics {
  std::size_t step = 0;
  double recon_loss = 0.0;
  GammaValue gamma;
  double total_loss = 0.0;

  nlohmann::json to_json() const;
  static StepMetrics from_json(const nlohmann::json& j);
};

/// Thrown when a step produces a non-finite loss; carries what the CLI needs
/// for the diagnostic dump.
class TrainAbort : public NumericError {
 public:
  TrainAbort(std::size_t step, std::string tensor_name, StepMetrics last)
      : NumericError("non-finite loss at step " + std::to_string(step) +
                     " (tensor: " + tensor_name + ")"),
        step_(step),
        tensor_name_(std::move(tensor_name)),
        last_(last) {}

  std::size_t step() const { return step_; }
  const std::string& tensor_name() const { return tensor_name_; }
  const StepMetrics& last_metrics() const { return last_; }

 private:
  std::size_t step_;
  std::string tensor_name_;
  StepMetrics last_;
};

/// Full loss for one batch: mean over the batch of the per-image squared
/// error (summed over pixels) plus lambda * Gamma. recon_out / gamma_out /
/// gamma_parts receive the component tensors when non-null (gamma_parts is
/// the {c_q, c_qp} pair).
Tensor loss_node(Tape& tape, const Tensor& x, const BoundAutoencoder& bound,
                 const CloudModelParams& prior, const FrequencyBatch& w,
                 double lambda, Tensor* recon_out = nullptr,
                 Tensor* gamma_out = nullptr,
                 std::pair<Tensor, Tensor>* gamma_parts = nullptr,
                 Tensor* z_out = nullptr);

/// One parameter block for the optimizer.
struct ParamSlot {
  double* value = nullptr;
  const double* grad = nullptr;
  std::size_t size = 0;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t t = 0;
};

/// Standard Adam with bias correction; state is lazily shaped on first use.
void adam_step(std::vector<ParamSlot>& slots, AdamState& state, double lr,
               double beta1, double beta2, double eps = 1e-8);

struct TrainResult {
  Autoencoder model;
  CloudModelParams prior;
  std::vector<StepMetrics> metrics;
  std::vector<double> epoch_recon_mean;
  std::vector<double> epoch_gamma_mean;
  std::vector<double> epoch_gamma_plus_cp_mean;
};

/// Runs epochs * floor(N / batch_size) steps of Algorithm-style training:
/// shuffle, encode, fresh frequency draws every step, loss, Adam update.
/// Fully deterministic given config.rng_seed. Throws TrainAbort on a
/// non-finite loss. on_step (optional) observes every StepMetrics in order.
TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  const std::vector<std::size_t>& hidden_widths,
                  const std::function<void(const StepMetrics&)>& on_step = {});

/// Bounded single-producer/single-consumer queue used to hand StepMetrics to
/// a writer thread; push blocks when full (backpressure), pop returns
/// nullopt once closed and drained.
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return q_.size() < capacity_ || closed_; });
    if (closed_) throw ContractError("BoundedQueue: push after close");
    q_.push(std::move(item));
    not_empty_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) return std::nullopt;
    T item = std::move(q_.front());
    q_.pop();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return q_.size();
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::queue<T> q_;
  std::size_t capacity_;
  bool closed_ = false;
};

}  // namespace cmcfae
