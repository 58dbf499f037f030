#pragma once

#include <cstdint>
#include <span>

#include <json.hpp>

#include "cmcfae/cloud_model.hpp"
#include "cmcfae/tensor.hpp"

namespace cmcfae {

/// Batch of frequency draws W_l ~ Normal(0, scale^-2 I_d), stored m x d
/// row-major. With Gaussian frequencies the characteristic-function distance
/// below matches the Gaussian-kernel MMD with bandwidth == scale (Bochner).
struct FrequencyBatch {
  std::size_t m = 0;
  std::size_t d = 0;
  double scale = 1.0;
  std::vector<double> w;

  std::span<const double> row(std::size_t l) const {
    return {w.data() + l * d, d};
  }
};

/// Draw order is frequency-major, coordinate-minor; deterministic given the
/// seed. scale must be > 0.
FrequencyBatch sample_frequencies(std::size_t d, std::size_t m, double scale,
                                  std::uint64_t seed);

/// Default frequency scale when a configuration does not override it.
double default_freq_scale(std::size_t d);

/// The decomposed regularizer value. gamma == c_q + c_qp holds exactly by
/// construction; c_p is a diagnostic that never enters gradients. gamma is
/// legitimately negative (it omits the constant c_p), and gamma + c_p is the
/// squared-MMD estimate, centered on zero when the batch is drawn from the
/// prior itself.
struct GammaValue {
  double c_q = 0.0;
  double c_qp = 0.0;
  double gamma = 0.0;
  double c_p = 0.0;

  nlohmann::json to_json() const;
  static GammaValue from_json(const nlohmann::json& j);
};

// --- Plain (double) estimators. z is an n x d row-major latent batch. ---
//
// Streaming evaluation: per frequency only the cos/sin column sums are kept,
// so cost is O(n m d) time and O(m) memory. Summation order is fixed
// (documented in the .cpp) and single-threaded, so values are reproducible.

/// Unbiased pairwise term (1 / (m n (n-1))) sum_{i != j, l}
/// cos(w_l . (z_i - z_j)). Requires n >= 2.
double c_q_hat(std::span<const double> z, std::size_t n, std::size_t d,
               const FrequencyBatch& w);

/// Cross term -(2 / (n m)) sum_{i, l} A_l cos(w_l . (ex - z_i)) with
/// A_l = |Phi_P(w_l)| from the factorized cloud-model CF.
double c_qp_hat(std::span<const double> z, std::size_t n, std::size_t d,
                const FrequencyBatch& w, const CloudModelParams& prior);

/// (1/m) sum_l |Phi_P(w_l)|^2. Always in (0, 1].
double c_p_const(const CloudModelParams& prior, const FrequencyBatch& w);

GammaValue gamma(std::span<const double> z, std::size_t n, std::size_t d,
                 const FrequencyBatch& w, const CloudModelParams& prior);

// --- Tape (differentiable) versions; z is an (n, d) tensor. ---

Tensor c_q_node(const Tensor& z, const FrequencyBatch& w);
Tensor c_qp_node(const Tensor& z, const FrequencyBatch& w,
                 const CloudModelParams& prior);
/// c_q + c_qp as a scalar tensor. When parts is non-null the two component
/// tensors are returned so callers can log them without recomputation.
Tensor gamma_node(const Tensor& z, const FrequencyBatch& w,
                  const CloudModelParams& prior,
                  std::pair<Tensor, Tensor>* parts = nullptr);

// --- Oracles for equivalence testing ---

/// Squared MMD between two batches under the Gaussian kernel
/// exp(-|x - y|^2 / (2 bandwidth^2)). The default is the unbiased
/// U-statistic (diagonal terms excluded); biased_vstat switches to the
/// V-statistic, which is zero for identical batches.
double kernel_mmd_oracle(std::span<const double> z1, std::size_t n1,
                         std::span<const double> z2, std::size_t n2,
                         std::size_t d, double bandwidth,
                         bool biased_vstat = false);

/// Two-sample squared-MMD estimate in characteristic-function form:
/// c_q(z1) + c_q(z2) - 2 cross(z1, z2) with the unbiased within-batch terms.
/// Its expectation over Gaussian frequency draws equals the kernel
/// U-statistic above with bandwidth == w.scale.
double cf_mmd_squared_two_sample(std::span<const double> z1, std::size_t n1,
                                 std::span<const double> z2, std::size_t n2,
                                 std::size_t d, const FrequencyBatch& w);

}  // namespace cmcfae
