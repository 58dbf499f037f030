#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "cmcfae/errors.hpp"

namespace cmcfae {

/// Per-dimension (Ex, En, He) triples of a cloud-model distribution:
/// expectation, entropy (base spread, > 0) and hyper-entropy
/// (spread-of-the-spread, >= 0).
struct CloudModelParams {
  std::vector<double> ex;
  std::vector<double> en;
  std::vector<double> he;

  std::size_t dim() const { return ex.size(); }
  /// Throws ContractError when the vectors disagree in length or violate
  /// en > 0, he >= 0.
  void validate() const;

  nlohmann::json to_json() const;
  static CloudModelParams from_json(const nlohmann::json& j);
};

/// One droplet: the drawn value x, the intermediate entropy draw s, and the
/// determinacy mu = exp(-(x - ex)^2 / (2 sigma^2)) with sigma the clamped |s|.
struct CloudSample {
  std::vector<double> x;
  std::vector<double> s;
  std::vector<double> mu;
};

struct CfValue {
  double re = 0.0;
  double im = 0.0;
};

/// Relative floor applied to |s| before it is used as a standard deviation:
/// sigma = max(|s|, kSigmaFloor * en). Keeps the droplet draw and the
/// determinacy well-defined when an entropy draw lands near zero.
inline constexpr double kSigmaFloor = 1e-8;

/// Forward cloud generator. For each of the n samples and each dimension j:
/// draw s ~ Normal(en[j], he[j]^2), then x ~ Normal(ex[j], sigma^2) with
/// sigma the clamped |s|, then mu from the same sigma. Draw order is sample-
/// major, dimension-minor, entropy draw before droplet draw; deterministic
/// given the seed.
std::vector<CloudSample> fcg_sample(const CloudModelParams& params, std::size_t n,
                                    std::uint64_t seed);

/// Scalar (one-dimensional) closed-form characteristic function.
CfValue cf_scalar(double ex, double en, double he, double z);

/// Closed-form characteristic function of the d-dimensional cloud model with
/// independent per-dimension components: the product of the scalar CFs.
CfValue characteristic_function(const CloudModelParams& params,
                                std::span<const double> z);

/// Modulus of the factorized CF at frequency z (the phase is z . ex).
double cf_modulus(const CloudModelParams& params, std::span<const double> z);

/// Independent check of the closed form for d == 1: evaluates
/// E_S[exp(-s^2 z^2 / 2)] by adaptive quadrature over s in
/// [En - 10 He, En + 10 He] and multiplies by exp(i z Ex). He == 0
/// degenerates to the Gaussian point-mass value.
CfValue cf_integral_oracle(const CloudModelParams& params, double z);

/// Numeric density for d == 1, he > 0: integrates
/// NormalPdf(x; Ex, sigma^2) * (NormalPdf(sigma; En, He^2) +
/// NormalPdf(-sigma; En, He^2)) over sigma in (0, En + 10 He], folding the
/// sign of the entropy draw into the positive scale in the same way the
/// generator uses |s|.
double pdf_numeric(const CloudModelParams& params, double x);

/// Fixed prior: (Ex, En, He) = (0, 1, 0.1) in every dimension.
CloudModelParams fp_prior(std::size_t d);

/// Variable prior: per-dimension Ex ~ U[-10, 10], En ~ U[1, 5],
/// He ~ U[0.1, 1], deterministic given the seed (dimension-major draw order,
/// ex then en then he within a dimension).
CloudModelParams vp_prior(std::size_t d, std::uint64_t seed);

}  // namespace cmcfae
