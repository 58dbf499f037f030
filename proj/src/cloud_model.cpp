#include "cmcfae/cloud_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cmcfae/quadrature.hpp"
#include "cmcfae/rng.hpp"

namespace cmcfae {

namespace {

constexpr double kPi = 3.14159265358979323846;

double normal_pdf(double x, double mean, double stddev) {
  const double t = (x - mean) / stddev;
  return std::exp(-0.5 * t * t) / (stddev * std::sqrt(2.0 * kPi));
}

}  // namespace

void CloudModelParams::validate() const {
  if (ex.empty()) throw ContractError("cloud params: dimension must be >= 1");
  if (en.size() != ex.size() || he.size() != ex.size()) {
    throw ContractError("cloud params: ex/en/he lengths disagree");
  }
  for (std::size_t j = 0; j < ex.size(); ++j) {
    if (!(en[j] > 0.0)) {
      throw ContractError("cloud params: en[" + std::to_string(j) +
                          "] must be > 0");
    }
    if (!(he[j] >= 0.0)) {
      throw ContractError("cloud params: he[" + std::to_string(j) +
                          "] must be >= 0");
    }
  }
}

nlohmann::json CloudModelParams::to_json() const {
  return nlohmann::json{{"ex", ex}, {"en", en}, {"he", he}};
}

CloudModelParams CloudModelParams::from_json(const nlohmann::json& j) {
  CloudModelParams p;
  p.ex = j.at("ex").get<std::vector<double>>();
  p.en = j.at("en").get<std::vector<double>>();
  p.he = j.at("he").get<std::vector<double>>();
  p.validate();
  return p;
}

std::vector<CloudSample> fcg_sample(const CloudModelParams& params, std::size_t n,
                                    std::uint64_t seed) {
  params.validate();
  if (n == 0) throw ContractError("fcg_sample: n must be >= 1");
  const std::size_t d = params.dim();
  Rng rng(seed);
  std::vector<CloudSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    CloudSample& smp = out[i];
    smp.x.resize(d);
    smp.s.resize(d);
    smp.mu.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double s = rng.normal(params.en[j], params.he[j]);
      const double sigma = std::max(std::abs(s), kSigmaFloor * params.en[j]);
      const double x = rng.normal(params.ex[j], sigma);
      const double delta = x - params.ex[j];
      smp.s[j] = s;
      smp.x[j] = x;
      smp.mu[j] = std::exp(-delta * delta / (2.0 * sigma * sigma));
    }
  }
  return out;
}

CfValue cf_scalar(double ex, double en, double he, double z) {
  const double z2 = z * z;
  const double q = 1.0 + z2 * he * he;
  const double amp = std::exp(-en * en * z2 / (2.0 * q)) / std::sqrt(q);
  const double phase = z * ex;
  return {amp * std::cos(phase), amp * std::sin(phase)};
}

CfValue characteristic_function(const CloudModelParams& params,
                                std::span<const double> z) {
  params.validate();
  if (z.size() != params.dim()) {
    throw DimensionError("characteristic_function: z has length " +
                         std::to_string(z.size()) + ", params have dimension " +
                         std::to_string(params.dim()));
  }
  // Product of per-dimension CFs, accumulated in polar form: the modulus
  // factors are real positive and the phases add.
  double amp = 1.0;
  double phase = 0.0;
  for (std::size_t j = 0; j < params.dim(); ++j) {
    const double z2 = z[j] * z[j];
    const double q = 1.0 + z2 * params.he[j] * params.he[j];
    amp *= std::exp(-params.en[j] * params.en[j] * z2 / (2.0 * q)) / std::sqrt(q);
    phase += z[j] * params.ex[j];
  }
  return {amp * std::cos(phase), amp * std::sin(phase)};
}

double cf_modulus(const CloudModelParams& params, std::span<const double> z) {
  if (z.size() != params.dim()) {
    throw DimensionError("cf_modulus: z length does not match dimension");
  }
  double amp = 1.0;
  for (std::size_t j = 0; j < params.dim(); ++j) {
    const double z2 = z[j] * z[j];
    const double q = 1.0 + z2 * params.he[j] * params.he[j];
    amp *= std::exp(-params.en[j] * params.en[j] * z2 / (2.0 * q)) / std::sqrt(q);
  }
  return amp;
}

CfValue cf_integral_oracle(const CloudModelParams& params, double z) {
  params.validate();
  if (params.dim() != 1) {
    throw DimensionError("cf_integral_oracle: needs a one-dimensional model");
  }
  const double ex = params.ex[0], en = params.en[0], he = params.he[0];
  double expectation;
  if (z == 0.0) {
    expectation = 1.0;  // E[exp(0)] needs no quadrature
  } else if (he == 0.0) {
    // Point mass at s = En.
    expectation = std::exp(-0.5 * en * en * z * z);
  } else {
    const double z2 = z * z;
    expectation = integrate_adaptive(
        [&](double s) {
          return std::exp(-0.5 * s * s * z2) * normal_pdf(s, en, he);
        },
        en - 10.0 * he, en + 10.0 * he);
  }
  const double phase = z * ex;
  return {expectation * std::cos(phase), expectation * std::sin(phase)};
}

double pdf_numeric(const CloudModelParams& params, double x) {
  params.validate();
  if (params.dim() != 1) {
    throw DimensionError("pdf_numeric: needs a one-dimensional model");
  }
  const double ex = params.ex[0], en = params.en[0], he = params.he[0];
  if (!(he > 0.0)) throw ContractError("pdf_numeric: requires he > 0");
  const double lo = std::max(1e-12, en - 10.0 * he);
  const double hi = en + 10.0 * he;
  // Entropy draws of either sign act through the scale |s|; both branches of
  // the entropy density are folded onto the positive sigma axis. When the
  // full entropy mass sits above zero the second term is negligible.
  return integrate_adaptive(
      [&](double sigma) {
        return normal_pdf(x, ex, sigma) *
               (normal_pdf(sigma, en, he) + normal_pdf(-sigma, en, he));
      },
      lo, hi);
}

CloudModelParams fp_prior(std::size_t d) {
  if (d == 0) throw ContractError("fp_prior: d must be >= 1");
  CloudModelParams p;
  p.ex.assign(d, 0.0);
  p.en.assign(d, 1.0);
  p.he.assign(d, 0.1);
  return p;
}

CloudModelParams vp_prior(std::size_t d, std::uint64_t seed) {
  if (d == 0) throw ContractError("vp_prior: d must be >= 1");
  Rng rng(seed);
  CloudModelParams p;
  p.ex.resize(d);
  p.en.resize(d);
  p.he.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    p.ex[j] = rng.uniform(-10.0, 10.0);
    p.en[j] = rng.uniform(1.0, 5.0);
    p.he[j] = rng.uniform(0.1, 1.0);
  }
  return p;
}

}  // namespace cmcfae
