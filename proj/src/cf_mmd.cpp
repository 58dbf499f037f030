#include "cmcfae/cf_mmd.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "cmcfae/rng.hpp"

namespace cmcfae {

namespace {

void check_batch(std::span<const double> z, std::size_t n, std::size_t d,
                 const char* who) {
  if (z.size() != n * d) {
    throw DimensionError(std::string(who) + ": batch storage is not n x d");
  }
}

void check_dims(std::size_t d, const FrequencyBatch& w, const char* who) {
  if (w.d != d) {
    throw DimensionError(std::string(who) + ": frequency dimension " +
                         std::to_string(w.d) + " != latent dimension " +
                         std::to_string(d));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Per-frequency modulus A_l and phase offset b_l = w_l . ex of the prior CF.
void prior_tables(const CloudModelParams& prior, const FrequencyBatch& w,
                  std::vector<double>& amp, std::vector<double>& phase) {
  amp.resize(w.m);
  phase.resize(w.m);
  for (std::size_t l = 0; l < w.m; ++l) {
    const auto wl = w.row(l);
    amp[l] = cf_modulus(prior, wl);
    phase[l] = dot(wl, std::span<const double>(prior.ex));
  }
}

}  // namespace

FrequencyBatch sample_frequencies(std::size_t d, std::size_t m, double scale,
                                  std::uint64_t seed) {
  if (m == 0) throw ContractError("sample_frequencies: m must be >= 1");
  if (d == 0) throw ContractError("sample_frequencies: d must be >= 1");
  if (!(scale > 0.0)) throw ContractError("sample_frequencies: scale must be > 0");
  FrequencyBatch batch;
  batch.m = m;
  batch.d = d;
  batch.scale = scale;
  batch.w.resize(m * d);
  Rng rng(seed);
  const double stddev = 1.0 / scale;
  for (double& v : batch.w) v = stddev * rng.normal();
  return batch;
}

double default_freq_scale(std::size_t d) {
  return std::sqrt(static_cast<double>(d));
}

nlohmann::json GammaValue::to_json() const {
  return nlohmann::json{{"c_q", c_q}, {"c_qp", c_qp}, {"gamma", gamma}, {"c_p", c_p}};
}

GammaValue GammaValue::from_json(const nlohmann::json& j) {
  GammaValue g;
  g.c_q = j.at("c_q").get<double>();
  g.c_qp = j.at("c_qp").get<double>();
  g.gamma = j.at("gamma").get<double>();
  g.c_p = j.at("c_p").get<double>();
  return g;
}

double c_q_hat(std::span<const double> z, std::size_t n, std::size_t d,
               const FrequencyBatch& w) {
  check_batch(z, n, d, "c_q_hat");
  check_dims(d, w, "c_q_hat");
  if (n < 2) throw ContractError("c_q_hat: needs n >= 2 (divides by n(n-1))");
  // sum_{i != j} cos(p_i - p_j) == |sum_i e^{i p_i}|^2 - n, so only the
  // per-frequency cos/sin sums over the batch are needed. Accumulation is
  // i-ascending within a frequency and l-ascending across frequencies.
  double acc = 0.0;
  for (std::size_t l = 0; l < w.m; ++l) {
    const auto wl = w.row(l);
    double c = 0.0, s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = dot({z.data() + i * d, d}, wl);
      c += std::cos(p);
      s += std::sin(p);
    }
    acc += c * c + s * s - static_cast<double>(n);
  }
  const double nn = static_cast<double>(n);
  // Multiply by the reciprocal so the value matches c_q_node bit for bit.
  return acc * (1.0 / (static_cast<double>(w.m) * nn * (nn - 1.0)));
}

double c_qp_hat(std::span<const double> z, std::size_t n, std::size_t d,
                const FrequencyBatch& w, const CloudModelParams& prior) {
  check_batch(z, n, d, "c_qp_hat");
  check_dims(d, w, "c_qp_hat");
  if (prior.dim() != d) {
    throw DimensionError("c_qp_hat: prior dimension != latent dimension");
  }
  if (n == 0) throw ContractError("c_qp_hat: empty batch");
  std::vector<double> amp, phase;
  prior_tables(prior, w, amp, phase);
  // Sample-major, frequency-minor accumulation (matches the row-major
  // reduction of the tape version bit for bit).
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> zi{z.data() + i * d, d};
    for (std::size_t l = 0; l < w.m; ++l) {
      const double p = dot(zi, w.row(l));
      acc += amp[l] * std::cos(phase[l] - p);
    }
  }
  return acc * (-2.0 / (static_cast<double>(n) * static_cast<double>(w.m)));
}

double c_p_const(const CloudModelParams& prior, const FrequencyBatch& w) {
  if (prior.dim() != w.d) {
    throw DimensionError("c_p_const: prior dimension != frequency dimension");
  }
  double acc = 0.0;
  for (std::size_t l = 0; l < w.m; ++l) {
    const double a = cf_modulus(prior, w.row(l));
    acc += a * a;
  }
  return acc / static_cast<double>(w.m);
}

GammaValue gamma(std::span<const double> z, std::size_t n, std::size_t d,
                 const FrequencyBatch& w, const CloudModelParams& prior) {
  GammaValue g;
  g.c_q = c_q_hat(z, n, d, w);
  g.c_qp = c_qp_hat(z, n, d, w, prior);
  g.gamma = g.c_q + g.c_qp;
  g.c_p = c_p_const(prior, w);
  return g;
}

// --- Tape versions -----------------------------------------------------------

namespace {

// W transposed to d x m as a constant leaf, so P = Z W^T is one matmul.
Tensor freq_transpose_leaf(Tape& tape, const FrequencyBatch& w) {
  std::vector<double> wt(w.d * w.m);
  for (std::size_t l = 0; l < w.m; ++l) {
    for (std::size_t k = 0; k < w.d; ++k) wt[k * w.m + l] = w.w[l * w.d + k];
  }
  return tape.leaf({w.d, w.m}, std::move(wt));
}

}  // namespace

Tensor c_q_node(const Tensor& z, const FrequencyBatch& w) {
  if (z.shape().size() != 2) throw DimensionError("c_q_node: z must be 2-D");
  const std::size_t n = z.rows(), d = z.cols();
  check_dims(d, w, "c_q_node");
  if (n < 2) throw ContractError("c_q_node: needs n >= 2");
  Tape& tape = *z.tape();
  Tensor wt = freq_transpose_leaf(tape, w);
  Tensor p = matmul(z, wt);  // (n, m) inner products
  Tensor ones = tape.leaf({1, n}, std::vector<double>(n, 1.0));
  Tensor csum = matmul(ones, cos(p));  // (1, m) per-frequency cos sums
  Tensor ssum = matmul(ones, sin(p));
  Tensor tot = add_scalar(add(square(csum), square(ssum)),
                          -static_cast<double>(n));
  const double nn = static_cast<double>(n);
  return mul_scalar(sum_all(tot),
                    1.0 / (static_cast<double>(w.m) * nn * (nn - 1.0)));
}

Tensor c_qp_node(const Tensor& z, const FrequencyBatch& w,
                 const CloudModelParams& prior) {
  if (z.shape().size() != 2) throw DimensionError("c_qp_node: z must be 2-D");
  const std::size_t n = z.rows(), d = z.cols();
  check_dims(d, w, "c_qp_node");
  if (prior.dim() != d) {
    throw DimensionError("c_qp_node: prior dimension != latent dimension");
  }
  Tape& tape = *z.tape();
  std::vector<double> amp, phase;
  prior_tables(prior, w, amp, phase);
  Tensor wt = freq_transpose_leaf(tape, w);
  Tensor p = matmul(z, wt);  // (n, m)
  // Constant rows: the prior-side phase b_l and modulus A_l per frequency.
  std::vector<double> brow(n * w.m), arow(n * w.m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < w.m; ++l) {
      brow[i * w.m + l] = phase[l];
      arow[i * w.m + l] = amp[l];
    }
  }
  Tensor b = tape.leaf({n, w.m}, std::move(brow));
  Tensor a = tape.leaf({n, w.m}, std::move(arow));
  Tensor terms = mul(a, cos(sub(b, p)));
  return mul_scalar(sum_all(terms),
                    -2.0 / (static_cast<double>(n) * static_cast<double>(w.m)));
}

Tensor gamma_node(const Tensor& z, const FrequencyBatch& w,
                  const CloudModelParams& prior,
                  std::pair<Tensor, Tensor>* parts) {
  Tensor cq = c_q_node(z, w);
  Tensor cqp = c_qp_node(z, w, prior);
  if (parts) *parts = {cq, cqp};
  return add(cq, cqp);
}

// --- Oracles -------------------------------------------------------------------

double kernel_mmd_oracle(std::span<const double> z1, std::size_t n1,
                         std::span<const double> z2, std::size_t n2,
                         std::size_t d, double bandwidth, bool biased_vstat) {
  check_batch(z1, n1, d, "kernel_mmd_oracle");
  check_batch(z2, n2, d, "kernel_mmd_oracle");
  if (n1 == 0 || n2 == 0) throw ContractError("kernel_mmd_oracle: empty batch");
  if (!biased_vstat && (n1 < 2 || n2 < 2)) {
    throw ContractError("kernel_mmd_oracle: U-statistic needs n >= 2");
  }
  const double inv2bw2 = 1.0 / (2.0 * bandwidth * bandwidth);
  auto kernel = [&](const double* a, const double* b) {
    double ss = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = a[k] - b[k];
      ss += diff * diff;
    }
    return std::exp(-ss * inv2bw2);
  };
  double within1 = 0.0, within2 = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n1; ++j) {
      if (!biased_vstat && i == j) continue;
      within1 += kernel(&z1[i * d], &z1[j * d]);
    }
  }
  for (std::size_t i = 0; i < n2; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      if (!biased_vstat && i == j) continue;
      within2 += kernel(&z2[i * d], &z2[j * d]);
    }
  }
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      cross += kernel(&z1[i * d], &z2[j * d]);
    }
  }
  const double f1 = static_cast<double>(n1);
  const double f2 = static_cast<double>(n2);
  const double norm1 = biased_vstat ? f1 * f1 : f1 * (f1 - 1.0);
  const double norm2 = biased_vstat ? f2 * f2 : f2 * (f2 - 1.0);
  return within1 / norm1 + within2 / norm2 - 2.0 * cross / (f1 * f2);
}

double cf_mmd_squared_two_sample(std::span<const double> z1, std::size_t n1,
                                 std::span<const double> z2, std::size_t n2,
                                 std::size_t d, const FrequencyBatch& w) {
  check_batch(z1, n1, d, "cf_mmd_squared_two_sample");
  check_batch(z2, n2, d, "cf_mmd_squared_two_sample");
  check_dims(d, w, "cf_mmd_squared_two_sample");
  if (n1 < 2 || n2 < 2) {
    throw ContractError("cf_mmd_squared_two_sample: needs n >= 2 on both sides");
  }
  double within1 = 0.0, within2 = 0.0, cross = 0.0;
  for (std::size_t l = 0; l < w.m; ++l) {
    const auto wl = w.row(l);
    double c1 = 0.0, s1 = 0.0, c2 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
      const double p = dot({z1.data() + i * d, d}, wl);
      c1 += std::cos(p);
      s1 += std::sin(p);
    }
    for (std::size_t j = 0; j < n2; ++j) {
      const double p = dot({z2.data() + j * d, d}, wl);
      c2 += std::cos(p);
      s2 += std::sin(p);
    }
    within1 += c1 * c1 + s1 * s1 - static_cast<double>(n1);
    within2 += c2 * c2 + s2 * s2 - static_cast<double>(n2);
    cross += c1 * c2 + s1 * s2;
  }
  const double m = static_cast<double>(w.m);
  const double f1 = static_cast<double>(n1);
  const double f2 = static_cast<double>(n2);
  return within1 / (m * f1 * (f1 - 1.0)) + within2 / (m * f2 * (f2 - 1.0)) -
         2.0 * cross / (m * f1 * f2);
}

}  // namespace cmcfae
