#pragma once

// Shared helpers for the test suites: a central-difference gradient checker,
// small statistics utilities, and scratch-directory management.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "cmcfae/errors.hpp"

namespace testsupport {

/// f evaluates a scalar from a flat parameter vector (rebuilding whatever
/// tape it needs); returns the central-difference gradient with h = 1e-5.
inline std::vector<double> finite_diff_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h = 1e-5) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/// Elementwise relative error |a - b| / max(1, |a|, |b|), maximized.
inline double max_rel_error(const std::vector<double>& a,
                            const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw cmcfae::DimensionError("max_rel_error: length mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

inline double standard_error(const std::vector<double>& v) {
  return sample_std(v) / std::sqrt(static_cast<double>(v.size()));
}

/// Unique scratch directory under the system temp dir; removed on
/// destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    namespace fs = std::filesystem;
    const auto base = fs::temp_directory_path();
    for (int i = 0; i < 10000; ++i) {
      fs::path candidate = base / (tag + "-" + std::to_string(i));
      std::error_code ec;
      if (fs::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("TempDir: could not create scratch directory");
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::filesystem::path path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is),
                     std::istreambuf_iterator<char>());
}

}  // namespace testsupport
