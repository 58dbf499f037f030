#pragma once

#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cmcfae/errors.hpp"

namespace cmcfae {

/// Adaptive Gauss-Kronrod (15-point) integration of f over [a, b].
///
/// Subdivides until the local error estimate drops below rel_tol * |I|;
/// throws NumericError when the returned absolute error estimate still
/// exceeds fail_tol. Suitable for the O(1)-magnitude integrals used here
/// (densities and bounded expectations), where rel_tol = 1e-12 lands the
/// absolute error well below 1e-10.
template <class Fn>
double integrate_adaptive(Fn&& f, double a, double b, double rel_tol = 1e-12,
                          double fail_tol = 1e-9) {
  if (a == b) return 0.0;
  if (a > b) throw ContractError("integrate_adaptive: interval has a > b");
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, /*max_depth=*/18, rel_tol, &error);
  if (!std::isfinite(value) || error > fail_tol) {
    throw NumericError("quadrature did not converge: error estimate " +
                       std::to_string(error));
  }
  return value;
}

}  // namespace cmcfae
