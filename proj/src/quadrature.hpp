#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace brownlab::detail {

// Adaptive Gauss–Kronrod whose tolerance is relative to the L1 norm, with an
// absolute floor: slivers of support carry integrals near zero, and a purely
// relative target would chase rounding noise down to the maximum depth.
template <unsigned Points, typename F>
double kronrod(F f, double a, double b, unsigned depth, double tol, double abs_floor = 1e-13) {
  using GK = boost::math::quadrature::gauss_kronrod<double, Points>;
  double l1 = 0;
  const double coarse = GK::integrate(f, a, b, 0, tol, nullptr, &l1);
  if (l1 < abs_floor) return coarse;
  return GK::integrate(f, a, b, depth, tol);
}

}  // namespace brownlab::detail
