#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "brownlab/errors.hpp"

namespace brownlab {

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

namespace eig_detail {

template <typename Real>
Real abs1(const std::complex<Real>& z) {
  return std::abs(z.real()) + std::abs(z.imag());
}

// Row/column scaling by powers of two until row and column norms are comparable.
template <typename Real>
void balance(CMatrix<Real>& a) {
  const Eigen::Index n = a.rows();
  const Real radix = 2, radix2 = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      Real c = 0, r = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += abs1(a(j, i));
        r += abs1(a(i, j));
      }
      if (c == 0 || r == 0) continue;
      Real g = r / radix, f = 1;
      const Real sum = c + r;
      while (c < g) {
        f *= radix;
        c *= radix2;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix2;
      }
      if ((c + r) / f < Real(0.95) * sum) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

// Householder reduction to upper Hessenberg form, in place.
template <typename Real>
void hessenberg(CMatrix<Real>& a) {
  using C = std::complex<Real>;
  const Eigen::Index n = a.rows();
  Eigen::Matrix<C, Eigen::Dynamic, 1> v;
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index m = n - k - 1;
    v = a.col(k).tail(m);
    const Real xnorm = v.norm();
    if (xnorm == 0) continue;
    const C x0 = v(0);
    const C phase = std::abs(x0) > 0 ? x0 / std::abs(x0) : C(1);
    v(0) += phase * xnorm;
    const Real vv = v.squaredNorm();
    if (vv == 0) continue;
    // H = I − 2vv*/v*v from the left on rows k+1.., then from the right on columns k+1..
    Eigen::Matrix<C, 1, Eigen::Dynamic> w = v.adjoint() * a.bottomRightCorner(m, n - k);
    a.bottomRightCorner(m, n - k).noalias() -= (Real(2) / vv) * v * w;
    Eigen::Matrix<C, Eigen::Dynamic, 1> u = a.rightCols(m) * v;
    a.rightCols(m).noalias() -= (Real(2) / vv) * u * v.adjoint();
    a.col(k).tail(m - 1).setZero();
  }
}

// Rotation [c s; −s̄ c] with c real that maps (f, g) to (r, 0).
template <typename Real>
void givens(const std::complex<Real>& f, const std::complex<Real>& g, Real& c, std::complex<Real>& s) {
  const Real af = std::abs(f), ag = std::abs(g);
  if (ag == 0) {
    c = 1;
    s = 0;
    return;
  }
  if (af == 0) {
    c = 0;
    s = std::conj(g) / ag;
    return;
  }
  const Real nrm = std::hypot(af, ag);
  c = af / nrm;
  s = (f / af) * std::conj(g) / nrm;
}

}  // namespace eig_detail

// Eigenvalues of a dense complex matrix: balancing, Hessenberg reduction and
// single-shift QR with Wilkinson shifts on the active window. Throws
// NoConvergence when the iteration budget of 30 sweeps per row runs out.
template <typename Real>
std::vector<std::complex<Real>> eigenvalues(CMatrix<Real> h) {
  using C = std::complex<Real>;
  using eig_detail::abs1;
  const Eigen::Index n = h.rows();
  if (h.cols() != n) throw ValidationError("eigenvalues needs a square matrix");
  if (!h.allFinite()) throw ValidationError("eigenvalues needs finite entries");
  std::vector<C> out(static_cast<std::size_t>(n));
  if (n == 0) return out;
  eig_detail::balance(h);
  eig_detail::hessenberg(h);

  const Real ulp = std::numeric_limits<Real>::epsilon();
  const Real small = std::numeric_limits<Real>::min() / ulp;
  const long budget = 30L * static_cast<long>(n);
  long total = 0;
  int since_deflation = 0;
  std::vector<Real> cs(static_cast<std::size_t>(n));
  std::vector<C> sn(static_cast<std::size_t>(n));

  Eigen::Index hi = n - 1;
  while (hi >= 0) {
    // Locate the start of the unreduced block ending at hi.
    Eigen::Index lo = hi;
    while (lo > 0) {
      Real scale = abs1(h(lo, lo)) + abs1(h(lo - 1, lo - 1));
      if (scale == 0) scale = h.block(0, 0, hi + 1, hi + 1).cwiseAbs().maxCoeff();
      if (abs1(h(lo, lo - 1)) <= std::max(ulp * scale, small)) {
        h(lo, lo - 1) = 0;
        break;
      }
      --lo;
    }
    if (lo == hi) {
      out[static_cast<std::size_t>(hi)] = h(hi, hi);
      --hi;
      since_deflation = 0;
      continue;
    }
    if (++total > budget) throw NumericalError(ErrorCode::NoConvergence, "QR iteration budget exhausted");
    ++since_deflation;

    C mu;
    if (since_deflation % 11 == 0) {
      // Exceptional shift to break cycles.
      mu = h(hi, hi) + Real(0.75) * abs1(h(hi, hi - 1));
    } else {
      const C a = h(hi - 1, hi - 1), b = h(hi - 1, hi), c = h(hi, hi - 1), d = h(hi, hi);
      const C tr2 = Real(0.5) * (a - d);
      const C disc = std::sqrt(tr2 * tr2 + b * c);
      // Eigenvalues of the 2×2 block are (a + d)/2 ± disc; keep the one nearer d.
      const C e1 = Real(0.5) * (a + d) + disc, e2 = Real(0.5) * (a + d) - disc;
      mu = std::abs(e1 - d) < std::abs(e2 - d) ? e1 : e2;
    }

    // Explicit shifted QR step restricted to the window lo..hi.
    for (Eigen::Index k = lo; k <= hi; ++k) h(k, k) -= mu;
    for (Eigen::Index k = lo; k < hi; ++k) {
      Real c;
      C s;
      eig_detail::givens(h(k, k), h(k + 1, k), c, s);
      cs[static_cast<std::size_t>(k)] = c;
      sn[static_cast<std::size_t>(k)] = s;
      for (Eigen::Index j = k; j <= hi; ++j) {
        const C x = h(k, j), y = h(k + 1, j);
        h(k, j) = c * x + s * y;
        h(k + 1, j) = -std::conj(s) * x + c * y;
      }
    }
    for (Eigen::Index k = lo; k < hi; ++k) {
      const Real c = cs[static_cast<std::size_t>(k)];
      const C s = sn[static_cast<std::size_t>(k)];
      const Eigen::Index last = std::min(k + 2, hi);
      for (Eigen::Index i = lo; i <= last; ++i) {
        const C x = h(i, k), y = h(i, k + 1);
        h(i, k) = c * x + std::conj(s) * y;
        h(i, k + 1) = -s * x + c * y;
      }
    }
    for (Eigen::Index k = lo; k <= hi; ++k) h(k, k) += mu;
  }
  return out;
}

// Upper bound, relative to ‖A‖_F, on the smallest perturbation E for which
// λ is an exact eigenvalue of A + E: ‖x‖/‖(A − λI)⁻¹x‖ after two inverse
// iteration sweeps from a fixed start vector.
template <typename Real>
Real eigen_backward_error(const CMatrix<Real>& a, std::complex<Real> lambda) {
  using C = std::complex<Real>;
  const Eigen::Index n = a.rows();
  const Real anorm = a.norm();
  if (anorm == 0) return std::abs(lambda);
  CMatrix<Real> m = a;
  m.diagonal().array() -= lambda;
  const Eigen::PartialPivLU<CMatrix<Real>> lu(m);
  Eigen::Matrix<C, Eigen::Dynamic, 1> x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = C(std::cos(Real(0.7) * i + 0.3), std::sin(Real(1.3) * i));
  x.normalize();
  Real bound = std::numeric_limits<Real>::infinity();
  for (int sweep = 0; sweep < 2; ++sweep) {
    Eigen::Matrix<C, Eigen::Dynamic, 1> y = lu.solve(x);
    const Real ny = y.norm();
    if (!std::isfinite(ny)) return 0;
    // The true residual ‖m y‖/‖y‖ bounds σ_min from above regardless of solve accuracy.
    bound = std::min(bound, (m * y).norm() / ny);
    x = y / ny;
  }
  return bound / anorm;
}

}  // namespace brownlab
