#include "brownlab/spectral_domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

#include "brownlab/errors.hpp"
#include "brownlab/parallel.hpp"
#include "quadrature.hpp"

namespace brownlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

using GL16 = boost::math::quadrature::gauss<double, 16>;

// Signed Gauss–Legendre nodes and weights on [−1, 1].
const std::vector<std::pair<double, double>>& gl16() {
  static const std::vector<std::pair<double, double>> rule = [] {
    std::vector<std::pair<double, double>> out;
    const auto& x = GL16::abscissa();
    const auto& w = GL16::weights();
    for (std::size_t k = 0; k < x.size(); ++k) {
      out.emplace_back(x[k], w[k]);
      if (x[k] != 0) out.emplace_back(-x[k], w[k]);
    }
    std::sort(out.begin(), out.end());
    return out;
  }();
  return rule;
}

// Limit of T(re^{iθ}) as r → 1.
double boundary_T(const CircleMeasure& m, double theta) { return T_fn(m, std::polar(1.0, theta)); }

double bisect_root(const std::function<double(double)>& g, double lo, double hi) {
  double glo = g(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double piece_theta(const SupportPiece& p, double t) {
  return p.a + (p.b - p.a) * 0.5 * (1.0 - std::cos(kPi * t));
}
double piece_dtheta(const SupportPiece& p, double t) { return (p.b - p.a) * 0.5 * kPi * std::sin(kPi * t); }
double piece_t(const SupportPiece& p, double theta) {
  const double u = std::clamp(1.0 - 2.0 * (theta - p.a) / (p.b - p.a), -1.0, 1.0);
  return std::acos(u) / kPi;
}

// Solves g(θ) = target for a lifted increasing g with g(θ + 2π) = g(θ) + 2π.
// grid_theta starts at −π; grid_g holds g on it; eval returns (g, g') exactly.
double solve_lift(const Eigen::VectorXd& grid_theta, const Eigen::VectorXd& grid_g, double target,
                  const std::function<std::pair<double, double>(double)>& eval) {
  const Eigen::Index n = grid_theta.size();
  const double g0 = grid_g[0];
  const double k = std::floor((target - g0) / kTwoPi);
  const double y = target - kTwoPi * k;
  // Bracket: last j with g_j <= y.
  const double* begin = grid_g.data();
  const double* it = std::upper_bound(begin, begin + n, y);
  Eigen::Index j = std::max<Eigen::Index>(0, (it - begin) - 1);
  double lo = grid_theta[j];
  double hi = j + 1 < n ? grid_theta[j + 1] : grid_theta[0] + kTwoPi;
  double glo = grid_g[j] - y;
  double ghi = (j + 1 < n ? grid_g[j + 1] : g0 + kTwoPi) - y;
  if (glo == 0) return lo + kTwoPi * k;
  if (ghi == 0) return hi + kTwoPi * k;
  double x = lo + (hi - lo) * (-glo) / (ghi - glo);
  for (int iter = 0; iter < 100; ++iter) {
    const auto [gx, dg] = eval(x);
    const double f = gx - y;
    if (std::abs(f) < 1e-14) break;
    if (f < 0) lo = x;
    else hi = x;
    if (hi - lo < 1e-15) break;
    double next = dg > 0 ? x - f / dg : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x + kTwoPi * k;
}

}  // namespace

double radial_profile(const CircleMeasure& m, double s, double theta) {
  if (boundary_T(m, theta) >= s) return 1.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (T_fn(m, std::polar(mid, theta)) > s) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

ThetaPoint profile_at(const CircleMeasure& m, const BrownParams& p, double theta) {
  ThetaPoint q;
  const double s = p.s;
  q.theta = theta;
  q.r = radial_profile(m, s, theta);
  const cplx z = std::polar(q.r, theta);
  const cplx J = herglotz(m, z);
  q.I = J.imag();
  q.R = q.r < 1.0 ? -2.0 / s * std::log(q.r) : 0.0;
  q.phi = theta + 0.5 * s * q.I;
  q.delta = theta + 0.5 * (s - std::norm(p.tau) / p.tau1()) * q.I;
  // Along the curve θ ↦ r_s(θ)e^{iθ} the modulus of f_s stays 1, so with
  // g = z f_s'/f_s = 1 + (s/2) z J'(z) one gets dφ/dθ = |g|²/Re g.
  const cplx g = 1.0 + 0.5 * s * z * herglotz_derivative(m, z);
  if (q.r < 1.0) {
    const double d = g.real() > 0 ? std::norm(g) / g.real() : 2.0;
    q.dphi = std::clamp(d, 1e-12, 2.0 - 1e-12);
  } else {
    q.dphi = std::max(0.0, g.real());
  }
  const double k = p.kappa();
  q.ddelta = k + (1.0 - k) * q.dphi;
  const double shift = 0.5 * p.tau2() / p.tau1() * q.I;
  q.v1 = -0.5 * q.R + shift;
  q.v2 = 0.5 * q.R + shift;
  return q;
}

ThetaPoint profile_at(const DomainProfile& prof, double theta) { return profile_at(*prof.measure, prof.params, theta); }

std::shared_ptr<const MuSRule> build_mu_s_rule(const CircleMeasure& m, double s, int total_panels) {
  if (!(s > 0)) throw ValidationError("s must be positive");
  auto rule = std::make_shared<MuSRule>();
  rule->s = s;

  const int M = std::max<int>(8192, 32 * static_cast<int>(m.size()));
  std::vector<double> th(M), L(M);
  for (int j = 0; j < M; ++j) {
    th[j] = -kPi + kTwoPi * j / M;
    L[j] = boundary_T(m, th[j]);
  }
  auto Lm = [&](double t) { return boundary_T(m, t) - s; };
  std::vector<double> breaks;
  for (int j = 0; j < M; ++j) {
    const int jn = (j + 1) % M;
    const double a = th[j], b = jn == 0 ? th[0] + kTwoPi : th[jn];
    if ((L[j] < s) != (L[jn] < s)) breaks.push_back(bisect_root(Lm, a, b));
  }
  for (int j = 0; j < M; ++j) {
    const int jp = (j + M - 1) % M, jn = (j + 1) % M;
    if (!(L[j] < s && L[j] >= L[jp] && L[j] > L[jn])) continue;
    const double a = th[j] - kTwoPi / M, b = th[j] + kTwoPi / M;
    const auto [tmax, negL] = boost::math::tools::brent_find_minima(
        [&](double t) { return -boundary_T(m, t); }, a, b, 52);
    if (-negL >= s) {
      breaks.push_back(bisect_root(Lm, a, tmax));
      breaks.push_back(bisect_root(Lm, tmax, b));
    } else {
      breaks.push_back(tmax);
    }
  }
  for (double& b : breaks) b = wrap_angle(b);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(), [](double x, double y) { return y - x < 1e-15; }),
               breaks.end());
  if (breaks.empty()) breaks.push_back(-kPi);
  rule->theta_start = breaks.front();
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = i + 1 < breaks.size() ? breaks[i + 1] : breaks.front() + kTwoPi;
    if (b - a < 1e-14) continue;
    if (boundary_T(m, 0.5 * (a + b)) < s) rule->pieces.push_back({a, b});
  }

  double total_len = 0;
  for (const auto& p : rule->pieces) total_len += p.b - p.a;
  std::vector<double> t_nodes, w_nodes;
  std::vector<int> piece_of;
  for (std::size_t i = 0; i < rule->pieces.size(); ++i) {
    const auto& p = rule->pieces[i];
    const int P = std::max(4, static_cast<int>(std::lround(total_panels * (p.b - p.a) / total_len)));
    rule->panels.push_back(P);
    for (int k = 0; k < P; ++k) {
      const double tc = (k + 0.5) / P, th_half = 0.5 / P;
      for (const auto& [x, w] : gl16()) {
        const double t = tc + th_half * x;
        t_nodes.push_back(t);
        w_nodes.push_back(w * th_half * piece_dtheta(p, t));
        piece_of.push_back(static_cast<int>(i));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(t_nodes.size());
  rule->theta.resize(n);
  rule->weight.resize(n);
  rule->r.resize(n);
  rule->R.resize(n);
  rule->I.resize(n);
  rule->phi.resize(n);
  rule->dphi.resize(n);
  const BrownParams ps{s, cplx(s, 0)};
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t k) {
    const double theta = piece_theta(rule->pieces[piece_of[k]], t_nodes[k]);
    const ThetaPoint q = profile_at(m, ps, theta);
    rule->theta[k] = theta;
    rule->weight[k] = w_nodes[k];
    rule->r[k] = q.r;
    rule->R[k] = q.R;
    rule->I[k] = q.I;
    rule->phi[k] = q.phi;
    rule->dphi[k] = q.dphi;
  });
  rule->mass = (rule->R.array() * rule->dphi.array() * rule->weight.array() / kTwoPi).matrix();
  rule->xi = rule->phi.unaryExpr([](double ph) { return std::polar(1.0, ph); });

  double acc = 0;
  Eigen::Index idx = 0;
  const auto per_panel = static_cast<Eigen::Index>(gl16().size());
  for (std::size_t i = 0; i < rule->pieces.size(); ++i) {
    std::vector<double> c{acc};
    for (int k = 0; k < rule->panels[i]; ++k) {
      acc += rule->mass.segment(idx, per_panel).sum();
      idx += per_panel;
      c.push_back(acc);
    }
    rule->cdf.push_back(std::move(c));
  }
  return rule;
}

DomainProfile build_profile(const CircleMeasure& m, const BrownParams& p, int n, std::shared_ptr<const MuSRule> rule) {
  if (n < 64) throw ValidationError("build_profile needs n >= 64");
  if (!admissible(p.s, p.tau)) throw ValidationError("inadmissible parameters");
  if (!rule) rule = build_mu_s_rule(m, p.s);
  if (std::abs(rule->s - p.s) > 1e-14) throw ValidationError("quadrature rule built for a different s");

  DomainProfile prof;
  prof.measure = std::make_shared<const CircleMeasure>(m);
  prof.params = p;
  prof.rule = rule;

  // Support edges: ends of pieces where the boundary value of T equals s.
  std::vector<double> edges;
  for (const auto& piece : rule->pieces)
    for (double e : {piece.a, piece.b})
      if (std::abs(boundary_T(m, e) - p.s) < 1e-8 * p.s) edges.push_back(wrap_angle(e));

  for (int attempt = 0; attempt < 3; ++attempt) {
    const int nn = n << attempt;
    std::vector<double> grid;
    for (int j = 0; j < nn; ++j) grid.push_back(-kPi + kTwoPi * j / nn);
    for (double e : edges) {
      grid.push_back(e);
      for (int k = 6; k <= 24; ++k)
        for (double sgn : {-1.0, 1.0}) grid.push_back(wrap_angle(e + sgn * std::ldexp(1.0, -k)));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(), [](double x, double y) { return y - x < 1e-15; }), grid.end());
    const auto N = static_cast<Eigen::Index>(grid.size());
    for (Eigen::VectorXd* v : {&prof.theta, &prof.r_s, &prof.I_s, &prof.R_s, &prof.phi_s, &prof.delta, &prof.d_phi,
                               &prof.d_delta, &prof.v1, &prof.v2})
      v->resize(N);
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t j) {
      const ThetaPoint q = profile_at(m, p, grid[j]);
      prof.theta[j] = q.theta;
      prof.r_s[j] = q.r;
      prof.I_s[j] = q.I;
      prof.R_s[j] = q.R;
      prof.phi_s[j] = q.phi;
      prof.delta[j] = q.delta;
      prof.d_phi[j] = q.dphi;
      prof.d_delta[j] = q.ddelta;
      prof.v1[j] = q.v1;
      prof.v2[j] = q.v2;
    });
    bool monotone = prof.delta[N - 1] < prof.delta[0] + kTwoPi;
    for (Eigen::Index j = 1; j < N && monotone; ++j) monotone = prof.delta[j] > prof.delta[j - 1];
    if (monotone) return prof;
  }
  throw NumericalError(ErrorCode::GridTooCoarse, "delta^{s,tau} not monotone on the refined grid");
}

SpiralCoords to_spiral(const BrownParams& p, cplx lambda) {
  const double lr = std::log(std::abs(lambda));
  return {lr / p.tau1(), std::arg(lambda) - p.tau2() / p.tau1() * lr};
}

cplx from_spiral(const BrownParams& p, SpiralCoords c) { return std::exp(c.v * p.tau) * std::polar(1.0, c.delta); }

double theta_of_delta(const DomainProfile& prof, double delta) {
  return solve_lift(prof.theta, prof.delta, delta, [&](double t) {
    const ThetaPoint q = profile_at(prof, t);
    return std::make_pair(q.delta, q.ddelta);
  });
}

double theta_of_phi(const DomainProfile& prof, double phi) {
  return solve_lift(prof.theta, prof.phi_s, phi, [&](double t) {
    const ThetaPoint q = profile_at(prof, t);
    return std::make_pair(q.phi, q.dphi);
  });
}

VBounds v_bounds(const DomainProfile& prof, double delta) {
  const double theta = theta_of_delta(prof, delta);
  const ThetaPoint q = profile_at(prof, theta);
  return {q.v1, q.v2, theta};
}

Region contains(const DomainProfile& prof, cplx lambda, double tol) {
  if (lambda == 0.0) return Region::Outside;
  const SpiralCoords c = to_spiral(prof.params, lambda);
  const VBounds b = v_bounds(prof, c.delta);
  if (std::abs(c.v - b.v1) <= tol || std::abs(c.v - b.v2) <= tol) return Region::Boundary;
  return c.v > b.v1 && c.v < b.v2 ? Region::Inside : Region::Outside;
}

double mu_s_density(const DomainProfile& prof, double phi) {
  return profile_at(prof, theta_of_phi(prof, phi)).R;
}

double mu_s_cdf(const DomainProfile& prof, double theta) {
  const MuSRule& rule = *prof.rule;
  const double t0 = rule.theta_start;
  double th = theta - kTwoPi * std::floor((theta - t0) / kTwoPi);
  if (theta >= t0 + kTwoPi && th == t0) th = t0 + kTwoPi;
  double acc = 0;
  for (std::size_t i = 0; i < rule.pieces.size(); ++i) {
    const auto& p = rule.pieces[i];
    if (th >= p.b) {
      acc = rule.cdf[i].back();
      continue;
    }
    if (th <= p.a) break;
    const int P = rule.panels[i];
    const double t = piece_t(p, th);
    const int k = std::min(P - 1, static_cast<int>(std::floor(t * P)));
    acc = rule.cdf[i][k];
    const double ta = static_cast<double>(k) / P;
    const double half = 0.5 * (t - ta), mid = 0.5 * (t + ta);
    for (const auto& [x, w] : gl16()) {
      const double tt = mid + half * x;
      const ThetaPoint q = profile_at(prof, piece_theta(p, tt));
      acc += w * half * q.R * q.dphi * piece_dtheta(p, tt) / kTwoPi;
    }
    break;
  }
  return acc;
}

double integrate_support(const DomainProfile& prof, double a, double b,
                         const std::function<double(const ThetaPoint&)>& f, double tol) {
  if (b <= a) return 0.0;
  const MuSRule& rule = *prof.rule;
  double total = 0;
  for (const auto& p0 : rule.pieces) {
    for (int shift = -2; shift <= 2; ++shift) {
      const SupportPiece p{p0.a + shift * kTwoPi, p0.b + shift * kTwoPi};
      const double lo = std::max(a, p.a), hi = std::min(b, p.b);
      if (hi <= lo) continue;
      const double tl = piece_t(p, lo), th = piece_t(p, hi);
      auto g = [&](double t) {
        const double theta = piece_theta(p, t);
        return f(profile_at(prof, theta)) * piece_dtheta(p, t);
      };
      total += detail::kronrod<15>(g, tl, th, 12, tol);
    }
  }
  return total;
}

namespace {

bool outside_sigma_s(const CircleMeasure& m, double s, cplx z) {
  return z == 0.0 || T_fn(m, z) >= s * (1 - 1e-9);
}

// Newton continuation of f_β(z) = w(t) from t = 0 to t = 1.
cplx continue_inverse(const CircleMeasure& m, cplx beta, const std::function<cplx(double)>& path, cplx z,
                      const std::function<bool(cplx)>& in_region) {
  auto solve = [&](cplx target, cplx& zz) {
    const double tol = 1e-11 * std::max(1.0, std::abs(target));
    for (int it = 0; it < 60; ++it) {
      const cplx J = herglotz(m, zz);
      const cplx e = std::exp(0.5 * beta * J);
      const cplx F = zz * e - target;
      if (std::abs(F) <= tol) return in_region(zz);
      const cplx dF = e * (1.0 + 0.5 * beta * zz * herglotz_derivative(m, zz));
      cplx step = F / dF;
      const double cap = 0.5 * std::max(std::abs(zz), 1e-3);
      if (std::abs(step) > cap) step *= cap / std::abs(step);
      zz -= step;
      if (!std::isfinite(zz.real()) || !std::isfinite(zz.imag())) return false;
    }
    return false;
  };
  cplx z0 = z;
  if (!solve(path(0.0), z0)) throw NumericalError(ErrorCode::NoConvergence, "inverse of f_beta: start point");
  z = z0;
  double t = 0.0, dt = 1.0 / 16;
  int steps = 0;
  while (t < 1.0) {
    if (++steps > 200) throw NumericalError(ErrorCode::NoConvergence, "inverse of f_beta: continuation budget");
    const double tn = std::min(1.0, t + dt);
    cplx zn = z;
    if (solve(path(tn), zn)) {
      z = zn;
      t = tn;
      dt = std::min(0.25, dt * 1.5);
    } else {
      dt *= 0.5;
      if (dt < 1e-9) throw NumericalError(ErrorCode::OutOfRegion, "inverse of f_beta left its region");
    }
  }
  if (!in_region(z)) throw NumericalError(ErrorCode::OutOfRegion, "inverse of f_beta left its region");
  return z;
}

cplx invert_inside_disk(const CircleMeasure& m, double s, cplx w) {
  if (w == 0.0) return 0.0;
  if (std::abs(w) > 1.0 + 1e-12) throw NumericalError(ErrorCode::OutOfRegion, "InsideDisk needs |w| <= 1");
  return continue_inverse(
      m, s, [w](double t) { return t * w; }, 0.0,
      [&](cplx z) { return std::abs(z) < 1.0 + 1e-12 && outside_sigma_s(m, s, z); });
}

}  // namespace

cplx invert_f_beta(const CircleMeasure& m, cplx beta, cplx w, const InvertRegion& region) {
  switch (region.kind) {
    case InvertKind::InsideDisk:
    case InvertKind::OutsideDisk: {
      if (std::abs(beta.imag()) > 1e-14 || !(beta.real() > 0))
        throw ValidationError("disk inversion is defined for real beta = s > 0");
      const double s = beta.real();
      if (region.kind == InvertKind::InsideDisk) return invert_inside_disk(m, s, w);
      if (std::abs(w) < 1.0 - 1e-12) throw NumericalError(ErrorCode::OutOfRegion, "OutsideDisk needs |w| >= 1");
      return 1.0 / std::conj(invert_inside_disk(m, s, 1.0 / std::conj(w)));
    }
    case InvertKind::OutsideSigma: {
      if (!region.profile) throw ValidationError("OutsideSigma inversion needs a profile");
      const DomainProfile& prof = *region.profile;
      const BrownParams& p = prof.params;
      if (std::abs(beta - (p.s - p.tau)) > 1e-12) throw ValidationError("beta must equal s - tau of the profile");
      if (w == 0.0) return 0.0;
      const SpiralCoords c = to_spiral(p, w);
      const VBounds vb = v_bounds(prof, c.delta);
      bool inner;
      if (c.v <= vb.v1 + 1e-12) inner = true;
      else if (c.v >= vb.v2 - 1e-12) inner = false;
      else throw NumericalError(ErrorCode::OutOfRegion, "w lies inside Sigma_{s,tau}");
      if (beta == 0.0) return w;
      const double rho = std::abs(w);
      const double rho_start = inner ? 1e-4 * std::min(1.0, rho) : 1e4 * std::max(1.0, rho);
      const double v_start = std::log(rho_start) / p.tau1();
      const double span = inner ? std::max(0.0, c.v - v_start) : std::max(0.0, v_start - c.v);
      auto path = [&](double t) {
        const double v = inner ? c.v - span * (1 - t) : c.v + span * (1 - t);
        return from_spiral(p, {v, c.delta});
      };
      const cplx w0 = path(0.0);
      const cplx z0 = inner ? w0 * std::exp(-0.5 * beta) : w0 * std::exp(0.5 * beta);
      const double s = p.s;
      return continue_inverse(m, beta, path, z0, [&](cplx z) {
        return outside_sigma_s(m, s, z) && (inner ? std::abs(z) < 1.0 + 1e-12 : std::abs(z) > 1.0 - 1e-12);
      });
    }
  }
  return w;
}

std::vector<BoundaryPoint> boundary_polyline(const DomainProfile& prof, int n) {
  if (n < 3) throw ValidationError("boundary_polyline needs n >= 3");
  std::vector<BoundaryPoint> out(2 * static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    const double theta = -kPi + kTwoPi * static_cast<double>(j) / n;
    const ThetaPoint q = profile_at(prof, theta);
    out[j] = {from_spiral(prof.params, {q.v1, q.delta}), false};
    out[n + j] = {from_spiral(prof.params, {q.v2, q.delta}), true};
  });
  return out;
}

namespace {

// (e^x − 1)/x with its limit 1 at 0.
double expm1_ratio(double x) { return x == 0 ? 1.0 : std::expm1(x) / x; }

// e^d − 1 for complex d without cancellation.
cplx cexpm1(cplx d) {
  const double x = d.real(), y = d.imag();
  const double s2 = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * s2 * s2, std::exp(x) * std::sin(y)};
}

}  // namespace

DiffQuotient diff_quotient(cplx w1, cplx w2) {
  const cplx d = w1 - w2;
  cplx q;
  if (std::abs(d) < 1e-8)
    q = std::exp(w2) * (1.0 + d / 2.0 + d * d / 6.0);
  else
    q = std::exp(w2) * cexpm1(d) / d;
  return {std::norm(q), expm1_ratio(2 * w1.real()) * expm1_ratio(2 * w2.real())};
}

}  // namespace brownlab
