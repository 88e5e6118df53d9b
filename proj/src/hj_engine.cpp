#include "brownlab/hj_engine.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "brownlab/errors.hpp"

namespace brownlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

double piece_theta(const SupportPiece& p, double t) { return p.a + (p.b - p.a) * 0.5 * (1.0 - std::cos(kPi * t)); }
double piece_dtheta(const SupportPiece& p, double t) { return (p.b - p.a) * 0.5 * kPi * std::sin(kPi * t); }

struct Accumulator {
  cplx lambda0;
  double eps0;
  bool derivatives;
  double S0 = 0, P = 0;
  cplx pl = 0, A = 0, Ar = 0, At = 0, Ae = 0;

  void add(cplx xi, double mass) {
    const cplx d = xi - lambda0;
    const double e2 = eps0 * eps0;
    const double D = std::norm(d) + e2;
    const cplx ld = lambda0 * std::conj(d);
    const cplx N = 2.0 * e2 - 2.0 * ld;
    S0 += mass * std::log(D);
    P += mass / D;
    pl += mass * std::conj(d) / D;
    A += mass * N / D;
    if (!derivatives) return;
    const double D2 = D * D;
    const double l2 = std::norm(lambda0);
    const cplx Nr = -2.0 * ld + 2.0 * l2;
    const double Dr = -2.0 * ld.real();
    const cplx Nt = -2.0 * kI * lambda0 * std::conj(xi);
    const double Dt = 2.0 * ld.imag();
    const double Ne = 4.0 * e2, De = 2.0 * e2;
    Ar += mass * (Nr * D - N * Dr) / D2;
    At += mass * (Nt * D - N * Dt) / D2;
    Ae += mass * (Ne * D - N * De) / D2;
  }
};

}  // namespace

PotentialSolver::PotentialSolver(const CircleMeasure& m, double s, int panels)
    : s_(s), prof_(build_profile(m, BrownParams{s, cplx(s, 0)}, 1024, build_mu_s_rule(m, s, panels))) {}

InitialSums PotentialSolver::initial_sums(cplx lambda0, double eps0, bool derivatives) const {
  const MuSRule& rule = *prof_.rule;
  Accumulator acc{lambda0, eps0, derivatives};
  const double dist = std::hypot(std::abs(lambda0) - 1.0, eps0);
  const bool refine = dist < 0.25 && !rule.pieces.empty() && lambda0 != 0.0;
  const double theta_peak = refine ? theta_of_phi(prof_, std::arg(lambda0)) : 0.0;
  const double width = 0.5 * dist;  // φ' ≤ 2, so the peak is at least this wide in θ

  auto far_enough = [&](double ta, double tb) {
    const double mid = 0.5 * (ta + tb);
    const double tp = theta_peak + kTwoPi * std::round((mid - theta_peak) / kTwoPi);
    const double d = std::max(0.0, std::max(ta - tp, tp - tb));
    return d + width >= tb - ta;
  };
  const auto& gx = boost::math::quadrature::gauss<double, 16>::abscissa();
  const auto& gw = boost::math::quadrature::gauss<double, 16>::weights();
  auto leaf = [&](const SupportPiece& p, double ta, double tb) {
    const double half = 0.5 * (tb - ta), mid = 0.5 * (ta + tb);
    for (std::size_t k = 0; k < gx.size(); ++k)
      for (double sg : {-1.0, 1.0}) {
        if (gx[k] == 0 && sg > 0) continue;
        const double t = mid + sg * half * gx[k];
        const ThetaPoint q = profile_at(prof_, piece_theta(p, t));
        acc.add(std::polar(1.0, q.phi), gw[k] * half * q.R * q.dphi * piece_dtheta(p, t) / kTwoPi);
      }
  };
  auto subdivide = [&](auto&& self, const SupportPiece& p, double ta, double tb, int depth) -> void {
    if (depth > 60 || far_enough(piece_theta(p, ta), piece_theta(p, tb))) {
      leaf(p, ta, tb);
      return;
    }
    const double tm = 0.5 * (ta + tb);
    self(self, p, ta, tm, depth + 1);
    self(self, p, tm, tb, depth + 1);
  };

  Eigen::Index node = 0;
  const Eigen::Index per_panel = 16;
  for (std::size_t i = 0; i < rule.pieces.size(); ++i) {
    const SupportPiece& p = rule.pieces[i];
    const int P = rule.panels[i];
    for (int k = 0; k < P; ++k, node += per_panel) {
      const double ta = static_cast<double>(k) / P, tb = static_cast<double>(k + 1) / P;
      if (!refine || far_enough(piece_theta(p, ta), piece_theta(p, tb))) {
        for (Eigen::Index j = node; j < node + per_panel; ++j) acc.add(rule.xi[j], rule.mass[j]);
      } else {
        subdivide(subdivide, p, ta, tb, 0);
      }
    }
  }
  InitialSums out;
  out.S0 = acc.S0;
  out.p_lambda0 = -acc.pl;
  out.p_eps0 = 2.0 * eps0 * acc.P;
  out.A = acc.A - 1.0;
  out.A_rho = acc.Ar;
  out.A_theta = acc.At;
  out.A_eta = acc.Ae;
  return out;
}

bool PotentialSolver::newton(cplx tau, cplx lambda, double eps, double& rho0, double& th0, double& eta) const {
  const double lr = std::log(std::abs(lambda)), ar = std::arg(lambda), le = std::log(eps);
  auto residual = [&](double r, double t, double e, InitialSums& sums) {
    sums = initial_sums(std::polar(std::exp(r), t), std::exp(e), true);
    const cplx h = 0.5 * tau * sums.A;
    return Eigen::Vector3d(r + h.real() - lr, std::remainder(t + h.imag() - ar, kTwoPi), e + h.real() - le);
  };
  InitialSums sums;
  Eigen::Vector3d F = residual(rho0, th0, eta, sums);
  for (int it = 0; it < 80; ++it) {
    if (!F.allFinite()) return false;
    if (F.lpNorm<Eigen::Infinity>() < 1e-13) return true;
    const cplx hr = 0.5 * tau * sums.A_rho, ht = 0.5 * tau * sums.A_theta, he = 0.5 * tau * sums.A_eta;
    Eigen::Matrix3d J;
    J << 1 + hr.real(), ht.real(), he.real(), hr.imag(), 1 + ht.imag(), he.imag(), hr.real(), ht.real(),
        1 + he.real();
    const double eps0 = std::exp(eta);
    // Near the circle with tiny ε₀ use (c, θ₀, log ε₀) with |λ₀| = 1 + cε₀.
    const bool blowup = eps0 < 1e-3;
    const double c = blowup ? std::expm1(rho0) / eps0 : 0.0;
    if (blowup) {
      const double g = eps0 / (1 + c * eps0);
      J.col(2) += J.col(0) * (c * g);
      J.col(0) *= g;
    }
    const Eigen::Vector3d dx = J.fullPivLu().solve(-F);
    if (!dx.allFinite()) return false;
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      double r, t = th0 + alpha * dx[1], e = eta + alpha * dx[2];
      if (blowup) {
        const double cn = c + alpha * dx[0];
        const double u = cn * std::exp(e);
        if (!(u > -1.0)) continue;
        r = std::log1p(u);
      } else {
        r = rho0 + alpha * dx[0];
      }
      if (std::abs(e) > 700 || std::abs(r) > 700) continue;
      InitialSums trial;
      const Eigen::Vector3d Fn = residual(r, t, e, trial);
      if (Fn.allFinite() && Fn.norm() <= (1 - 1e-4 * alpha) * F.norm()) {
        rho0 = r;
        th0 = t;
        eta = e;
        F = Fn;
        sums = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) return F.lpNorm<Eigen::Infinity>() < 1e-11;
  }
  return F.lpNorm<Eigen::Infinity>() < 1e-11;
}

PotentialSample PotentialSolver::evaluate(cplx tau, cplx lambda, double eps, const CharState* warm) const {
  if (!(eps > 0)) throw ValidationError("evaluate_S needs eps > 0");
  if (lambda == 0.0) lambda = 1e-300;  // the log-space shooting needs arg λ; S is continuous at 0
  if (tau != 0.0 && !admissible(s_, tau, 1e-9)) throw ValidationError("inadmissible tau for this s");

  double rho0 = std::log(std::abs(lambda)), th0 = std::arg(lambda), eta = std::log(eps);
  bool ok = tau == 0.0;
  if (!ok && warm && warm->eps0 > 0 && warm->lambda0 != 0.0) {
    rho0 = std::log(std::abs(warm->lambda0));
    th0 = std::arg(warm->lambda0);
    eta = std::log(warm->eps0);
    ok = newton(tau, lambda, eps, rho0, th0, eta);
  }
  if (!ok) {
    // Continuation in τ from the identity at τ = 0.
    double r = std::log(std::abs(lambda)), t = std::arg(lambda), e = std::log(eps);
    double frac = 0.0, step = 0.125;
    while (frac < 1.0 && step > 1.0 / 4096) {
      const double next = std::min(1.0, frac + step);
      double r1 = r, t1 = t, e1 = e;
      if (newton(tau * next, lambda, eps, r1, t1, e1)) {
        r = r1, t = t1, e = e1;
        frac = next;
        step = std::min(0.25, 1.5 * step);
      } else {
        step *= 0.5;
      }
    }
    if (frac >= 1.0) {
      rho0 = r, th0 = t, eta = e;
      ok = true;
    }
  }
  if (!ok) {
    const std::array<cplx, 8> guesses{1.0, -1.0, 0.0, 0.5, -0.5, kI, -kI, 2.0};
    for (cplx a : guesses) {
      const cplx h = 0.5 * tau * a;
      rho0 = std::log(std::abs(lambda)) - h.real();
      th0 = std::arg(lambda) - h.imag();
      eta = std::log(eps) - h.real();
      if ((ok = newton(tau, lambda, eps, rho0, th0, eta))) break;
    }
  }
  if (!ok) throw NumericalError(ErrorCode::ShootingDiverged, "no initial point reaches the target");

  const cplx lambda0 = std::polar(std::exp(rho0), th0);
  const double eps0 = std::exp(eta);
  const InitialSums sums = initial_sums(lambda0, eps0);
  CharState init;
  init.lambda0 = lambda0;
  init.eps0 = eps0;
  init.p_lambda0 = sums.p_lambda0;
  init.p_eps0 = sums.p_eps0;
  const CharState st = transport(init, tau);
  const cplx A = sums.A;
  const cplx H0 = -0.125 * (1.0 - A * A);
  PotentialSample out;
  out.s = s_;
  out.tau = tau;
  out.lambda = lambda;
  out.eps = eps;
  out.S_value = sums.S0 + 2.0 * (tau * H0).real() + 0.5 * (tau * (A + 1.0)).real();
  out.grad_lambda = st.p_lambda;
  out.grad_eps = st.p_eps;
  out.state = st;
  return out;
}

std::pair<cplx, double> initial_momenta(const PotentialSolver& solver, cplx lambda0, double eps0) {
  if (eps0 < 0) throw ValidationError("eps0 must be nonnegative");
  if (eps0 > 0 || std::abs(std::abs(lambda0) - 1.0) < 1e-12) {
    if (eps0 == 0) {
      const double theta = theta_of_phi(solver.mu_s_profile(), std::arg(lambda0));
      if (profile_at(solver.mu_s_profile(), theta).r < 1.0)
        throw NumericalError(ErrorCode::SingularInitialPoint, "lambda0 lies in the support of mu_s");
    }
    const InitialSums sums = solver.initial_sums(lambda0, eps0);
    return {sums.p_lambda0, sums.p_eps0};
  }
  if (lambda0 == 0.0) return {0.0, 0.0};
  const InvertRegion region{std::abs(lambda0) < 1 ? InvertKind::InsideDisk : InvertKind::OutsideDisk, nullptr};
  const cplx chi = invert_f_beta(solver.measure(), solver.s(), lambda0, region);
  return {(1.0 - herglotz(solver.measure(), chi)) / (2.0 * lambda0), 0.0};
}

CharState initial_state(const PotentialSolver& solver, cplx lambda0, double eps0) {
  CharState st;
  st.lambda0 = st.lambda = lambda0;
  st.eps0 = st.eps = eps0;
  std::tie(st.p_lambda0, st.p_eps0) = initial_momenta(solver, lambda0, eps0);
  st.p_lambda = st.p_lambda0;
  st.p_eps = st.p_eps0;
  return st;
}

CharState transport(const CharState& init, cplx tau) {
  CharState st = init;
  const cplx A = init.eps0 * init.p_eps0 + 2.0 * init.lambda0 * init.p_lambda0 - 1.0;
  const cplx h = 0.5 * tau * A;
  st.lambda = init.lambda0 * std::exp(h);
  st.eps = init.eps0 * std::exp(h.real());
  st.p_lambda = init.p_lambda0 * std::exp(-h);
  st.p_eps = init.p_eps0 * std::exp(-h.real());
  st.H0 = hamiltonian(tau, init.lambda0, init.eps0, init.p_lambda0, init.p_eps0);
  return st;
}

double hamiltonian(cplx tau, cplx lambda, double eps, cplx p_lambda, double p_eps) {
  const cplx a = eps * p_eps + 2.0 * lambda * p_lambda - 1.0;
  return -0.25 * tau.real() + (0.25 * tau * a * a).real();
}

PotentialSample evaluate_S(const CircleMeasure& m, const BrownParams& p, cplx lambda, double eps) {
  return PotentialSolver(m, p.s).evaluate(p.tau, lambda, eps);
}

namespace {

cplx outside_chi(const DomainProfile& prof, cplx lambda) {
  const cplx beta = prof.params.s - prof.params.tau;
  return invert_f_beta(*prof.measure, beta, lambda, {InvertKind::OutsideSigma, &prof});
}

}  // namespace

cplx s0_outside_gradient(const DomainProfile& prof, cplx lambda) {
  if (contains(prof, lambda) != Region::Outside)
    throw NumericalError(ErrorCode::OutOfRegion, "s0_outside_gradient needs a point outside the domain");
  const cplx chi = outside_chi(prof, lambda);
  return (1.0 - herglotz(*prof.measure, chi)) / (2.0 * lambda);
}

double s0_outside_value(const PotentialSolver& solver, const DomainProfile& prof, cplx lambda) {
  if (contains(prof, lambda) != Region::Outside)
    throw NumericalError(ErrorCode::OutOfRegion, "s0_outside_value needs a point outside the domain");
  const cplx tau = prof.params.tau;
  const cplx chi = outside_chi(prof, lambda);
  const cplx lambda0 = f_beta(solver.measure(), solver.s(), chi);
  const cplx A = -herglotz(solver.measure(), chi);
  const double S0 = solver.initial_sums(lambda0, 0.0).S0;
  return S0 + (-0.25 * tau * (1.0 - A * A) + 0.5 * tau * (A + 1.0)).real();
}

InsideGradients s0_inside_gradients(const DomainProfile& prof, cplx lambda) {
  const BrownParams& p = prof.params;
  const SpiralCoords c = to_spiral(p, lambda);
  const ThetaPoint q = profile_at(prof, theta_of_delta(prof, c.delta));
  return {2 * p.tau1() * c.v + p.tau1(), 2 * p.tau1() / std::norm(p.tau) * (q.phi - c.delta)};
}

std::shared_ptr<const PotentialSolver> SolverCache::get(double s) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto& slot = solvers_[s];
  if (!slot) slot = std::make_shared<const PotentialSolver>(m_, s, panels_);
  return slot;
}

ResidualParts pde_residual_tau(const PotentialSolver& solver, cplx tau, cplx lambda, double eps, double h) {
  if (!(h > 0) || eps <= h) throw ValidationError("pde_residual_tau needs 0 < h < eps");
  const PotentialSample c = solver.evaluate(tau, lambda, eps);
  auto S = [&](cplx t, cplx l, double e) { return solver.evaluate(t, l, e, &c.state).S_value; };
  const double S_t1 = (S(tau + h, lambda, eps) - S(tau - h, lambda, eps)) / (2 * h);
  const double S_t2 = (S(tau + kI * h, lambda, eps) - S(tau - kI * h, lambda, eps)) / (2 * h);
  const double S_x = (S(tau, lambda + h, eps) - S(tau, lambda - h, eps)) / (2 * h);
  const double S_y = (S(tau, lambda + kI * h, eps) - S(tau, lambda - kI * h, eps)) / (2 * h);
  const double S_e = (S(tau, lambda, eps + h) - S(tau, lambda, eps - h)) / (2 * h);
  const cplx S_tau = 0.5 * cplx(S_t1, -S_t2);
  const cplx S_l = 0.5 * cplx(S_x, -S_y);
  const cplx inner = 1.0 - eps * S_e - 2.0 * lambda * S_l;
  return {S_tau, 0.125 * (1.0 - inner * inner)};
}

double rpde_rhs(cplx tau_prime, double s_prime, cplx lambda, double eps, cplx P_lambda, double P_eps) {
  const cplx inner = 1.0 - eps * P_eps - 2.0 * lambda * P_lambda;
  const cplx first = 0.25 * tau_prime * (1.0 - inner * inner);
  const cplx second = lambda * lambda * P_lambda * P_lambda - lambda * P_lambda + 0.25 * std::norm(lambda) * P_eps * P_eps;
  return first.real() + s_prime * second.real();
}

double rpde_simplified_rhs(cplx lambda, double eps, double P_x, double P_y, double P_eps) {
  const double x = lambda.real(), y = lambda.imag();
  return P_eps * (0.5 * eps + 0.25 * (std::norm(lambda) - eps * eps) * P_eps - 0.5 * eps * (x * P_x + y * P_y));
}

ResidualParts pde_residual_r(SolverCache& cache, const RPath& path, cplx lambda, double eps, double h) {
  if (!(h > 0) || eps <= h) throw ValidationError("pde_residual_r needs 0 < h < eps");
  auto P = [&](double r, cplx l, double e, const CharState* warm) {
    const auto solver = cache.get(path.s + r * path.s_prime);
    return solver->evaluate(path.tau + r * path.tau_prime, l, e, warm);
  };
  const PotentialSample c = P(path.r, lambda, eps, nullptr);
  auto Pv = [&](double r, cplx l, double e) { return P(r, l, e, &c.state).S_value; };
  const double P_r = (Pv(path.r + h, lambda, eps) - Pv(path.r - h, lambda, eps)) / (2 * h);
  const double P_x = (Pv(path.r, lambda + h, eps) - Pv(path.r, lambda - h, eps)) / (2 * h);
  const double P_y = (Pv(path.r, lambda + kI * h, eps) - Pv(path.r, lambda - kI * h, eps)) / (2 * h);
  const double P_e = (Pv(path.r, lambda, eps + h) - Pv(path.r, lambda, eps - h)) / (2 * h);
  const cplx P_l = 0.5 * cplx(P_x, -P_y);
  return {P_r, rpde_rhs(path.tau_prime, path.s_prime, lambda, eps, P_l, P_e)};
}

BlowupMomenta blowup_momenta(const DomainProfile& prof, double phi, double c) {
  const ThetaPoint q = profile_at(prof, theta_of_phi(prof, phi));
  if (q.R < 1e-12) throw NumericalError(ErrorCode::ZeroDensity, "mu_s has zero density at phi");
  const double frac = std::isinf(c) ? (c > 0 ? 1.0 : -1.0) : c / std::hypot(1.0, c);
  return {1.0 + frac * q.R, q.I, 0.0};
}

cplx blowup_lambda(const DomainProfile& prof, double phi, double c) {
  const BlowupMomenta b = blowup_momenta(prof, phi, c);
  return std::polar(1.0, phi) * std::exp(0.5 * prof.params.tau * cplx(b.p_rho - 1.0, -b.p_theta));
}

}  // namespace brownlab
