#include <cmath>
#include <numbers>

#include "brownlab/brown_measure.hpp"
#include "brownlab/errors.hpp"
#include "brownlab/hj_engine.hpp"
#include "doctest.h"
#include "gen.hpp"

using namespace brownlab;
using std::numbers::pi;

namespace {

const PotentialSolver& solver_4pt() {
  static const PotentialSolver s(four_points(), 1.0);
  return s;
}

const PotentialSolver& solver_delta() {
  static const PotentialSolver s(delta1(), 1.0);
  return s;
}

}  // namespace

TEST_CASE("hamiltonian special cases") {
  gen::Gen g(61);
  for (int k = 0; k < 50; ++k) {
    const cplx tau(g.uniform(0.1, 2), g.uniform(-1, 1));
    const cplx lam = g.annulus(0.1, 3);
    const double eps = g.uniform(0.01, 1);
    CHECK(std::abs(hamiltonian(tau, lam, eps, 0.0, 0.0)) < 1e-15);
    // εp_ε + 2λp_λ = 1 makes the square vanish.
    const double pe = g.uniform(0, 1 / eps);
    const cplx pl = (1.0 - eps * pe) / (2.0 * lam);
    CHECK(std::abs(hamiltonian(tau, lam, eps, pl, pe) + tau.real() / 4) < 1e-14);
  }
}

TEST_CASE("transport conserves the Hamiltonian and the momentum combination") {
  gen::Gen g(62);
  const auto& solver = solver_4pt();
  for (int k = 0; k < 100; ++k) {
    const cplx lam0 = g.annulus(0.3, 2);
    const double eps0 = g.uniform(0.01, 1);
    const CharState init = initial_state(solver, lam0, eps0);
    const cplx tau = cplx(g.uniform(0.1, 2), g.uniform(-1, 1));
    const CharState st = transport(init, tau);
    const double H1 = hamiltonian(tau, st.lambda, st.eps, st.p_lambda, st.p_eps);
    CHECK(std::abs(H1 - st.H0) < 1e-10 * (1 + std::abs(st.H0)));
    const cplx a0 = init.eps0 * init.p_eps0 + 2.0 * init.lambda0 * init.p_lambda0;
    const cplx a1 = st.eps * st.p_eps + 2.0 * st.lambda * st.p_lambda;
    CHECK(std::abs(a0 - a1) < 1e-12 * std::abs(a0));
    CHECK(std::abs(st.lambda * st.p_lambda - init.lambda0 * init.p_lambda0) < 1e-13 * std::abs(a0));
    // τ = 0 is the identity.
    const CharState id = transport(init, 0.0);
    CHECK(id.lambda == init.lambda0);
    CHECK(id.eps == init.eps0);
    CHECK(id.p_lambda == init.p_lambda0);
    CHECK(id.p_eps == init.p_eps0);
  }
}

TEST_CASE("initial momenta") {
  const auto& solver = solver_4pt();
  gen::Gen g(63);
  for (int k = 0; k < 100; ++k) {
    const cplx lam0 = g.annulus(0.2, 3);
    const double eps0 = g.uniform(1e-3, 2);
    CHECK(initial_momenta(solver, lam0, eps0).second > 0);
  }
  // ε₀ = 0 off the unit circle agrees with the quadrature at tiny ε₀.
  for (int k = 0; k < 50; ++k) {
    cplx lam0 = g.annulus(0.2, 0.8);
    if (k % 2) lam0 = 1.0 / std::conj(lam0);
    const auto [pl0, pe0] = initial_momenta(solver, lam0, 0.0);
    CHECK(pe0 == 0.0);
    const auto [pl, pe] = initial_momenta(solver, lam0, 1e-7);
    CHECK(std::abs(pl - pl0) < 1e-8);
    CHECK(pe < 1e-5);
  }
  // δ₁ is conjugation symmetric, so real λ₀ gives real p_λ.
  const auto [p_real, unused] = initial_momenta(solver_delta(), 1.7, 0.0);
  CHECK(std::abs(p_real.imag()) < 1e-14);
  CHECK_THROWS_AS(initial_momenta(solver, 1.0, 0.0), NumericalError);
  CHECK_THROWS_AS(initial_momenta(solver, 0.5, -1.0), ValidationError);
}

TEST_CASE("eps0 = 0 characteristics follow f_{s-tau} composed with chi_s") {
  const auto& solver = solver_4pt();
  const auto& m = solver.measure();
  const double s = solver.s();
  gen::Gen g(64);
  for (int k = 0; k < 200; ++k) {
    cplx lam0 = g.annulus(0.05, 0.97);
    if (k % 2) lam0 = 1.0 / std::conj(lam0);
    const cplx tau = s + std::polar(0.95 * s * std::sqrt(g.uniform(0, 1)), g.angle());
    const CharState st = transport(initial_state(solver, lam0, 0.0), tau);
    const auto kind = std::abs(lam0) < 1 ? InvertKind::InsideDisk : InvertKind::OutsideDisk;
    const cplx chi = invert_f_beta(m, s, lam0, {kind});
    const cplx expect = f_beta(m, s - tau, chi);
    CHECK(std::abs(st.lambda - expect) < 1e-9 * std::max(1.0, std::abs(expect)));
    CHECK(st.eps == 0.0);
  }
}

TEST_CASE("S at small tau approaches the initial log integral") {
  const auto& solver = solver_4pt();
  const auto& prof = solver.mu_s_profile();
  gen::Gen g(65);
  for (int k = 0; k < 10; ++k) {
    const cplx lam = g.annulus(0.3, 2);
    const double eps = g.uniform(0.05, 0.5);
    // Independent quadrature over θ of log(|e^{iφ} − λ|² + ε²) R φ′ / 2π.
    const double direct = integrate_support(
        prof, prof.rule->theta_start, prof.rule->theta_start + 2 * pi,
        [&](const ThetaPoint& q) {
          return std::log(std::norm(std::polar(1.0, q.phi) - lam) + eps * eps) * q.R * q.dphi / (2 * pi);
        },
        1e-12);
    const double at0 = solver.evaluate(0.0, lam, eps).S_value;
    CHECK(std::abs(at0 - direct) < 1e-8);
    const double small = solver.evaluate(cplx(1e-6, 1e-6), lam, eps).S_value;
    CHECK(std::abs(small - at0) < 1e-4);
  }
}

TEST_CASE("analytic gradients match centred differences of S") {
  const auto& solver = solver_4pt();
  const cplx tau(1, 0.5);
  gen::Gen g(66);
  const double h = 1e-4;
  for (int k = 0; k < 15; ++k) {
    const cplx lam = g.annulus(0.2, 2.5);
    const double eps = g.uniform(0.05, 0.8);
    const auto c = solver.evaluate(tau, lam, eps);
    auto S = [&](cplx l, double e) { return solver.evaluate(tau, l, e, &c.state).S_value; };
    const double Sx = (S(lam + h, eps) - S(lam - h, eps)) / (2 * h);
    const double Sy = (S(lam + cplx(0, h), eps) - S(lam - cplx(0, h), eps)) / (2 * h);
    const double Se = (S(lam, eps + h) - S(lam, eps - h)) / (2 * h);
    const cplx fd_l = 0.5 * cplx(Sx, -Sy);
    CHECK(std::abs(c.grad_lambda - fd_l) < 1e-4 * std::abs(c.grad_lambda));
    CHECK(std::abs(c.grad_eps - Se) < 1e-4 * std::abs(c.grad_eps));
  }
}

TEST_CASE("tau-PDE residual is small and decays like h^2") {
  const auto& solver = solver_delta();
  gen::Gen g(67);
  for (int k = 0; k < 4; ++k) {
    const cplx lam = g.annulus(0.3, 2);
    const double eps = g.uniform(0.1, 0.6);
    const double r1 = pde_residual_tau(solver, 1.0, lam, eps, 2e-3).residual();
    const double r2 = pde_residual_tau(solver, 1.0, lam, eps, 1e-3).residual();
    CHECK(r2 < 1e-3);
    // Either the truncation error dominates and drops by ~4, or it is already at the noise floor.
    CHECK((r1 / r2 > 3 || r2 < 1e-8));
  }
  CHECK_THROWS_AS(pde_residual_tau(solver, 1.0, 0.5, 1e-3, 1e-2), ValidationError);
}

TEST_CASE("r-PDE residual along a segment of parameters") {
  SolverCache cache(four_points());
  gen::Gen g(68);
  for (int k = 0; k < 3; ++k) {
    const cplx lam = g.annulus(0.3, 2);
    const double eps = g.uniform(0.1, 0.6);
    const RPath path{0.5, cplx(0.5, 0.1), 0.5, cplx(0.4, 0.2), 0.6};
    CHECK(pde_residual_r(cache, path, lam, eps, 1e-3).residual() < 1e-3);
  }
  // s = τ = 0, s′ = τ′ = 1: P(r) = S(r, r, ·).
  const RPath diag{0.0, 0.0, 1.0, 1.0, 0.7};
  CHECK(pde_residual_r(cache, diag, cplx(0.4, 0.9), 0.3, 1e-3).residual() < 1e-3);
}

TEST_CASE("r-PDE right-hand side: simplified form and vanishing tau'") {
  gen::Gen g(69);
  int printed_mismatch = 0;
  for (int k = 0; k < 1000; ++k) {
    const cplx lam = g.annulus(0.1, 3);
    const double eps = g.uniform(0.01, 2);
    const double Px = g.normal(), Py = g.normal(), Pe = g.normal();
    const cplx Pl = 0.5 * cplx(Px, -Py);
    const double general = rpde_rhs(1.0, 1.0, lam, eps, Pl, Pe);
    CHECK(std::abs(general - rpde_simplified_rhs(lam, eps, Px, Py, Pe)) < 1e-12 * (1 + std::abs(general)));
    // The bracket with |λ|² − ε²/4 in place of (|λ|² − ε²)/4 does not reduce from the general form.
    const double x = lam.real(), y = lam.imag();
    const double printed = Pe * (0.5 * eps + (std::norm(lam) - 0.25 * eps * eps) * Pe - 0.5 * eps * (x * Px + y * Py));
    printed_mismatch += std::abs(printed - general) > 1e-6 * (1 + std::abs(general));
    // With τ′ = 0 only the s′ bracket survives.
    const double sp = g.uniform(0.1, 2);
    const cplx second = lam * lam * Pl * Pl - lam * Pl + 0.25 * std::norm(lam) * Pe * Pe;
    CHECK(std::abs(rpde_rhs(0.0, sp, lam, eps, Pl, Pe) - sp * second.real()) < 1e-12 * (1 + std::abs(general)));
  }
  CHECK(printed_mismatch > 990);
}

TEST_CASE("outside: S0 is harmonic and its gradient matches the chi formula") {
  const auto p = make_params(1, cplx(1, 0.5));
  const auto& solver = solver_4pt();
  const auto prof = build_profile(four_points(), p, 256);
  gen::Gen g(70);
  int done = 0;
  while (done < 6) {
    const cplx lam = g.annulus(0.05, 4);
    const double h = 1e-2;
    bool outside = true;
    for (cplx d : {cplx(0), cplx(2 * h), cplx(-2 * h), cplx(0, 2 * h), cplx(0, -2 * h)})
      outside = outside && contains(prof, lam + d, 1e-3) == Region::Outside;
    if (!outside) continue;
    ++done;
    auto S0 = [&](cplx z) { return s0_outside_value(solver, prof, z); };
    // Fourth-order five-point stencils in x and y.
    auto d2 = [&](cplx dir) {
      return (-S0(lam + 2.0 * dir) + 16 * S0(lam + dir) - 30 * S0(lam) + 16 * S0(lam - dir) - S0(lam - 2.0 * dir)) /
             (12 * h * h);
    };
    CHECK(std::abs(d2(h) + d2(cplx(0, h))) < 1e-5);
    // ∂S₀/∂λ from values against the χ formula.
    const double hh = 1e-5;
    const cplx fd = 0.5 * cplx((S0(lam + hh) - S0(lam - hh)) / (2 * hh), -(S0(lam + cplx(0, hh)) - S0(lam - cplx(0, hh))) / (2 * hh));
    CHECK(std::abs(fd - s0_outside_gradient(prof, lam)) < 1e-6 * (1 + std::abs(fd)));
    // ε → 0 limit of the shooting solver.
    CHECK(std::abs(solver.evaluate(p.tau, lam, 1e-4).S_value - S0(lam)) < 1e-5);
  }
  // Large |λ|: λ∂S₀/∂λ → 1.
  CHECK(std::abs(1e6 * s0_outside_gradient(prof, 1e6) - 1.0) < 1e-5);
  const auto sym = build_profile(delta1(), make_params(1, 1.0), 256);
  CHECK(std::abs(s0_outside_gradient(sym, 5.0).imag()) < 1e-14);
  CHECK_THROWS_AS(s0_outside_gradient(prof, sample(prof, 1, 1)[0]), NumericalError);
}

TEST_CASE("inside gradients reproduce the density") {
  gen::Gen g(71);
  for (int k = 0; k < 4; ++k) {
    const auto m = k % 2 ? four_points() : g.smooth(32, true);
    auto [s, tau] = g.params(0.5, 2.0, 0.9);
    const auto p = make_params(s, tau);
    const auto prof = build_profile(m, p, 256);
    for (const cplx lam : sample(prof, 20, 10 + k)) {
      if (contains(prof, lam) != Region::Inside) continue;
      const auto c = to_spiral(p, lam);
      const double hv = 1e-4, hd = 1e-5;
      auto grads = [&](double v, double d) { return s0_inside_gradients(prof, from_spiral(p, {v, d})); };
      const auto gv = grads(c.v, c.delta);
      CHECK(std::abs(gv.dS_dv - (2 * p.tau1() * c.v + p.tau1())) < 1e-12);
      const double Svv = (grads(c.v + hv, c.delta).dS_dv - grads(c.v - hv, c.delta).dS_dv) / (2 * hv);
      CHECK(std::abs(Svv - 2 * p.tau1()) < 1e-8);
      const double Sdd = (grads(c.v, c.delta + hd).dS_ddelta - grads(c.v, c.delta - hd).dS_ddelta) / (2 * hd);
      // Laplacian in λ from the (v, δ) Hessian; ∂²S₀/∂v∂δ = 0.
      const double t1 = p.tau1(), t2 = p.tau2();
      const double lap = (Svv / (t1 * t1) + (t2 * t2 / (t1 * t1) + 1) * Sdd) / std::norm(lam);
      const double dens = density(prof, lam);
      CHECK(std::abs(0.25 * lap - pi * dens) < 1e-6 * std::max(1.0, pi * dens));
    }
  }
  const auto prof = build_profile(delta1(), make_params(1, 1.0), 128);
  CHECK(s0_inside_gradients(prof, from_spiral(prof.params, {-0.5, 0.1})).dS_dv == doctest::Approx(0.0));
}

TEST_CASE("blow-up limits") {
  const auto& solver = solver_4pt();
  const auto& prof = solver.mu_s_profile();
  gen::Gen g(72);
  for (int k = 0; k < 20; ++k) {
    const double phi = g.angle();
    const double R = mu_s_density(prof, phi);
    if (R < 1e-3) {
      if (R == 0) CHECK_THROWS_AS(blowup_momenta(prof, phi, 0), NumericalError);
      continue;
    }
    CHECK(blowup_momenta(prof, phi, 0).p_rho == doctest::Approx(1.0));
    CHECK(std::abs(blowup_momenta(prof, phi, -INFINITY).p_rho - (1 - R)) < 1e-12);
    CHECK(std::abs(blowup_momenta(prof, phi, INFINITY).p_rho - (1 + R)) < 1e-12);
    const double pt = blowup_momenta(prof, phi, 0).p_theta;
    CHECK(std::abs(blowup_momenta(prof, phi, 3).p_theta - pt) < 1e-15);
    // The limits match the momenta at small ε₀ on λ₀ = (1 + cε₀)e^{iφ}.
    for (double c : {-2.0, 0.5}) {
      const double e0 = 1e-6;
      const cplx lam0 = (1 + c * e0) * std::polar(1.0, phi);
      const auto [pl, pe] = initial_momenta(solver, lam0, e0);
      const auto lim = blowup_momenta(prof, phi, c);
      CHECK(std::abs((2.0 * lam0 * pl).real() - lim.p_rho) < 1e-3);
      CHECK(std::abs(-2 * (lam0 * pl).imag() - lim.p_theta) < 1e-3);
      CHECK(std::abs(e0 * pe) < 1e-3);
    }
  }
}

TEST_CASE("blow-up characteristics fill the spiral segment between the boundary images") {
  const auto p = make_params(1, cplx(1, 0.5));
  const auto prof = build_profile(four_points(), p, 256);
  const auto& m = four_points();
  gen::Gen g(73);
  int done = 0;
  while (done < 20) {
    const double th = g.angle();
    const auto q = profile_at(prof, th);
    if (q.r > 0.99) continue;
    ++done;
    const cplx beta = p.s - p.tau;
    const cplx in = blowup_lambda(prof, q.phi, -INFINITY), out = blowup_lambda(prof, q.phi, INFINITY);
    CHECK(std::abs(in - f_beta(m, beta, std::polar(q.r, th))) < 1e-7);
    CHECK(std::abs(out - f_beta(m, beta, std::polar(1 / q.r, th))) < 1e-7);
    for (double c : {-1.0, 0.0, 2.0}) {
      const auto sc = to_spiral(p, blowup_lambda(prof, q.phi, c));
      CHECK(std::abs(std::remainder(sc.delta - q.delta, 2 * pi)) < 1e-9);
      CHECK(sc.v > q.v1);
      CHECK(sc.v < q.v2);
    }
  }
}

TEST_CASE("evaluate validates its input") {
  CHECK_THROWS_AS(solver_4pt().evaluate(1.0, 0.5, 0.0), ValidationError);
  CHECK_THROWS_AS(solver_4pt().evaluate(3.0, 0.5, 0.1), ValidationError);
}
