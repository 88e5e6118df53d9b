#include <cmath>
#include <numbers>

#include "brownlab/errors.hpp"
#include "brownlab/spectral_domain.hpp"
#include "doctest.h"
#include "gen.hpp"

using namespace brownlab;
using std::numbers::pi;

namespace {

bool outside_sigma_s(const CircleMeasure& m, double s, cplx z) { return T_fn(m, z) > s * (1 + 1e-6); }

}  // namespace

TEST_CASE("radial profile examples") {
  CHECK(radial_profile(delta1(), 4, pi) == 1.0);
  const double r = radial_profile(delta1(), 5, pi);
  CHECK(r < 1.0);
  CHECK(std::abs(T_fn(delta1(), std::polar(r, pi)) - 5) < 1e-8);
  // Four equal atoms: between atoms T on the circle is large, so small s leaves gaps.
  const double gap = radial_profile(four_points(), 0.2, pi / 4);
  CHECK(gap == 1.0);
  CHECK(radial_profile(four_points(), 0.2, 0.0) < 1.0);
}

TEST_CASE("radial profile solves T = s where it is below 1") {
  gen::Gen g(31);
  for (int k = 0; k < 200; ++k) {
    const auto m = k % 2 ? g.atoms(4) : g.smooth(32, true);
    const double s = g.uniform(0.2, 4), th = g.angle();
    const double r = radial_profile(m, s, th);
    if (r < 1.0) CHECK(std::abs(T_fn(m, std::polar(r, th)) - s) < 1e-7 * s);
    else CHECK(T_fn(m, std::polar(1.0, th)) >= s);
  }
}

TEST_CASE("delta equals theta when tau = s") {
  for (const auto& m : {delta1(), four_points()})
    for (double s : {0.5, 1.0, 2.5}) {
      const auto prof = build_profile(m, make_params(s, s), 128);
      CHECK((prof.delta - prof.theta).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("conjugation symmetry at theta = 0") {
  const auto q = profile_at(delta1(), make_params(2, cplx(1.5, 0.5)), 0.0);
  CHECK(std::abs(q.I) < 1e-14);
  CHECK(std::abs(q.phi) < 1e-14);
  CHECK(std::abs(q.delta) < 1e-14);
}

TEST_CASE("delta and phi advance by 2 pi per turn") {
  gen::Gen g(32);
  for (int k = 0; k < 100; ++k) {
    const auto m = k % 2 ? g.atoms(4) : g.smooth(32);
    auto [s, tau] = g.params();
    const auto p = make_params(s, tau);
    const double th = g.angle();
    const auto a = profile_at(m, p, th), b = profile_at(m, p, th + 2 * pi);
    CHECK(std::abs(b.delta - a.delta - 2 * pi) < 1e-9);
    CHECK(std::abs(b.phi - a.phi - 2 * pi) < 1e-9);
  }
}

TEST_CASE("derivatives of delta lie in (0, 2) on the support and phi is monotone") {
  gen::Gen g(33);
  for (int k = 0; k < 12; ++k) {
    const auto m = k % 2 ? g.atoms(4) : g.smooth(32, true);
    auto [s, tau] = g.params();
    const auto prof = build_profile(m, make_params(s, tau), 128);
    for (Eigen::Index j = 0; j < prof.size(); ++j) {
      if (prof.r_s[j] < 1) {
        CHECK(prof.d_delta[j] > 0);
        CHECK(prof.d_delta[j] < 2);
      }
      if (j > 0) {
        CHECK(prof.phi_s[j] >= prof.phi_s[j - 1]);
        CHECK(prof.delta[j] > prof.delta[j - 1]);
      }
    }
  }
}

TEST_CASE("analytic dphi matches a difference quotient") {
  gen::Gen g(34);
  const auto m = four_points();
  const auto p = make_params(1.0, cplx(1, 0.5));
  int used = 0;
  for (int k = 0; k < 200; ++k) {
    const double th = g.angle(), h = 1e-6;
    const auto q = profile_at(m, p, th);
    if (q.r > 0.999) continue;
    const double fd = (profile_at(m, p, th + h).phi - profile_at(m, p, th - h).phi) / (2 * h);
    const double fdd = (profile_at(m, p, th + h).delta - profile_at(m, p, th - h).delta) / (2 * h);
    CHECK(std::abs(q.dphi - fd) < 1e-5);
    CHECK(std::abs(q.ddelta - fdd) < 1e-5);
    ++used;
  }
  CHECK(used > 50);
}

TEST_CASE("v bounds") {
  const auto m = delta1();
  const auto p = make_params(2, cplx(1.5, 0.5));
  const auto prof = build_profile(m, p, 256);
  const auto b0 = v_bounds(prof, 0.0);
  CHECK(std::abs((b0.v2 - b0.v1) + std::log(radial_profile(m, 2, 0.0))) < 1e-8);
  gen::Gen g(35);
  for (int k = 0; k < 200; ++k) {
    const double d = g.uniform(-4, 4);
    const auto b = v_bounds(prof, d);
    const auto q = profile_at(prof, b.theta);
    CHECK(std::abs(q.delta - d) < 1e-10);
    CHECK(std::abs((b.v2 - b.v1) + 2 / p.s * std::log(q.r)) < 1e-8);
    // The strip ends are the images of r_s^{±1}e^{iθ} under f_{s−τ}.
    const cplx beta = p.s - p.tau;
    const cplx in = f_beta(m, beta, std::polar(q.r, b.theta));
    const cplx out = f_beta(m, beta, std::polar(1 / q.r, b.theta));
    CHECK(std::abs(from_spiral(p, {b.v1, d}) - in) < 1e-9 * std::abs(in));
    CHECK(std::abs(from_spiral(p, {b.v2, d}) - out) < 1e-9 * std::abs(out));
  }
  // Off the support the strip is empty.
  const auto gap = four_points();
  const auto gp = build_profile(gap, make_params(0.2, 0.2), 128);
  const auto e = v_bounds(gp, pi / 4);
  CHECK(e.v1 == e.v2);
}

TEST_CASE("spiral coordinates round trip") {
  gen::Gen g(36);
  for (int k = 0; k < 500; ++k) {
    auto [s, tau] = g.params();
    const auto p = make_params(s, tau);
    const cplx z = g.annulus(0.05, 20);
    const auto c = to_spiral(p, z);
    CHECK(std::abs(from_spiral(p, c) - z) < 1e-12 * std::abs(z));
    // Spirals t ↦ z e^{tτ} keep δ fixed.
    const auto c2 = to_spiral(p, z * std::exp(0.3 * tau));
    CHECK(std::abs(std::remainder(c2.delta - c.delta, 2 * pi)) < 1e-10);
    CHECK(std::abs(c2.v - c.v - 0.3) < 1e-10);
  }
}

TEST_CASE("contains") {
  const auto m = four_points();
  const double s = 1;
  const auto prof = build_profile(m, make_params(s, s), 256);
  gen::Gen g(37);
  for (int k = 0; k < 200; ++k) {
    const double th = g.angle();
    const double r = radial_profile(m, s, th);
    if (r > 0.99) continue;
    const double rho = std::exp(g.uniform(0.02, 0.98) * std::log(r));
    CHECK(contains(prof, std::polar(rho, th)) == Region::Inside);
    CHECK(contains(prof, std::polar(1 / rho, th)) == Region::Inside);
    CHECK(contains(prof, std::polar(0.9 * r, th)) == Region::Outside);
  }
  CHECK(contains(prof, 1e6) == Region::Outside);
  CHECK(contains(prof, 1e-6) == Region::Outside);

  const auto twisted = build_profile(delta1(), make_params(2, cplx(1.5, 0.5)), 256);
  for (const auto& bp : boundary_polyline(twisted, 200)) {
    const auto reg = contains(twisted, bp.z, 1e-7);
    // Points off the support collapse to a single arc of zero width.
    CHECK((reg == Region::Boundary || reg == Region::Outside));
  }
  int boundary = 0;
  for (const auto& bp : boundary_polyline(twisted, 200)) boundary += contains(twisted, bp.z, 1e-7) == Region::Boundary;
  CHECK(boundary == 400);
}

TEST_CASE("boundary polyline at tau = s is the radial curve") {
  const auto m = delta1();
  const auto prof = build_profile(m, make_params(1.5, 1.5), 128);
  const auto pts = boundary_polyline(prof, 60);
  REQUIRE(pts.size() == 120);
  for (int j = 0; j < 60; ++j) {
    const double th = -pi + 2 * pi * j / 60;
    const double r = radial_profile(m, 1.5, th);
    CHECK(std::abs(pts[j].z - std::polar(r, th)) < 1e-10);
    CHECK(std::abs(pts[60 + j].z - std::polar(1 / r, th)) < 1e-9);
    CHECK_FALSE(pts[j].outer);
    CHECK(pts[60 + j].outer);
  }
  CHECK_THROWS_AS(boundary_polyline(prof, 2), ValidationError);
}

TEST_CASE("f_s agrees at r_s and its reciprocal") {
  gen::Gen g(38);
  for (int k = 0; k < 300; ++k) {
    const auto m = k % 2 ? g.atoms(4) : g.smooth(32, true);
    const double s = g.uniform(0.2, 4), th = g.angle();
    const double r = radial_profile(m, s, th);
    if (r >= 1) continue;
    const cplx a = f_beta(m, s, std::polar(r, th)), b = f_beta(m, s, std::polar(1 / r, th));
    CHECK(std::abs(a - b) < 1e-9);
  }
}

TEST_CASE("mu_s is a probability measure with density R") {
  for (const auto& m : {delta1(), four_points()})
    for (double s : {0.3, 1.0, 3.0}) {
      const auto prof = build_profile(m, make_params(s, s), 128);
      CHECK(std::abs(prof.rule->mass.sum() - 1) < 1e-8);
      const double total = integrate_support(prof, -pi, pi, [](const ThetaPoint& q) { return q.R * q.dphi / (2 * pi); });
      CHECK(std::abs(total - 1) < 1e-6);
      const double th = 0.3;
      const auto q = profile_at(prof, th);
      CHECK(std::abs(mu_s_density(prof, q.phi) - q.R) < 1e-9);
    }
  const auto gp = build_profile(four_points(), make_params(0.2, 0.2), 128);
  const auto q = profile_at(gp, pi / 4);
  CHECK(mu_s_density(gp, q.phi) == 0.0);
  // Small s concentrates μ_s near the atom.
  const auto narrow = build_profile(delta1(), make_params(0.05, 0.05), 128);
  CHECK(mu_s_density(narrow, 2.0) == 0.0);
  CHECK(mu_s_density(narrow, 0.0) > 1);
}

TEST_CASE("inverse of f_s on the disk") {
  gen::Gen g(39);
  for (const auto& m : {delta1(), four_points()})
    for (double s : {0.5, 1.0, 2.0}) {
      CHECK(invert_f_beta(m, s, 0.0, {InvertKind::InsideDisk}) == 0.0);
      for (int k = 0; k < 500; ++k) {
        const cplx w = g.annulus(0, 0.999);
        const cplx z = invert_f_beta(m, s, w, {InvertKind::InsideDisk});
        CHECK(std::abs(f_beta(m, s, z) - w) < 1e-10);
        CHECK(std::abs(z) <= 1.0);
        if (k % 10 == 0) {
          const cplx zo = invert_f_beta(m, s, 1.0 / std::conj(w), {InvertKind::OutsideDisk});
          CHECK(std::abs(zo - 1.0 / std::conj(z)) < 1e-9 * std::abs(zo));
          CHECK(std::abs(f_beta(m, s, zo) - 1.0 / std::conj(w)) < 1e-9 * std::abs(zo));
        }
      }
    }
  CHECK_THROWS_AS(invert_f_beta(delta1(), cplx(1, 1), 0.5, {InvertKind::InsideDisk}), ValidationError);
  CHECK_THROWS_AS(invert_f_beta(delta1(), 1.0, 2.0, {InvertKind::InsideDisk}), NumericalError);
}

TEST_CASE("f_{s-tau} is injective outside the closure of Sigma_s") {
  gen::Gen g(40);
  const auto m = four_points();
  const double s = 1;
  const cplx tau(1, 0.5);
  const auto prof = build_profile(m, make_params(s, tau), 256);
  const cplx beta = s - tau;
  std::vector<cplx> pts;
  while (pts.size() < 200) {
    const cplx z = g.annulus(0.05, 8);
    if (outside_sigma_s(m, s, z)) pts.push_back(z);
  }
  // Pairwise: 19900 pairs.
  double worst = 1e300;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double sep = std::abs(f_beta(m, beta, pts[i]) - f_beta(m, beta, pts[j])) / std::abs(pts[i] - pts[j]);
      worst = std::min(worst, sep);
    }
  CHECK(worst > 1e-6);
  // Inversion recovers the preimage.
  for (const cplx z : pts) {
    const cplx w = f_beta(m, beta, z);
    CHECK(contains(prof, w) != Region::Inside);
    const cplx back = invert_f_beta(m, beta, w, {InvertKind::OutsideSigma, &prof});
    CHECK(std::abs(back - z) < 1e-8 * std::max(1.0, std::abs(z)));
  }
}

TEST_CASE("difference-quotient inequality") {
  gen::Gen g(41);
  int violations = 0;
  for (int k = 0; k < 100000; ++k) {
    const double sc = k % 3 == 0 ? 0.01 : (k % 3 == 1 ? 1.0 : 5.0);
    const cplx w1(sc * g.normal(), sc * g.normal());
    const cplx w2 = k % 7 == 0 ? w1 + cplx(1e-9 * g.normal(), 1e-9 * g.normal()) : cplx(sc * g.normal(), sc * g.normal());
    const auto d = diff_quotient(w1, w2);
    if (d.lhs > d.rhs * (1 + 1e-12)) ++violations;
  }
  CHECK(violations == 0);
  // Equality on the diagonal w₂ = −conj(w₁).
  for (int k = 0; k < 100; ++k) {
    const cplx w1(g.normal(), g.normal());
    const auto d = diff_quotient(w1, -std::conj(w1));
    CHECK(std::abs(d.lhs - d.rhs) < 1e-12 * d.rhs);
  }
  const auto z = diff_quotient(0.0, 0.0);
  CHECK(z.lhs == doctest::Approx(1.0));
  CHECK(z.rhs == doctest::Approx(1.0));
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(build_profile(delta1(), make_params(1, 1.0), 10), ValidationError);
  CHECK_THROWS_AS(build_profile(delta1(), BrownParams{1, 3.0}, 128), ValidationError);
  CHECK_THROWS_AS(build_mu_s_rule(delta1(), -1), ValidationError);
}
