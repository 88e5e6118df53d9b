#include "brownlab/pushforward_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "brownlab/brown_measure.hpp"
#include "brownlab/errors.hpp"
#include "brownlab/parallel.hpp"

namespace brownlab {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

PushMap make_push_map(const CircleMeasure& m, double s, cplx tau, int n, std::shared_ptr<const MuSRule> rule) {
  if (!rule) rule = build_mu_s_rule(m, s);
  return {build_profile(m, make_params(s, s), n, rule), build_profile(m, make_params(s, tau), n, rule)};
}

cplx phi_stau(const PushMap& map, cplx lambda) {
  if (lambda == 0.0 || contains(map.source, lambda) == Region::Outside)
    throw NumericalError(ErrorCode::OutsideSource, "phi_stau needs a point in the closure of Sigma_s");
  const double s = map.target.params.s;
  const cplx tau = map.target.params.tau;
  const ThetaPoint q = profile_at(map.target, std::arg(lambda));
  const cplx z = std::polar(q.r, q.theta);
  const cplx f = z * std::exp(0.5 * (s - tau) * cplx(q.R, q.I));
  return std::exp(tau * ((std::log(std::abs(lambda)) - std::log(q.r)) / s)) * f;
}

cplx phi_stau_inverse(const PushMap& map, cplx lambda) {
  if (lambda == 0.0 || contains(map.target, lambda) == Region::Outside)
    throw NumericalError(ErrorCode::OutsideTarget, "phi_stau_inverse needs a point in the closure of Sigma_{s,tau}");
  const SpiralCoords c = to_spiral(map.target.params, lambda);
  const ThetaPoint q = profile_at(map.target, theta_of_delta(map.target, c.delta));
  const double log_r = std::log(q.r) + map.target.params.s * (c.v - q.v1);
  return std::polar(std::exp(log_r), q.theta);
}

cplx phi_s_limit(const DomainProfile& source, cplx lambda) {
  if (lambda == 0.0 || contains(source, lambda) == Region::Outside)
    throw NumericalError(ErrorCode::OutsideSource, "phi_s_limit needs a point in the closure of Sigma_s");
  return std::polar(1.0, profile_at(source, std::arg(lambda)).phi);
}

double chi_square_pvalue(double chi2, int dof) {
  if (dof <= 0) return 1.0;
  if (!std::isfinite(chi2)) return 0.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * chi2);
}

PushReport chi_square_vdelta(const DomainProfile& target, const std::vector<cplx>& points, int nv, int ndelta) {
  const BrownParams& p = target.params;
  const double vmin = target.v1.minCoeff(), vmax = target.v2.maxCoeff();
  const double pad = 0.01 * (vmax - vmin) + 1e-9;
  const double v0 = vmin - pad, dv = (vmax - vmin + 2 * pad) / nv;
  const double d0 = target.delta[0];  // the grid starts at θ = −π
  std::vector<double> v_edges(nv + 1), d_edges(ndelta + 1);
  for (int i = 0; i <= nv; ++i) v_edges[i] = v0 + i * dv;
  for (int j = 0; j <= ndelta; ++j) d_edges[j] = d0 + kTwoPi * j / ndelta;
  const Eigen::MatrixXd mass = strip_bin_masses(target, v_edges, d_edges);

  const double n = static_cast<double>(points.size());
  Eigen::MatrixXd obs = Eigen::MatrixXd::Zero(nv, ndelta);
  double stray = 0;  // points outside the v-range
  for (const cplx& z : points) {
    const SpiralCoords c = to_spiral(p, z);
    const double u = (c.delta - d0) / kTwoPi;
    int j = static_cast<int>(std::floor((u - std::floor(u)) * ndelta));
    j = std::clamp(j, 0, ndelta - 1);
    const int i = static_cast<int>(std::floor((c.v - v0) / dv));
    if (i < 0 || i >= nv) {
      stray += 1;
      continue;
    }
    obs(i, j) += 1;
  }

  // Contact points: breakpoints where r_s touches 1 between two pieces.
  std::vector<double> contacts;
  const auto& pieces = target.rule->pieces;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const double b = pieces[k].b;
    const double a_next = k + 1 < pieces.size() ? pieces[k + 1].a : pieces[0].a + kTwoPi;
    if (std::abs(b - a_next) < 1e-12 && profile_at(target, b).r > 1 - 1e-9) contacts.push_back(profile_at(target, b).delta);
  }

  PushReport rep;
  rep.n = static_cast<int>(points.size());
  std::vector<std::pair<double, double>> cells;  // (observed, expected)
  double rest_o = stray, rest_e = 0;
  for (int i = 0; i < nv; ++i)
    for (int j = 0; j < ndelta; ++j) {
      const double e = n * mass(i, j), o = obs(i, j);
      rep.sup_discrepancy = std::max(rep.sup_discrepancy, std::abs(o - e) / n);
      if (e >= 5) {
        cells.emplace_back(o, e);
        for (double dc : contacts) {
          const double u = dc - d_edges[j] - kTwoPi * std::floor((dc - d_edges[j]) / kTwoPi);
          if (u <= d_edges[j + 1] - d_edges[j]) rep.touches_contact = true;
        }
      } else {
        rest_o += o;
        rest_e += e;
      }
    }
  if (rest_e >= 5 || cells.empty()) {
    cells.emplace_back(rest_o, rest_e);
  } else {
    auto smallest = std::min_element(cells.begin(), cells.end(),
                                     [](const auto& x, const auto& y) { return x.second < y.second; });
    smallest->first += rest_o;
    smallest->second += rest_e;
  }
  for (const auto& [o, e] : cells)
    rep.chi2 += e > 0 ? (o - e) * (o - e) / e : (o > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  rep.bins_used = static_cast<int>(cells.size());
  rep.dof = rep.bins_used - 1;
  rep.pvalue = chi_square_pvalue(rep.chi2, rep.dof);
  return rep;
}

PushReport verify_pushforward(const PushMap& map, int n, std::uint64_t seed, int nv, int ndelta) {
  std::vector<cplx> pts = sample(map.source, n, seed);
  parallel_for(pts.size(), [&](std::size_t k) { pts[k] = phi_stau(map, pts[k]); });
  return chi_square_vdelta(map.target, pts, nv, ndelta);
}

PushReport verify_composite(const PushMap& first, const PushMap& second, int n, std::uint64_t seed, int nv,
                            int ndelta) {
  std::vector<cplx> pts = sample(first.target, n, seed);
  parallel_for(pts.size(), [&](std::size_t k) { pts[k] = phi_stau(second, phi_stau_inverse(first, pts[k])); });
  return chi_square_vdelta(second.target, pts, nv, ndelta);
}

double mu_s_arc_mass(const DomainProfile& prof, double phi_a, double phi_b) {
  if (phi_b <= phi_a) return 0.0;
  const double ta = theta_of_phi(prof, phi_a), tb = theta_of_phi(prof, phi_b);
  return integrate_support(prof, ta, tb, [](const ThetaPoint& q) { return q.R * q.dphi; }, 1e-12) / kTwoPi;
}

PhiHistogram phi_limit_histogram(const DomainProfile& source, int n, int bins, std::uint64_t seed) {
  const std::vector<cplx> pts = sample(source, n, seed);
  std::vector<double> phis(pts.size());
  parallel_for(pts.size(), [&](std::size_t k) { phis[k] = std::arg(phi_s_limit(source, pts[k])); });
  PhiHistogram h;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.edges[b] = -kPi + kTwoPi * b / bins;
  h.observed.assign(bins, 0.0);
  h.expected.assign(bins, 0.0);
  for (double ph : phis) {
    const int b = std::clamp(static_cast<int>(std::floor((ph + kPi) / kTwoPi * bins)), 0, bins - 1);
    h.observed[b] += 1;
  }
  parallel_for(static_cast<std::size_t>(bins),
               [&](std::size_t b) { h.expected[b] = n * mu_s_arc_mass(source, h.edges[b], h.edges[b + 1]); });
  for (int b = 0; b < bins; ++b) {
    const double e = h.expected[b], o = h.observed[b];
    const double var = e * (1 - e / n);
    const double z = var > 0 ? std::abs(o - e) / std::sqrt(var) : (o > 0 ? std::numeric_limits<double>::infinity() : 0);
    h.max_z = std::max(h.max_z, z);
  }
  return h;
}

}  // namespace brownlab
