#include "brownlab/brown_measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "brownlab/errors.hpp"
#include "brownlab/parallel.hpp"
#include "quadrature.hpp"
#include "brownlab/rng.hpp"

namespace brownlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double piece_theta(const SupportPiece& p, double t) { return p.a + (p.b - p.a) * 0.5 * (1.0 - std::cos(kPi * t)); }
double piece_dtheta(const SupportPiece& p, double t) { return (p.b - p.a) * 0.5 * kPi * std::sin(kPi * t); }

// Fritsch–Carlson slopes for a monotone cubic through (x, y).
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0), h(n - 1), del(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x[k + 1] - x[k];
    del[k] = (y[k + 1] - y[k]) / h[k];
  }
  if (n == 2) {
    d[0] = d[1] = del[0];
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (del[k - 1] * del[k] <= 0) continue;
    const double w1 = 2 * h[k] + h[k - 1], w2 = h[k] + 2 * h[k - 1];
    d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0) return 0.0;
    if (d0 * d1 <= 0 && std::abs(s) > 3 * std::abs(d0)) return 3 * d0;
    return s;
  };
  d[0] = end_slope(h[0], h[1], del[0], del[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
  return d;
}

double pchip_eval(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& d,
                  double q) {
  const auto it = std::upper_bound(x.begin(), x.end(), q);
  std::size_t k = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
  k = std::min(k, x.size() - 2);
  const double h = x[k + 1] - x[k];
  const double u = std::clamp((q - x[k]) / h, 0.0, 1.0);
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
  return h00 * y[k] + h10 * h * d[k] + h01 * y[k + 1] + h11 * h * d[k + 1];
}

}  // namespace

double density(const DomainProfile& prof, cplx lambda) {
  if (lambda == 0.0) return 0.0;
  const BrownParams& p = prof.params;
  const SpiralCoords c = to_spiral(p, lambda);
  const double theta = theta_of_delta(prof, c.delta);
  const ThetaPoint q = profile_at(prof, theta);
  const double tol = 1e-9;
  if (!(c.v > q.v1 + tol && c.v < q.v2 - tol)) return 0.0;
  return q.dphi / q.ddelta / (kTwoPi * p.tau1() * std::norm(lambda));
}

double total_mass(const DomainProfile& prof) {
  // Integrate in δ through the inverse map θ(δ), piece by piece, with a
  // cosine substitution at both ends to absorb the square-root edges.
  const MuSRule& rule = *prof.rule;
  double total = 0;
  for (const auto& piece : rule.pieces) {
    const double da = profile_at(prof, piece.a).delta, db = profile_at(prof, piece.b).delta;
    auto g = [&](double t) {
      const double delta = da + (db - da) * 0.5 * (1.0 - std::cos(kPi * t));
      const double ddelta_dt = (db - da) * 0.5 * kPi * std::sin(kPi * t);
      const ThetaPoint q = profile_at(prof, theta_of_delta(prof, delta));
      return q.dphi / q.ddelta * (q.v2 - q.v1) * ddelta_dt;
    };
    total += detail::kronrod<31>(g, 0.0, 1.0, 15, 1e-10);
  }
  return total / kTwoPi;
}

DensityRaster raster(const DomainProfile& prof, const Bounds& b, int nx, int ny) {
  if (nx < 16 || ny < 16) throw ValidationError("raster resolution must be at least 16x16");
  DensityRaster out{b, nx, ny, Eigen::MatrixXd::Zero(ny, nx)};
  const double dx = (b.x1 - b.x0) / nx, dy = (b.y1 - b.y0) / ny;
  parallel_for(static_cast<std::size_t>(ny), [&](std::size_t j) {
    const double y = b.y0 + (static_cast<double>(j) + 0.5) * dy;
    for (int i = 0; i < nx; ++i) out.values(j, i) = density(prof, {b.x0 + (i + 0.5) * dx, y});
  });
  return out;
}

LogRaster log_raster(const DomainProfile& prof, double rho0, double rho1, int nrho, int ntheta) {
  if (nrho < 16 || ntheta < 16) throw ValidationError("raster resolution must be at least 16x16");
  LogRaster out{rho0, rho1, nrho, ntheta, Eigen::MatrixXd::Zero(ntheta, nrho)};
  parallel_for(static_cast<std::size_t>(ntheta), [&](std::size_t j) {
    const double th = -kPi + (static_cast<double>(j) + 0.5) * kTwoPi / ntheta;
    for (int i = 0; i < nrho; ++i) {
      const cplx lambda = std::polar(std::exp(rho0 + (i + 0.5) * (rho1 - rho0) / nrho), th);
      out.values(j, i) = std::norm(lambda) * density(prof, lambda);
    }
  });
  return out;
}

Bounds enclosing_bounds(const DomainProfile& prof, double margin) {
  double rmax = 0;
  for (const auto& bp : boundary_polyline(prof, 512)) rmax = std::max(rmax, std::abs(bp.z));
  for (Eigen::Index j = 0; j < prof.size(); ++j)
    rmax = std::max(rmax, std::exp(prof.params.tau1() * prof.v2[j]));
  const double r = rmax * (1 + margin);
  return {-r, r, -r, r};
}

ThetaSampler::ThetaSampler(const DomainProfile& prof, int sub) {
  const MuSRule& rule = *prof.rule;
  const auto& x = boost::math::quadrature::gauss<double, 16>::abscissa();
  const auto& w = boost::math::quadrature::gauss<double, 16>::weights();
  auto seg_mass = [&](const SupportPiece& p, double ta, double tb) {
    const double half = 0.5 * (tb - ta), mid = 0.5 * (ta + tb);
    double acc = 0;
    for (std::size_t k = 0; k < x.size(); ++k)
      for (double sg : {-1.0, 1.0}) {
        if (x[k] == 0 && sg > 0) continue;
        const double t = mid + sg * half * x[k];
        const ThetaPoint q = profile_at(prof, piece_theta(p, t));
        acc += w[k] * half * q.R * q.dphi * piece_dtheta(p, t) / kTwoPi;
      }
    return acc;
  };
  double total = 0;
  for (std::size_t i = 0; i < rule.pieces.size(); ++i) {
    Table tab;
    tab.piece = rule.pieces[i];
    const int n = rule.panels[i] * sub;
    std::vector<double> seg(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t k) {
      seg[k] = seg_mass(tab.piece, static_cast<double>(k) / n, static_cast<double>(k + 1) / n);
    });
    tab.F.push_back(total);
    tab.t.push_back(0.0);
    for (int k = 0; k < n; ++k) {
      if (seg[k] <= 0) continue;  // keep F strictly increasing
      total += seg[k];
      tab.F.push_back(total);
      tab.t.push_back(static_cast<double>(k + 1) / n);
    }
    if (tab.F.size() >= 2) {
      tab.t.back() = 1.0;
      tab.slope = pchip_slopes(tab.F, tab.t);
      tables_.push_back(std::move(tab));
      piece_end_.push_back(total);
    }
  }
  if (tables_.empty() || !(total > 0)) throw NumericalError(ErrorCode::ZeroDensity, "mu_s has no mass on the grid");
  // Renormalize so that u in (0, 1) covers the full table.
  for (auto& tab : tables_) {
    for (double& f : tab.F) f /= total;
    for (double& d : tab.slope) d *= total;
  }
  for (double& e : piece_end_) e /= total;
}

double ThetaSampler::theta(double u) const {
  const auto it = std::lower_bound(piece_end_.begin(), piece_end_.end(), u);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - piece_end_.begin()), tables_.size() - 1);
  const Table& tab = tables_[i];
  const double t = std::clamp(pchip_eval(tab.F, tab.t, tab.slope, u), 0.0, 1.0);
  return piece_theta(tab.piece, t);
}

std::vector<cplx> sample(const DomainProfile& prof, int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample needs n >= 1");
  const ThetaSampler sampler(prof);
  std::vector<cplx> out(static_cast<std::size_t>(n));
  parallel_for(out.size(), [&](std::size_t k) {
    const double theta = sampler.theta(counter_uniform(seed, k, 0));
    const ThetaPoint q = profile_at(prof, theta);
    const double v = q.v1 + counter_uniform(seed, k, 1) * (q.v2 - q.v1);
    out[k] = from_spiral(prof.params, {v, q.delta});
  });
  return out;
}

double strip_mass(const DomainProfile& prof, double va, double vb, double da, double db) {
  if (vb <= va || db <= da) return 0.0;
  const double ta = theta_of_delta(prof, da);
  const double tb = theta_of_delta(prof, db);
  return integrate_support(
             prof, ta, tb,
             [va, vb](const ThetaPoint& q) {
               const double overlap = std::max(0.0, std::min(vb, q.v2) - std::max(va, q.v1));
               return q.dphi * overlap;
             },
             1e-11) /
         kTwoPi;
}

Eigen::MatrixXd strip_bin_masses(const DomainProfile& prof, const std::vector<double>& v_edges,
                                 const std::vector<double>& delta_edges) {
  const std::size_t nv = v_edges.size() - 1, nd = delta_edges.size() - 1;
  Eigen::MatrixXd out(nv, nd);
  parallel_for(nv * nd, [&](std::size_t k) {
    const std::size_t i = k % nv, j = k / nv;
    out(i, j) = strip_mass(prof, v_edges[i], v_edges[i + 1], delta_edges[j], delta_edges[j + 1]);
  });
  return out;
}

void write_pgm(const std::string& path, const Eigen::MatrixXd& values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open " + path);
  const double vmax = values.maxCoeff();
  os << "P5\n" << values.cols() << ' ' << values.rows() << "\n255\n";
  // Top row of the image is the largest y.
  for (Eigen::Index j = values.rows() - 1; j >= 0; --j)
    for (Eigen::Index i = 0; i < values.cols(); ++i) {
      const double g = vmax > 0 ? values(j, i) / vmax : 0.0;
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(g, 0.0, 1.0) * 255))));
    }
}

}  // namespace brownlab
