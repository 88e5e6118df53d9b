#include "brownlab/rmt_lab.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <unsupported/Eigen/MatrixFunctions>

#include "brownlab/brown_measure.hpp"
#include "brownlab/errors.hpp"
#include "brownlab/parallel.hpp"
#include "brownlab/rng.hpp"

namespace brownlab {

namespace {

void check_sde_params(double s, cplx tau) {
  if (!(s > 0) || !std::isfinite(s) || !std::isfinite(tau.real()) || !std::isfinite(tau.imag()))
    throw ValidationError("simulation needs s > 0 and finite tau");
  if (std::abs(tau - s) > s * (1 + 1e-12)) throw ValidationError("simulation needs |tau - s| <= s");
}

// One step b ← b·(I + iΔW − ½(s−τ)dt) or b ← b·exp(iΔW).
void advance(Matrix& b, const Matrix& dW, cplx drift_dt, Scheme scheme, Matrix& work) {
  const cplx i(0, 1);
  if (scheme == Scheme::Euler) {
    work = i * dW;
    work.diagonal().array() -= drift_dt;
    Matrix next = b;
    next.noalias() += b * work;
    b.swap(next);
  } else {
    work = (i * dW).exp();
    Matrix next(b.rows(), b.cols());
    next.noalias() = b * work;
    b.swap(next);
  }
}

McComplex summarize(const std::vector<std::vector<cplx>>& rows, std::size_t col) {
  const double n = static_cast<double>(rows.size());
  cplx mean = 0;
  for (const auto& r : rows) mean += r[col];
  mean /= n;
  double vr = 0, vi = 0;
  for (const auto& r : rows) {
    vr += std::pow(r[col].real() - mean.real(), 2);
    vi += std::pow(r[col].imag() - mean.imag(), 2);
  }
  const double denom = n > 1 ? (n - 1) * n : 1.0;
  return {mean, std::sqrt(vr / denom), std::sqrt(vi / denom)};
}

}  // namespace

void validate(const SimConfig& cfg) {
  if (cfg.N < 2) throw ValidationError("simulation needs N >= 2");
  if (cfg.steps < 10) throw ValidationError("simulation needs steps >= 10");
  if (cfg.samples < 1) throw ValidationError("simulation needs samples >= 1");
  if (cfg.richardson && cfg.steps % 2 != 0) throw ValidationError("Richardson extrapolation needs an even step count");
}

Rng sample_rng(std::uint64_t seed, std::uint64_t sample, std::uint64_t lane) {
  return Rng(stream_key(seed, sample, lane));
}

SdeParams sde_params(double s, cplx tau) {
  check_sde_params(s, tau);
  const double d = std::abs(tau - s);
  const double theta0 = d > 0 ? 0.5 * std::arg(cplx(s) - tau) : 0.0;
  return {theta0, std::sqrt((s + d) / 2), std::sqrt(std::max(0.0, (s - d) / 2))};
}

Matrix hermitian_increment(int N, double dt, Rng& rng) {
  if (!(dt > 0)) throw ValidationError("hermitian_increment needs dt > 0");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sd_diag = std::sqrt(dt / N), sd_off = std::sqrt(dt / (2.0 * N));
  Matrix x(N, N);
  for (int j = 0; j < N; ++j) {
    x(j, j) = sd_diag * gauss(rng);
    for (int i = j + 1; i < N; ++i) {
      const double re = gauss(rng), im = gauss(rng);
      x(i, j) = sd_off * cplx(re, im);
      x(j, i) = std::conj(x(i, j));
    }
  }
  return x;
}

std::vector<CoupledPath> simulate_coupled(const SimConfig& cfg, double s, const std::vector<cplx>& taus, Rng& rng) {
  validate(cfg);
  const int N = cfg.N;
  const double dt = 1.0 / cfg.steps;
  struct Coef {
    cplx alpha, beta, drift;  // ΔW = αΔX + βΔY
  };
  std::vector<Coef> coef;
  for (cplx tau : taus) {
    const SdeParams p = sde_params(s, tau);
    const cplx rot = std::polar(1.0, p.theta0);
    coef.push_back({rot * p.a, cplx(0, 1) * rot * p.b, 0.5 * (s - tau)});
  }
  std::vector<CoupledPath> out(taus.size());
  for (auto& path : out) {
    path.fine = Matrix::Identity(N, N);
    if (cfg.richardson) path.coarse = Matrix::Identity(N, N);
  }
  Matrix work, dW, sumX, sumY;
  for (int k = 0; k < cfg.steps; ++k) {
    const Matrix dX = hermitian_increment(N, dt, rng);
    const Matrix dY = hermitian_increment(N, dt, rng);
    for (std::size_t t = 0; t < taus.size(); ++t) {
      dW = coef[t].alpha * dX + coef[t].beta * dY;
      advance(out[t].fine, dW, coef[t].drift * dt, cfg.scheme, work);
    }
    if (!cfg.richardson) continue;
    if (k % 2 == 0) {
      sumX = dX;
      sumY = dY;
      continue;
    }
    sumX += dX;
    sumY += dY;
    for (std::size_t t = 0; t < taus.size(); ++t) {
      dW = coef[t].alpha * sumX + coef[t].beta * sumY;
      advance(out[t].coarse, dW, coef[t].drift * (2 * dt), cfg.scheme, work);
    }
  }
  return out;
}

Matrix simulate_b(const SimConfig& cfg, double s, cplx tau, Rng& rng) {
  SimConfig plain = cfg;
  plain.richardson = false;
  return std::move(simulate_coupled(plain, s, {tau}, rng)[0].fine);
}

Matrix haar_unitary(int N, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  Matrix g(N, N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) g(i, j) = cplx(gauss(rng), gauss(rng));
  const Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < N; ++j) {
    const double a = std::abs(r(j, j));
    if (a > 0) q.col(j) *= r(j, j) / a;
  }
  return q;
}

Matrix initial_unitary(const CircleMeasure& m, int N, Rng& rng) {
  const Eigen::Index k = m.size();
  std::vector<int> mult(static_cast<std::size_t>(k));
  std::vector<std::pair<double, Eigen::Index>> rem;
  int used = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double x = m.weights()[j] / m.total_mass() * N;
    mult[static_cast<std::size_t>(j)] = static_cast<int>(std::floor(x));
    used += mult[static_cast<std::size_t>(j)];
    rem.emplace_back(x - std::floor(x), j);
  }
  // Largest remainders first; ties go to the earlier support point.
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; used < N && j < rem.size(); ++j, ++used) ++mult[static_cast<std::size_t>(rem[j].second)];
  Eigen::VectorXcd d(N);
  int pos = 0;
  for (Eigen::Index j = 0; j < k; ++j)
    for (int c = 0; c < mult[static_cast<std::size_t>(j)]; ++c) d(pos++) = m.points()[j];
  const Matrix q = haar_unitary(N, rng);
  return q * d.asDiagonal() * q.adjoint();
}

EigCloud simulate_cloud(const SimConfig& cfg, const CircleMeasure& m, double s, cplx tau) {
  validate(cfg);
  std::vector<std::vector<cplx>> per(static_cast<std::size_t>(cfg.samples));
  parallel_for(per.size(), [&](std::size_t k) {
    Rng rng_b = sample_rng(cfg.seed, k, 0), rng_u = sample_rng(cfg.seed, k, 1);
    const Matrix u = initial_unitary(m, cfg.N, rng_u);
    const Matrix b = simulate_b(cfg, s, tau, rng_b);
    per[k] = eigenvalues<double>(u * b);
  });
  EigCloud cloud;
  for (std::size_t k = 0; k < per.size(); ++k)
    for (cplx z : per[k]) {
      cloud.values.push_back(z);
      cloud.sample.push_back(static_cast<int>(k));
    }
  return cloud;
}

CloudReport eig_vs_density(const EigCloud& cloud, const DomainProfile& prof, double dilation, int nbins) {
  if (cloud.values.empty()) throw ValidationError("eig_vs_density needs a nonempty cloud");
  CloudReport rep;
  double inside = 0, boundary = 0;
  for (cplx z : cloud.values) {
    if (z == 0.0) continue;
    const SpiralCoords c = to_spiral(prof.params, z);
    const ThetaPoint q = profile_at(prof, theta_of_delta(prof, c.delta));
    const double pad = 0.5 * dilation * (q.v2 - q.v1);
    if (c.v >= q.v1 && c.v <= q.v2) inside += 1;
    else if (c.v >= q.v1 - pad && c.v <= q.v2 + pad) boundary += 1;
  }
  const double n = static_cast<double>(cloud.values.size());
  rep.inside_fraction = (inside + boundary) / n;
  rep.boundary_fraction = boundary / n;

  const Bounds b = enclosing_bounds(prof);
  const DensityRaster ras = raster(prof, b, nbins, nbins);
  Eigen::MatrixXd obs = Eigen::MatrixXd::Zero(nbins, nbins);
  double stray = 0;
  for (cplx z : cloud.values) {
    const int i = static_cast<int>(std::floor((z.real() - b.x0) / (b.x1 - b.x0) * nbins));
    const int j = static_cast<int>(std::floor((z.imag() - b.y0) / (b.y1 - b.y0) * nbins));
    if (i < 0 || j < 0 || i >= nbins || j >= nbins) stray += 1;
    else obs(j, i) += 1;
  }
  const Eigen::MatrixXd expected = n * ras.cell_area() * ras.values;
  double rest_o = stray, rest_e = std::max(0.0, n - expected.sum());
  for (int j = 0; j < nbins; ++j)
    for (int i = 0; i < nbins; ++i) {
      const double e = expected(j, i), o = obs(j, i);
      if (e >= 5) {
        rep.chi2 += (o - e) * (o - e) / e;
        ++rep.bins_used;
      } else {
        rest_o += o;
        rest_e += e;
      }
    }
  if (rest_e > 0) {
    rep.chi2 += (rest_o - rest_e) * (rest_o - rest_e) / rest_e;
    ++rep.bins_used;
  }
  rep.dof = std::max(0, rep.bins_used - 1);
  return rep;
}

double regularized_log_det(const Matrix& a, cplx lambda, double eps) {
  Matrix shifted = a;
  shifted.diagonal().array() -= lambda;
  Matrix g(a.rows(), a.cols());
  g.noalias() = shifted.adjoint() * shifted;
  g.diagonal().array() += eps * eps;
  const Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) throw NumericalError(ErrorCode::CholeskyFailure, "Gram matrix not positive definite");
  const auto diag = llt.matrixLLT().diagonal();
  double acc = 0;
  for (Eigen::Index k = 0; k < diag.size(); ++k) {
    const double d = diag(k).real();
    if (!(d > 0)) throw NumericalError(ErrorCode::CholeskyFailure, "nonpositive Cholesky pivot");
    acc += std::log(d);
  }
  return 2.0 * acc / static_cast<double>(a.rows());
}

std::vector<McComplex> monte_carlo(const SimConfig& cfg, std::size_t width,
                                   const std::function<std::vector<cplx>(std::uint64_t)>& draw) {
  validate(cfg);
  std::vector<std::vector<cplx>> rows(static_cast<std::size_t>(cfg.samples));
  parallel_for(rows.size(), [&](std::size_t k) {
    rows[k] = draw(k);
    if (rows[k].size() != width) throw ValidationError("monte_carlo draw returned the wrong width");
  });
  std::vector<McComplex> out(width);
  for (std::size_t c = 0; c < width; ++c) out[c] = summarize(rows, c);
  return out;
}

std::vector<McValue> estimate_S_mc(const SimConfig& cfg, const CircleMeasure& m, double s, cplx tau,
                                   const std::vector<cplx>& lambdas, double eps) {
  if (!(eps > 0)) throw ValidationError("estimate_S_mc needs eps > 0");
  const auto stats = monte_carlo(cfg, lambdas.size(), [&](std::uint64_t k) {
    Rng rng_b = sample_rng(cfg.seed, k, 0), rng_u = sample_rng(cfg.seed, k, 1);
    const Matrix u = initial_unitary(m, cfg.N, rng_u);
    const auto paths = simulate_coupled(cfg, s, {tau}, rng_b);
    const Matrix fine = u * paths[0].fine;
    Matrix coarse;
    if (cfg.richardson) coarse = u * paths[0].coarse;
    std::vector<cplx> vals;
    for (cplx lambda : lambdas) {
      double x = regularized_log_det(fine, lambda, eps);
      if (cfg.richardson) x = 2 * x - regularized_log_det(coarse, lambda, eps);
      vals.emplace_back(x);
    }
    return vals;
  });
  std::vector<McValue> out;
  for (const auto& st : stats) out.push_back({st.mean.real(), st.se_re});
  return out;
}

McValue estimate_S_mc(const SimConfig& cfg, const CircleMeasure& m, double s, cplx tau, cplx lambda, double eps) {
  return estimate_S_mc(cfg, m, s, tau, std::vector<cplx>{lambda}, eps)[0];
}

std::vector<cplx> word_traces(const Matrix& b, const std::vector<std::string>& words) {
  std::map<std::string, Matrix> cache;
  const Matrix b_star = b.adjoint();
  const double n = static_cast<double>(b.rows());
  std::function<const Matrix&(const std::string&)> product = [&](const std::string& w) -> const Matrix& {
    auto it = cache.find(w);
    if (it != cache.end()) return it->second;
    Matrix p;
    if (w.size() == 1) {
      p = w[0] == '*' ? b_star : b;
    } else {
      const std::size_t h = (w.size() + 1) / 2;
      const std::string left = w.substr(0, h), right = w.substr(h);
      const Matrix& l = product(left);
      const Matrix& r = product(right);
      p.noalias() = l * r;
    }
    return cache.emplace(w, std::move(p)).first->second;
  };
  std::vector<cplx> out;
  out.reserve(words.size());
  for (const std::string& w : words) {
    for (char c : w)
      if (c != '+' && c != '*') throw ValidationError("words use '+' and '*' only");
    if (w.empty()) {
      out.emplace_back(1.0);
    } else if (w.size() == 1) {
      out.push_back((w[0] == '*' ? b_star : b).trace() / n);
    } else {
      const std::size_t h = (w.size() + 1) / 2;
      const Matrix& l = product(w.substr(0, h));
      const Matrix& r = product(w.substr(h));
      // tr(LR) without forming the product.
      out.push_back(l.cwiseProduct(r.transpose()).sum() / n);
    }
  }
  return out;
}

std::vector<McComplex> mc_star_moments(const SimConfig& cfg, double s, cplx tau,
                                       const std::vector<std::string>& words) {
  return monte_carlo(cfg, words.size(), [&](std::uint64_t k) {
    Rng rng = sample_rng(cfg.seed, k, 0);
    const auto paths = simulate_coupled(cfg, s, {tau}, rng);
    std::vector<cplx> t = word_traces(paths[0].fine, words);
    if (cfg.richardson) {
      const std::vector<cplx> c = word_traces(paths[0].coarse, words);
      for (std::size_t j = 0; j < t.size(); ++j) t[j] = 2.0 * t[j] - c[j];
    }
    return t;
  });
}

ProductMoments mc_product_moments(const SimConfig& cfg, double s, cplx tau, double s2, cplx tau2,
                                  const std::vector<std::string>& words) {
  const bool trivial = s2 == 0 && tau2 == 0.0;
  const std::size_t w = words.size();
  const auto stats = monte_carlo(cfg, 2 * w, [&](std::uint64_t k) {
    Rng rng1 = sample_rng(cfg.seed, k, 0), rng2 = sample_rng(cfg.seed, k, 2);
    const auto p1 = simulate_coupled(cfg, s, {tau}, rng1);
    std::vector<CoupledPath> p2;
    if (!trivial) p2 = simulate_coupled(cfg, s2, {tau2}, rng2);
    auto traces = [&](const Matrix& b1, const Matrix* b2) {
      std::vector<cplx> t = word_traces(b1, words);
      const std::vector<cplx> q = b2 ? word_traces(b1 * *b2, words) : t;
      t.insert(t.end(), q.begin(), q.end());
      return t;
    };
    std::vector<cplx> t = traces(p1[0].fine, trivial ? nullptr : &p2[0].fine);
    if (cfg.richardson) {
      const std::vector<cplx> c = traces(p1[0].coarse, trivial ? nullptr : &p2[0].coarse);
      for (std::size_t j = 0; j < t.size(); ++j) t[j] = 2.0 * t[j] - c[j];
    }
    return t;
  });
  return {std::vector<McComplex>(stats.begin(), stats.begin() + static_cast<std::ptrdiff_t>(w)),
          std::vector<McComplex>(stats.begin() + static_cast<std::ptrdiff_t>(w), stats.end())};
}

}  // namespace brownlab
