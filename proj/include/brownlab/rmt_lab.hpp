#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "brownlab/circle_measure.hpp"
#include "brownlab/eigensolver.hpp"
#include "brownlab/spectral_domain.hpp"

namespace brownlab {

using Matrix = CMatrix<double>;
using Rng = std::mt19937_64;

enum class Scheme { Euler, Exponential };

struct SimConfig {
  int N = 300;
  int steps = 200;  // SDE steps over r ∈ [0, 1]
  int samples = 100;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::Euler;
  // Pair each path with a coupled half-resolution path and report 2F(fine) − F(coarse).
  bool richardson = false;
};

void validate(const SimConfig& cfg);

// Sample k, lane j gets its own generator; results never depend on scheduling.
Rng sample_rng(std::uint64_t seed, std::uint64_t sample, std::uint64_t lane = 0);

struct SdeParams {
  double theta0;
  double a;
  double b;
};
SdeParams sde_params(double s, cplx tau);

// GUE increment with E[(1/N)Tr ΔX²] = dt.
Matrix hermitian_increment(int N, double dt, Rng& rng);

// b_{s,τ}(1) from b(0) = I with cfg.steps steps.
Matrix simulate_b(const SimConfig& cfg, double s, cplx tau, Rng& rng);

// Paths for several τ driven by the same (ΔX, ΔY). With cfg.richardson each
// entry also gets a half-resolution path built from summed increments.
struct CoupledPath {
  Matrix fine;
  Matrix coarse;  // empty unless cfg.richardson
};
std::vector<CoupledPath> simulate_coupled(const SimConfig& cfg, double s, const std::vector<cplx>& taus, Rng& rng);

// Q·diag(atoms)·Q* with largest-remainder multiplicities and Haar Q.
Matrix initial_unitary(const CircleMeasure& m, int N, Rng& rng);
Matrix haar_unitary(int N, Rng& rng);

struct EigCloud {
  std::vector<cplx> values;
  std::vector<int> sample;
};

// Eigenvalues of U·b_{s,τ}(1) over cfg.samples independent draws.
EigCloud simulate_cloud(const SimConfig& cfg, const CircleMeasure& m, double s, cplx tau);

struct CloudReport {
  double inside_fraction = 0;    // inside the dilated strip
  double boundary_fraction = 0;  // the part of that in the dilated band only
  double chi2 = 0;
  int dof = 0;
  int bins_used = 0;
};

// Classifies against the strip [v₁, v₂] widened in v by dilation·(v₂ − v₁),
// split evenly on both ends, and bins the cloud on an nbins × nbins raster.
CloudReport eig_vs_density(const EigCloud& cloud, const DomainProfile& prof, double dilation = 0.05, int nbins = 32);

struct McValue {
  double mean = 0;
  double stderr_ = 0;
};

// (1/N) log det((UB − λ)*(UB − λ) + ε²) averaged over samples, one entry per λ.
std::vector<McValue> estimate_S_mc(const SimConfig& cfg, const CircleMeasure& m, double s, cplx tau,
                                   const std::vector<cplx>& lambdas, double eps);
McValue estimate_S_mc(const SimConfig& cfg, const CircleMeasure& m, double s, cplx tau, cplx lambda, double eps);

// (1/N) log det((A − λ)*(A − λ) + ε²) through a Cholesky factor.
double regularized_log_det(const Matrix& a, cplx lambda, double eps);

// (1/N)Tr of the word over {'+' ↦ B, '*' ↦ B*}; the empty word gives 1.
// Products of word halves are cached across the list.
std::vector<cplx> word_traces(const Matrix& b, const std::vector<std::string>& words);

struct McComplex {
  cplx mean = 0;
  double se_re = 0;
  double se_im = 0;
};

// Mean and standard error of a vector of complex functionals over cfg.samples draws.
std::vector<McComplex> monte_carlo(const SimConfig& cfg, std::size_t width,
                                   const std::function<std::vector<cplx>(std::uint64_t sample)>& draw);

// ∗-moments of b_{s,τ}(1).
std::vector<McComplex> mc_star_moments(const SimConfig& cfg, double s, cplx tau, const std::vector<std::string>& words);
// ∗-moments of independent b_{s,τ}(1), b′_{s′,τ′}(1) and of their product bb′ from
// the same draws. s′ = τ′ = 0 makes b′ the identity.
struct ProductMoments {
  std::vector<McComplex> first;
  std::vector<McComplex> product;
};
ProductMoments mc_product_moments(const SimConfig& cfg, double s, cplx tau, double s2, cplx tau2,
                                          const std::vector<std::string>& words);

}  // namespace brownlab
