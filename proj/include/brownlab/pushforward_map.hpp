#pragma once

#include <cstdint>
#include <vector>

#include "brownlab/spectral_domain.hpp"

namespace brownlab {

// Profiles at (s, s) and (s, τ) sharing μ₀, s and the μ_s quadrature.
struct PushMap {
  DomainProfile source;
  DomainProfile target;
};

PushMap make_push_map(const CircleMeasure& m, double s, cplx tau, int n = 1024,
                      std::shared_ptr<const MuSRule> rule = nullptr);

// (r/r_s(θ))^{τ/s}·f_{s−τ}(r_s(θ)e^{iθ}) with the power taken through real logs.
cplx phi_stau(const PushMap& map, cplx lambda);
cplx phi_stau_inverse(const PushMap& map, cplx lambda);

// e^{iφ^s(θ)} for λ = re^{iθ} in the closure of Σ_s.
cplx phi_s_limit(const DomainProfile& source, cplx lambda);

struct PushReport {
  int n = 0;
  int bins_used = 0;
  double chi2 = 0;
  int dof = 0;
  double pvalue = 0;
  double sup_discrepancy = 0;  // max over bins of |observed − expected| as a fraction of n
  bool touches_contact = false;  // some used bin meets a point where r_s touches 1 without leaving it
};

// Chi-square of points against μ_{s,τ} on a (v, δ) grid of the target profile.
// Bins with expected count below 5 are pooled into one remainder cell.
PushReport chi_square_vdelta(const DomainProfile& target, const std::vector<cplx>& points, int nv = 20,
                             int ndelta = 40);

// Samples μ_{s,s}, maps through Φ_{s,τ} and tests against μ_{s,τ}.
PushReport verify_pushforward(const PushMap& map, int n, std::uint64_t seed, int nv = 20, int ndelta = 40);

// Samples μ_{s,τ₁}, maps through Φ_{s,τ₂}∘Φ_{s,τ₁}^{-1} and tests against μ_{s,τ₂}.
PushReport verify_composite(const PushMap& first, const PushMap& second, int n, std::uint64_t seed, int nv = 20,
                            int ndelta = 40);

struct PhiHistogram {
  std::vector<double> edges;  // φ bin edges on [−π, π]
  std::vector<double> observed;
  std::vector<double> expected;  // counts, n·μ_s(bin)
  double max_z = 0;              // max |O − E|/√(E(1 − E/n))
};

// Histogram of phi_s_limit over μ_{s,s} samples against μ_s.
PhiHistogram phi_limit_histogram(const DomainProfile& source, int n, int bins, std::uint64_t seed);

// μ_s mass of the arc of angles [φa, φb] (φb − φa ≤ 2π).
double mu_s_arc_mass(const DomainProfile& prof, double phi_a, double phi_b);

double chi_square_pvalue(double chi2, int dof);

}  // namespace brownlab
