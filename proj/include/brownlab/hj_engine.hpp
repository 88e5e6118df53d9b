#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "brownlab/spectral_domain.hpp"

namespace brownlab {

struct CharState {
  cplx lambda0 = 0;
  double eps0 = 0;
  cplx p_lambda0 = 0;
  double p_eps0 = 0;
  cplx lambda = 0;
  double eps = 0;
  cplx p_lambda = 0;
  double p_eps = 0;
  double H0 = 0;  // real part of the complex Hamiltonian at the initial point
};

struct PotentialSample {
  double s = 0;
  cplx tau = 0;
  cplx lambda = 0;
  double eps = 0;
  double S_value = 0;
  cplx grad_lambda = 0;  // ∂S/∂λ = ½(∂_x − i∂_y)S
  double grad_eps = 0;
  CharState state;
};

// Integrals against μ_s at a point (λ₀, ε₀). A = ε₀p_ε + 2λ₀p_λ − 1, and
// A_rho, A_theta, A_eta are its derivatives in (log|λ₀|, arg λ₀, log ε₀).
struct InitialSums {
  double S0 = 0;
  cplx p_lambda0 = 0;
  double p_eps0 = 0;
  cplx A = 0;
  cplx A_rho = 0, A_theta = 0, A_eta = 0;
};

// Everything that depends only on (μ₀, s): the μ_s quadrature and the shooting solver.
class PotentialSolver {
 public:
  PotentialSolver(const CircleMeasure& m, double s, int panels = 256);

  double s() const { return s_; }
  const CircleMeasure& measure() const { return *prof_.measure; }
  const DomainProfile& mu_s_profile() const { return prof_; }  // profile at (s, s)

  // Quadrature with local refinement where |ξ − λ₀|² + ε₀² is small.
  InitialSums initial_sums(cplx lambda0, double eps0, bool derivatives = false) const;

  // S(s, τ, λ, ε) by Newton shooting; warm, if given, seeds the first attempt.
  PotentialSample evaluate(cplx tau, cplx lambda, double eps, const CharState* warm = nullptr) const;

 private:
  bool newton(cplx tau, cplx lambda, double eps, double& rho0, double& th0, double& eta) const;

  double s_;
  DomainProfile prof_;
};

// (p_{λ,0}, p_{ε,0}); ε₀ = 0 is allowed off the support of μ_s and uses χ_s.
std::pair<cplx, double> initial_momenta(const PotentialSolver& solver, cplx lambda0, double eps0);

CharState initial_state(const PotentialSolver& solver, cplx lambda0, double eps0);
CharState transport(const CharState& initial, cplx tau);

// Real-time Hamiltonian −τ₁/4 + Re[(τ/4)(εp_ε + 2λp_λ − 1)²].
double hamiltonian(cplx tau, cplx lambda, double eps, cplx p_lambda, double p_eps);

PotentialSample evaluate_S(const CircleMeasure& m, const BrownParams& p, cplx lambda, double eps);

// ∂S₀/∂λ at λ outside the closure of Σ_{s,τ}; prof is the (s, τ) profile.
cplx s0_outside_gradient(const DomainProfile& prof, cplx lambda);
// S₀(s, τ, λ) outside, from the ε₀ = 0 characteristics.
double s0_outside_value(const PotentialSolver& solver, const DomainProfile& prof, cplx lambda);

struct InsideGradients {
  double dS_dv;
  double dS_ddelta;
};
InsideGradients s0_inside_gradients(const DomainProfile& prof, cplx lambda);

// Solvers keyed by s, built on first use; safe for concurrent callers.
class SolverCache {
 public:
  explicit SolverCache(CircleMeasure m, int panels = 256) : m_(std::move(m)), panels_(panels) {}
  std::shared_ptr<const PotentialSolver> get(double s);

 private:
  CircleMeasure m_;
  int panels_;
  std::mutex mutex_;
  std::map<double, std::shared_ptr<const PotentialSolver>> solvers_;
};

struct ResidualParts {
  cplx lhs;
  cplx rhs;
  double residual() const { return std::abs(lhs - rhs); }
};

// Centered differences of S in τ₁, τ₂, x, y, ε assembled into the τ-PDE.
ResidualParts pde_residual_tau(const PotentialSolver& solver, cplx tau, cplx lambda, double eps, double h);

// Right-hand side of the r-PDE from the partial derivatives of P.
double rpde_rhs(cplx tau_prime, double s_prime, cplx lambda, double eps, cplx P_lambda, double P_eps);
// The s = τ = 0, s′ = τ′ = 1 specialisation written with P_x and P_y.
double rpde_simplified_rhs(cplx lambda, double eps, double P_x, double P_y, double P_eps);

struct RPath {
  double s;
  cplx tau;
  double s_prime;
  cplx tau_prime;
  double r;
};
// Residual of the r-PDE for P(r, λ, ε) = S(s + r s′, τ + r τ′, λ, ε).
ResidualParts pde_residual_r(SolverCache& cache, const RPath& path, cplx lambda, double eps, double h);

struct BlowupMomenta {
  double p_rho;
  double p_theta;
  double eps_p_eps;  // always 0 in the limit
};
// Limits as ε₀ → 0 along λ₀ = (1 + cε₀)e^{iφ}; prof is any profile with the right s.
BlowupMomenta blowup_momenta(const DomainProfile& prof, double phi, double c);
// λ(τ) reached from those limits; lies on the spiral segment at δ-coordinate δ(θ(φ)).
cplx blowup_lambda(const DomainProfile& prof, double phi, double c);

}  // namespace brownlab
