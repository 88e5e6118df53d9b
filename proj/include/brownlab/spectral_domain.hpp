#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "brownlab/circle_measure.hpp"

namespace brownlab {

// Everything the construction needs at a single angle θ.
struct ThetaPoint {
  double theta = 0;
  double r = 1;       // r_s(θ)
  double I = 0;       // Im J(r_s e^{iθ})
  double R = 0;       // −(2/s) log r_s = Re J(r_s e^{iθ})
  double phi = 0;     // φ^s(θ)
  double delta = 0;   // δ^{s,τ}(θ)
  double dphi = 0;    // dφ^s/dθ
  double ddelta = 1;  // dδ^{s,τ}/dθ
  double v1 = 0;      // v-coordinate of f_{s−τ}(r_s e^{iθ})
  double v2 = 0;      // v-coordinate of f_{s−τ}(r_s^{−1} e^{iθ})
};

// A closed interval [a, b] of lifted angles on which r_s < 1.
struct SupportPiece {
  double a;
  double b;
};

// Quadrature for μ_s on the θ-side. Pieces are split at support edges and at
// near-tangency maxima of θ ↦ T(e^{iθ}); each piece carries composite
// Gauss–Legendre panels in t after θ = a + (b−a)(1 − cos πt)/2, which removes
// the square-root behaviour of r_s at the edges.
struct MuSRule {
  double s = 0;
  double theta_start = 0;  // pieces are lifted into [theta_start, theta_start + 2π)
  std::vector<SupportPiece> pieces;
  std::vector<int> panels;  // panel count per piece

  Eigen::VectorXd theta, weight;  // nodes and dθ-weights
  Eigen::VectorXd r, R, I, phi, dphi;
  Eigen::VectorXd mass;  // μ_s mass carried by each node: R φ' w / 2π
  Eigen::VectorXcd xi;   // e^{iφ^s(θ)}

  // Cumulative μ_s mass at panel boundaries, piece by piece.
  std::vector<std::vector<double>> cdf;
};

struct DomainProfile {
  std::shared_ptr<const CircleMeasure> measure;
  BrownParams params;
  Eigen::VectorXd theta, r_s, I_s, R_s, phi_s, delta, d_phi, d_delta, v1, v2;
  std::shared_ptr<const MuSRule> rule;

  Eigen::Index size() const { return theta.size(); }
};

struct SpiralCoords {
  double v;
  double delta;
};

struct VBounds {
  double v1;
  double v2;
  double theta;  // lifted so that δ^{s,τ}(theta) equals the requested δ
};

enum class Region { Inside, Outside, Boundary };

enum class InvertKind { InsideDisk, OutsideDisk, OutsideSigma };

struct InvertRegion {
  InvertKind kind = InvertKind::InsideDisk;
  const DomainProfile* profile = nullptr;  // required for OutsideSigma
};

struct BoundaryPoint {
  cplx z;
  bool outer;
};

double radial_profile(const CircleMeasure& m, double s, double theta);

ThetaPoint profile_at(const CircleMeasure& m, const BrownParams& p, double theta);
ThetaPoint profile_at(const DomainProfile& prof, double theta);

std::shared_ptr<const MuSRule> build_mu_s_rule(const CircleMeasure& m, double s, int total_panels = 256);

DomainProfile build_profile(const CircleMeasure& m, const BrownParams& p, int n,
                            std::shared_ptr<const MuSRule> rule = nullptr);

SpiralCoords to_spiral(const BrownParams& p, cplx lambda);
cplx from_spiral(const BrownParams& p, SpiralCoords c);

double theta_of_delta(const DomainProfile& prof, double delta);
double theta_of_phi(const DomainProfile& prof, double phi);
VBounds v_bounds(const DomainProfile& prof, double delta);

Region contains(const DomainProfile& prof, cplx lambda, double tol = 1e-9);

double mu_s_density(const DomainProfile& prof, double phi);
// μ_s-mass of {e^{iφ^s(t)} : theta_start ≤ t ≤ theta}; theta is lifted into the rule's window.
double mu_s_cdf(const DomainProfile& prof, double theta);

// ∫ f(profile_at(θ)) dθ over [a, b] ∩ supp, with b − a ≤ 2π; f should vanish off the support.
double integrate_support(const DomainProfile& prof, double a, double b,
                         const std::function<double(const ThetaPoint&)>& f, double tol = 1e-10);

cplx invert_f_beta(const CircleMeasure& m, cplx beta, cplx w, const InvertRegion& region);

std::vector<BoundaryPoint> boundary_polyline(const DomainProfile& prof, int n);

// Both sides of the bound |(e^{w1}−e^{w2})/(w1−w2)|² ≤ Π (e^{2Re w}−1)/(2Re w).
struct DiffQuotient {
  double lhs;
  double rhs;
};
DiffQuotient diff_quotient(cplx w1, cplx w2);

}  // namespace brownlab
