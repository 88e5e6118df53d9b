#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "brownlab/spectral_domain.hpp"

namespace brownlab {

struct Bounds {
  double x0, x1, y0, y1;
};

// Cell-centred samples; values(j, i) sits at y-index j (ascending y) and x-index i.
struct DensityRaster {
  Bounds bounds;
  int nx = 0, ny = 0;
  Eigen::MatrixXd values;
  double cell_area() const { return (bounds.x1 - bounds.x0) / nx * (bounds.y1 - bounds.y0) / ny; }
};

// |λ|² times the density over (ρ, θ) = (log|λ|, arg λ).
struct LogRaster {
  double rho0, rho1;
  int nrho = 0, ntheta = 0;
  Eigen::MatrixXd values;  // (theta index, rho index)
};

// Density with respect to dx dy; zero outside and on the boundary.
double density(const DomainProfile& prof, cplx lambda);

// (1/2π)∫ (dφ/dδ)(v₂ − v₁) dδ over one period, computed on the θ side.
double total_mass(const DomainProfile& prof);

DensityRaster raster(const DomainProfile& prof, const Bounds& b, int nx, int ny);
LogRaster log_raster(const DomainProfile& prof, double rho0, double rho1, int nrho, int ntheta);

// A box that contains the closure of the domain with a small margin.
Bounds enclosing_bounds(const DomainProfile& prof, double margin = 0.05);

// Inverse-CDF sampler for μ_s on the θ side, with monotone cubic tables.
class ThetaSampler {
 public:
  explicit ThetaSampler(const DomainProfile& prof, int sub = 8);
  double theta(double u) const;  // u in (0, 1)

 private:
  struct Table {
    std::vector<double> F, t, slope;
    SupportPiece piece;
  };
  std::vector<Table> tables_;
  std::vector<double> piece_end_;  // cumulative mass after each piece
};

// n draws from μ_{s,τ}; draw k depends only on (seed, k).
std::vector<cplx> sample(const DomainProfile& prof, int n, std::uint64_t seed);

// Exact mass of a rectangle in twisted coordinates: v in [va, vb], δ in [da, db] (db − da ≤ 2π).
double strip_mass(const DomainProfile& prof, double va, double vb, double da, double db);

// Masses of the (v, δ) bin grid; result(i, j) is v-bin i, δ-bin j.
Eigen::MatrixXd strip_bin_masses(const DomainProfile& prof, const std::vector<double>& v_edges,
                                 const std::vector<double>& delta_edges);

void write_pgm(const std::string& path, const Eigen::MatrixXd& values);

}  // namespace brownlab
