#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace brownlab {

using cplx = std::complex<double>;

struct Atom {
  double angle;
  double weight;
};

struct DensityNode {
  double angle;
  double value;
};

// Probability measure on the unit circle: weighted atoms plus an optional
// absolutely continuous part given by nodes of a periodic trapezoid rule
// (density taken with respect to dθ/2π). On construction the density part is
// flattened into weighted support points and all weights are normalized, so
// every integral against the measure is a finite sum.
class CircleMeasure {
 public:
  CircleMeasure(std::vector<Atom> atoms, std::vector<DensityNode> density = {});

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<DensityNode>& density_nodes() const { return density_; }

  // Flattened support: e^{iα_k}, α_k and probability weights w_k.
  const Eigen::VectorXcd& points() const { return points_; }
  const Eigen::VectorXd& angles() const { return angles_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index size() const { return weights_.size(); }

  double total_mass() const { return weights_.sum(); }

 private:
  std::vector<Atom> atoms_;
  std::vector<DensityNode> density_;
  Eigen::VectorXcd points_;
  Eigen::VectorXd angles_;
  Eigen::VectorXd weights_;
};

CircleMeasure delta1();
CircleMeasure four_points();

// {"atoms":[{"angle":a,"weight":w}...],"density":[{"angle":a,"value":v}...]}
CircleMeasure measure_from_json(const std::string& text);
std::string measure_to_json(const CircleMeasure& m);

// Variance s > 0 and covariance τ ≠ 0 with |τ − s| ≤ s.
struct BrownParams {
  double s = 1.0;
  cplx tau = 1.0;

  double tau1() const { return tau.real(); }
  double tau2() const { return tau.imag(); }
  // |τ|²/(sτ₁), which lies in (0, 2].
  double kappa() const { return std::norm(tau) / (s * tau.real()); }
};

bool admissible(double s, cplx tau, double slack = 1e-12);
BrownParams make_params(double s, cplx tau);

double wrap_angle(double theta);  // into [−π, π)

cplx herglotz(const CircleMeasure& m, cplx z);
cplx herglotz_derivative(const CircleMeasure& m, cplx z);
cplx f_beta(const CircleMeasure& m, cplx beta, cplx z);
// ∫ |λ − ξ|^{-2} dμ₀; +∞ when λ sits on a support point.
double inverse_square_distance(const CircleMeasure& m, cplx lambda);
double T_fn(const CircleMeasure& m, cplx lambda);
cplx star_moment(const CircleMeasure& m, int k);

template <typename Derived>
auto herglotz(const CircleMeasure& m, const Eigen::DenseBase<Derived>& z) {
  return z.derived().unaryExpr([&m](cplx w) { return herglotz(m, w); });
}

template <typename Derived>
auto f_beta(const CircleMeasure& m, cplx beta, const Eigen::DenseBase<Derived>& z) {
  return z.derived().unaryExpr([&m, beta](cplx w) { return f_beta(m, beta, w); });
}

template <typename Derived>
auto T_fn(const CircleMeasure& m, const Eigen::DenseBase<Derived>& z) {
  return z.derived().unaryExpr([&m](cplx w) { return T_fn(m, w); });
}

}  // namespace brownlab
