#include "brownlab/circle_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "brownlab/errors.hpp"
#include "json.hpp"

namespace brownlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSupportTol = 1e-14;

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw ValidationError(std::string("non-finite ") + what);
}

}  // namespace

double wrap_angle(double theta) {
  double t = std::fmod(theta + std::numbers::pi, kTwoPi);
  if (t < 0) t += kTwoPi;
  t -= std::numbers::pi;
  return t >= std::numbers::pi ? t - kTwoPi : t;
}

CircleMeasure::CircleMeasure(std::vector<Atom> atoms, std::vector<DensityNode> density)
    : atoms_(std::move(atoms)), density_(std::move(density)) {
  for (auto& a : atoms_) {
    check_finite(a.angle, "atom angle");
    check_finite(a.weight, "atom weight");
    if (a.weight < 0) throw ValidationError("negative atom weight");
    a.angle = wrap_angle(a.angle);
  }
  for (auto& d : density_) {
    check_finite(d.angle, "density angle");
    check_finite(d.value, "density value");
    if (d.value < 0) throw ValidationError("negative density value");
    d.angle = wrap_angle(d.angle);
  }
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& x, const Atom& y) { return x.angle < y.angle; });
  std::sort(density_.begin(), density_.end(),
            [](const DensityNode& x, const DensityNode& y) { return x.angle < y.angle; });
  for (std::size_t k = 1; k < atoms_.size(); ++k)
    if (atoms_[k].angle == atoms_[k - 1].angle) throw ValidationError("duplicate atom angle");
  for (std::size_t k = 1; k < density_.size(); ++k)
    if (density_[k].angle == density_[k - 1].angle) throw ValidationError("duplicate density node");

  std::vector<double> ang, w;
  for (const auto& a : atoms_) {
    ang.push_back(a.angle);
    w.push_back(a.weight);
  }
  const std::size_t nd = density_.size();
  for (std::size_t k = 0; k < nd; ++k) {
    const double prev = k == 0 ? density_[nd - 1].angle - kTwoPi : density_[k - 1].angle;
    const double next = k + 1 == nd ? density_[0].angle + kTwoPi : density_[k + 1].angle;
    ang.push_back(density_[k].angle);
    w.push_back(density_[k].value * 0.5 * (next - prev) / kTwoPi);
  }
  double total = 0;
  for (double x : w) total += x;
  if (!(total > 0)) throw ValidationError("measure has zero total mass");

  const auto n = static_cast<Eigen::Index>(w.size());
  points_.resize(n);
  angles_.resize(n);
  weights_.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    angles_[k] = ang[k];
    points_[k] = std::polar(1.0, ang[k]);
    weights_[k] = w[k] / total;
  }
  for (auto& a : atoms_) a.weight /= total;
  for (auto& d : density_) d.value /= total;
}

CircleMeasure delta1() { return CircleMeasure({{0.0, 1.0}}); }

CircleMeasure four_points() {
  const double h = 0.5 * std::numbers::pi;
  return CircleMeasure({{-2 * h, 0.25}, {-h, 0.25}, {0.0, 0.25}, {h, 0.25}});
}

CircleMeasure measure_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("measure JSON: ") + e.what());
  }
  std::vector<Atom> atoms;
  std::vector<DensityNode> density;
  try {
    if (j.contains("atoms"))
      for (const auto& a : j.at("atoms")) atoms.push_back({a.at("angle").get<double>(), a.at("weight").get<double>()});
    if (j.contains("density"))
      for (const auto& d : j.at("density"))
        density.push_back({d.at("angle").get<double>(), d.at("value").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("measure JSON: ") + e.what());
  }
  if (atoms.empty() && density.empty()) throw ValidationError("measure JSON has neither atoms nor density");
  return CircleMeasure(std::move(atoms), std::move(density));
}

std::string measure_to_json(const CircleMeasure& m) {
  nlohmann::json j;
  j["atoms"] = nlohmann::json::array();
  for (const auto& a : m.atoms()) j["atoms"].push_back({{"angle", a.angle}, {"weight", a.weight}});
  if (!m.density_nodes().empty()) {
    j["density"] = nlohmann::json::array();
    for (const auto& d : m.density_nodes()) j["density"].push_back({{"angle", d.angle}, {"value", d.value}});
  }
  return j.dump();
}

bool admissible(double s, cplx tau, double slack) {
  return std::isfinite(s) && std::isfinite(tau.real()) && std::isfinite(tau.imag()) && s > 0 &&
         std::abs(tau) > 0 && std::abs(tau - s) <= s * (1 + slack) && tau.real() > 0;
}

BrownParams make_params(double s, cplx tau) {
  if (!admissible(s, tau))
    throw ValidationError("inadmissible parameters: need s > 0, tau != 0 and |tau - s| <= s");
  return {s, tau};
}

cplx herglotz(const CircleMeasure& m, cplx z) {
  const auto d = (m.points().array() - z).eval();
  if (d.abs().minCoeff() < kSupportTol) throw NumericalError(ErrorCode::SingularPoint, "herglotz on the support");
  return (m.weights().array().cast<cplx>() * (m.points().array() + z) / d).sum();
}

cplx herglotz_derivative(const CircleMeasure& m, cplx z) {
  const auto d = (m.points().array() - z).eval();
  if (d.abs().minCoeff() < kSupportTol) throw NumericalError(ErrorCode::SingularPoint, "herglotz on the support");
  return (m.weights().array().cast<cplx>() * 2.0 * m.points().array() / d.square()).sum();
}

cplx f_beta(const CircleMeasure& m, cplx beta, cplx z) {
  if (beta == 0.0) return z;
  return z * std::exp(0.5 * beta * herglotz(m, z));
}

double inverse_square_distance(const CircleMeasure& m, cplx lambda) {
  const auto d2 = (m.points().array() - lambda).abs2().eval();
  if (d2.minCoeff() < kSupportTol * kSupportTol) return std::numeric_limits<double>::infinity();
  return (m.weights().array() / d2).sum();
}

double T_fn(const CircleMeasure& m, cplx lambda) {
  const double x = std::norm(lambda);
  const double d = x - 1.0;
  double factor;
  if (std::abs(std::sqrt(x) - 1.0) < 1e-9)
    factor = 1.0 - d / 2.0 + d * d / 3.0;
  else
    factor = std::log(x) / d;
  const double integral = inverse_square_distance(m, lambda);
  if (std::isinf(integral)) return 0.0;
  return factor / integral;
}

cplx star_moment(const CircleMeasure& m, int k) {
  cplx acc = 0;
  for (Eigen::Index j = 0; j < m.size(); ++j) acc += m.weights()[j] * std::polar(1.0, k * m.angles()[j]);
  return acc;
}

}  // namespace brownlab
