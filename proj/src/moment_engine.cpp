#include "brownlab/moment_engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "brownlab/errors.hpp"
#include "brownlab/parallel.hpp"

namespace brownlab {

namespace {

struct Term {
  cplx coef;
  std::string a, b;  // tr[a]·tr[b]; an empty string stands for 1
};

cplx tau_of(char letter, cplx tau) { return letter == '*' ? std::conj(tau) : tau; }

// Terms of the r-evolution for b_{S,τ}, with S = s + s′.
std::vector<Term> hierarchy_terms(const std::string& w, double S, cplx tau) {
  const std::size_t n = w.size();
  std::vector<Term> out;
  if (n == 0) return out;
  cplx drift = 0;
  for (char c : w) drift += S - tau_of(c, tau);
  out.push_back({-0.5 * drift, w, ""});
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j + 1; k < n; ++k) {
      const char ej = w[j], ek = w[k];
      if (ej == ek) {
        out.push_back({-(S - tau_of(ej, tau)), w.substr(0, j + 1) + w.substr(k + 1), w.substr(j + 1, k - j)});
      } else if (ej == '+') {
        out.push_back({S, w.substr(0, j + 1) + w.substr(k), w.substr(j + 1, k - j - 1)});
      } else {
        out.push_back({S, w.substr(0, j) + w.substr(k + 1), w.substr(j, k - j + 1)});
      }
    }
  return out;
}

void check_params(double s, cplx tau) {
  if (!(s > 0) || !std::isfinite(s)) throw ValidationError("moment hierarchy needs s > 0");
  if (!std::isfinite(tau.real()) || !std::isfinite(tau.imag()) || std::abs(tau - s) > s * (1 + 1e-12))
    throw ValidationError("moment hierarchy needs |tau - s| <= s");
}

struct Compiled {
  struct Entry {
    cplx coef;
    Eigen::Index a, b;  // −1 stands for the empty word
  };
  std::vector<std::vector<Entry>> rows;
};

Eigen::VectorXcd eval_rhs(const Compiled& c, const Eigen::VectorXcd& y) {
  Eigen::VectorXcd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    cplx acc = 0;
    for (const auto& e : c.rows[static_cast<std::size_t>(i)])
      acc += e.coef * (e.a < 0 ? cplx(1) : y(e.a)) * (e.b < 0 ? cplx(1) : y(e.b));
    out(i) = acc;
  }
  return out;
}

// steps·sub RK4 steps, keeping every sub-th state.
Eigen::MatrixXcd rk4(const Compiled& c, Eigen::Index nwords, double r_max, int steps, int sub) {
  Eigen::MatrixXcd traj(nwords, steps + 1);
  Eigen::VectorXcd y = Eigen::VectorXcd::Ones(nwords);
  traj.col(0) = y;
  const double h = r_max / (static_cast<double>(steps) * sub);
  for (int k = 0; k < steps; ++k) {
    for (int j = 0; j < sub; ++j) {
      const Eigen::VectorXcd k1 = eval_rhs(c, y);
      const Eigen::VectorXcd k2 = eval_rhs(c, y + 0.5 * h * k1);
      const Eigen::VectorXcd k3 = eval_rhs(c, y + 0.5 * h * k2);
      const Eigen::VectorXcd k4 = eval_rhs(c, y + h * k3);
      y += (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    traj.col(k + 1) = y;
  }
  return traj;
}

// Largest |a − b| relative to max(1, |b|).
double scaled_difference(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return ((a - b).cwiseAbs().array() / b.cwiseAbs().array().max(1.0)).maxCoeff();
}

constexpr int kMaxSubsteps = 64;

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

StarWord::StarWord(std::string letters) : letters_(std::move(letters)) {
  for (char c : letters_)
    if (c != '+' && c != '*') throw ValidationError("word letters must be '+' or '*'");
}

StarWord StarWord::parse(const std::string& text) {
  if (text.find_first_not_of("+*") == std::string::npos) return StarWord(text);
  std::string out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok == "plain") out += '+';
    else if (tok == "star") out += '*';
    else throw ValidationError("unknown word letter '" + tok + "'");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return StarWord(out);
}

StarWord StarWord::canonical() const {
  std::string best = letters_;
  for (std::size_t k = 1; k < letters_.size(); ++k) {
    std::string rot = letters_.substr(k) + letters_.substr(0, k);
    if (rot < best) best = std::move(rot);
  }
  return StarWord(best);
}

StarWord StarWord::adjoint() const {
  std::string out(letters_.rbegin(), letters_.rend());
  for (char& c : out) c = c == '+' ? '*' : '+';
  return StarWord(out);
}

std::vector<StarWord> canonical_words(int max_len) {
  if (max_len < 0 || max_len > 10) throw ValidationError("word length must lie in [0, 10]");
  std::vector<StarWord> out{StarWord()};
  for (int n = 1; n <= max_len; ++n) {
    std::set<std::string> seen;
    for (unsigned bits = 0; bits < (1u << n); ++bits) {
      std::string w(static_cast<std::size_t>(n), '+');
      for (int j = 0; j < n; ++j)
        if (bits >> j & 1u) w[static_cast<std::size_t>(j)] = '*';
      seen.insert(StarWord(w).canonical().letters());
    }
    for (const auto& w : seen) out.emplace_back(w);
  }
  return out;
}

cplx moment_rhs(const StarWord& w, const MomentSnapshot& snapshot, double s, double s_prime, cplx tau) {
  auto lookup = [&](const std::string& x) -> cplx {
    if (x.empty()) return 1.0;
    const auto it = snapshot.find(StarWord(x).canonical().letters());
    if (it == snapshot.end()) throw NumericalError(ErrorCode::MissingLowerWord, "snapshot lacks word '" + x + "'");
    return it->second;
  };
  cplx acc = 0;
  for (const Term& t : hierarchy_terms(w.letters(), s + s_prime, tau)) acc += t.coef * lookup(t.a) * lookup(t.b);
  return acc;
}

cplx MomentTable::at(const StarWord& w, std::size_t k) const {
  if (w.empty()) return 1.0;
  const auto it = index_.find(w.canonical().letters());
  if (it == index_.end()) throw NumericalError(ErrorCode::MissingLowerWord, "table lacks word '" + w.letters() + "'");
  return values(it->second, static_cast<Eigen::Index>(k));
}

MomentSnapshot MomentTable::snapshot(std::size_t k) const {
  MomentSnapshot snap;
  for (const auto& [w, i] : index_) snap[w] = values(i, static_cast<Eigen::Index>(k));
  return snap;
}

MomentTable solve_hierarchy(double s, cplx tau, double r_max, int max_len, int steps) {
  check_params(s, tau);
  if (!(r_max > 0) || !std::isfinite(r_max)) throw ValidationError("r_max must be positive");
  if (steps < 1) throw ValidationError("steps must be positive");
  MomentTable table;
  table.s = s;
  table.tau = tau;
  table.r_max = r_max;
  for (const StarWord& w : canonical_words(max_len))
    if (!w.empty()) {
      table.index_[w.letters()] = static_cast<Eigen::Index>(table.words.size());
      table.words.push_back(w);
    }
  Compiled c;
  for (const StarWord& w : table.words) {
    std::vector<Compiled::Entry> row;
    for (const Term& t : hierarchy_terms(w.letters(), s, tau)) {
      auto idx = [&](const std::string& x) -> Eigen::Index {
        return x.empty() ? -1 : table.index_.at(StarWord(x).canonical().letters());
      };
      row.push_back({t.coef, idx(t.a), idx(t.b)});
    }
    c.rows.push_back(std::move(row));
  }
  const auto nw = static_cast<Eigen::Index>(table.words.size());
  // Substeps double until a halving changes no value by more than 1e−8·max(1, |value|).
  int sub = 1;
  Eigen::MatrixXcd coarse = rk4(c, nw, r_max, steps, sub);
  Eigen::MatrixXcd fine = rk4(c, nw, r_max, steps, 2 * sub);
  table.step_error = scaled_difference(coarse, fine);
  while (table.step_error > 1e-8 && 2 * sub < kMaxSubsteps) {
    sub *= 2;
    coarse = std::move(fine);
    fine = rk4(c, nw, r_max, steps, 2 * sub);
    table.step_error = scaled_difference(coarse, fine);
  }
  table.values = std::move(fine);
  if (table.step_error > 1e-8)
    throw NumericalError(ErrorCode::StepTooLarge,
                         "step-halving difference " + std::to_string(table.step_error) + " exceeds 1e-8");
  table.r.resize(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) table.r[static_cast<std::size_t>(k)] = r_max * k / steps;
  return table;
}

double unitary_bm_moment(double t, int n) {
  n = std::abs(n);
  if (n == 0) return 1.0;
  double acc = 0, fact = 1;
  for (int k = 0; k < n; ++k) {
    if (k > 0) fact *= k;
    acc += std::pow(-t, k) / fact * std::pow(n, k - 1) * binomial(n, k + 1);
  }
  return std::exp(-n * t / 2) * acc;
}

std::vector<StarWord> comparison_words(int max_len) {
  std::vector<StarWord> out;
  for (const StarWord& w : canonical_words(max_len)) {
    if (w.empty()) continue;
    if (w.adjoint().canonical().letters() < w.letters()) continue;
    out.push_back(w);
  }
  return out;
}

MomentComparison compare_moments(const MomentTable& table, const std::vector<StarWord>& words,
                                 const std::vector<McComplex>& observed) {
  if (observed.size() != words.size()) throw ValidationError("compare_moments needs one estimate per word");
  MomentComparison cmp;
  cmp.words = words;
  cmp.observed = observed;
  auto zpart = [](double diff, double se) {
    if (se > 0) return std::abs(diff) / se;
    return std::abs(diff) < 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  for (std::size_t k = 0; k < words.size(); ++k) {
    const cplx p = table.final_value(words[k]);
    const cplx d = observed[k].mean - p;
    // A word that is a rotation of its adjoint has a real trace; the imaginary
    // part of the estimate is rounding, with a standard error to match.
    const bool real_trace = words[k].adjoint().canonical() == words[k].canonical();
    double z = zpart(d.real(), observed[k].se_re);
    if (!real_trace) z = std::max(z, zpart(d.imag(), observed[k].se_im));
    cmp.predicted.push_back(p);
    cmp.z.push_back(z);
    cmp.max_z = std::max(cmp.max_z, z);
  }
  return cmp;
}

FactorizationReport factorization_check(double s, cplx tau, double s2, cplx tau2, int max_len,
                                        const SimConfig& cfg) {
  check_params(s, tau);
  const bool trivial = s2 == 0 && tau2 == 0.0;
  if (!trivial) check_params(s2, tau2);
  const std::vector<StarWord> words = comparison_words(max_len);
  std::vector<std::string> letters;
  for (const auto& w : words) letters.push_back(w.letters());
  const ProductMoments mc = mc_product_moments(cfg, s, tau, s2, tau2, letters);
  FactorizationReport rep;
  rep.first = compare_moments(solve_hierarchy(s, tau, 1.0, max_len), words, mc.first);
  rep.product = compare_moments(solve_hierarchy(s + s2, tau + tau2, 1.0, max_len), words, mc.product);
  rep.max_z = std::max(rep.first.max_z, rep.product.max_z);
  return rep;
}

cplx dfdt_rhs(const StarWord& w, cplx tau, const std::function<cplx(const std::string&)>& tr) {
  const std::string& e = w.letters();
  const std::size_t n = e.size();
  if (n == 0) return 0.0;
  cplx sum_tau = 0;
  for (char c : e) sum_tau += tau_of(c, tau);
  cplx acc = 0.5 * tr(e) * sum_tau;
  // The pair sum enters with a plus sign: both Itô products carry i² = −1.
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j + 1; k < n; ++k)
      if (e[j] == e[k]) acc += tau_of(e[j], tau) * tr(e.substr(0, j + 1) + e.substr(k + 1)) * tr(e.substr(j + 1, k - j));
  return acc;
}

DerivativeReport t_derivative_analytic(double s, cplx tau, double t, const std::vector<StarWord>& words, double h) {
  if (!(t > 0 && t < 1)) throw ValidationError("t must lie in (0, 1)");
  if (!(h > 0) || t - h <= 0 || t + h >= 1) throw ValidationError("t +- h must stay inside (0, 1)");
  int len = 0;
  for (const auto& w : words) len = std::max(len, static_cast<int>(w.size()));
  const MomentTable lo = solve_hierarchy(s, (t - h) * tau, 1.0, len);
  const MomentTable mid = solve_hierarchy(s, t * tau, 1.0, len);
  const MomentTable hi = solve_hierarchy(s, (t + h) * tau, 1.0, len);
  DerivativeReport rep;
  for (const auto& w : words) {
    DerivativeEntry e;
    e.word = w;
    e.lhs = (hi.final_value(w) - lo.final_value(w)) / (2 * h);
    e.rhs = dfdt_rhs(w, tau, [&](const std::string& x) { return mid.final_value(StarWord(x)); });
    e.deviation = std::abs(e.lhs - e.rhs);
    rep.max_deviation = std::max(rep.max_deviation, e.deviation);
    rep.entries.push_back(e);
  }
  return rep;
}

DerivativeReport t_derivative_check(double s, cplx tau, double t, const std::vector<StarWord>& words,
                                    const Matrix& a1, const Matrix& a2, const SimConfig& cfg, double h) {
  if (!(t > 0 && t < 1)) throw ValidationError("t must lie in (0, 1)");
  if (!(h > 0) || t - h <= 0 || t + h >= 1) throw ValidationError("t +- h must stay inside (0, 1)");
  if (a1.rows() != cfg.N || a2.rows() != cfg.N || a1.cols() != cfg.N || a2.cols() != cfg.N)
    throw ValidationError("a1 and a2 must be N x N");
  check_params(s, tau);

  // Every trace the right-hand side touches, plus the words themselves.
  std::vector<std::string> needed;
  std::map<std::string, std::size_t> slot;
  auto want = [&](const std::string& x) {
    if (slot.emplace(x, needed.size()).second) needed.push_back(x);
  };
  for (const auto& w : words) {
    want(w.letters());
    dfdt_rhs(w, tau, [&](const std::string& x) {
      want(x);
      return cplx(0);
    });
  }
  const std::size_t nw = words.size();
  // Per draw: lhs, rhs and lhs − rhs for every word.
  const auto stats = monte_carlo(cfg, 3 * nw, [&](std::uint64_t k) {
    Rng rng = sample_rng(cfg.seed, k, 0);
    const auto paths = simulate_coupled(cfg, s, {(t - h) * tau, t * tau, (t + h) * tau}, rng);
    auto sides = [&](const Matrix& blo, const Matrix& bmid, const Matrix& bhi) {
      const std::vector<cplx> tlo = word_traces(a1 * blo * a2, needed);
      const std::vector<cplx> tmid = word_traces(a1 * bmid * a2, needed);
      const std::vector<cplx> thi = word_traces(a1 * bhi * a2, needed);
      std::vector<cplx> out(3 * nw);
      for (std::size_t j = 0; j < nw; ++j) {
        const std::size_t i = slot.at(words[j].letters());
        out[j] = (thi[i] - tlo[i]) / (2 * h);
        out[nw + j] = dfdt_rhs(words[j], tau, [&](const std::string& x) { return tmid[slot.at(x)]; });
        out[2 * nw + j] = out[j] - out[nw + j];
      }
      return out;
    };
    std::vector<cplx> v = sides(paths[0].fine, paths[1].fine, paths[2].fine);
    if (cfg.richardson) {
      const std::vector<cplx> c = sides(paths[0].coarse, paths[1].coarse, paths[2].coarse);
      for (std::size_t j = 0; j < v.size(); ++j) v[j] = 2.0 * v[j] - c[j];
    }
    return v;
  });
  DerivativeReport rep;
  for (std::size_t j = 0; j < nw; ++j) {
    DerivativeEntry e;
    e.word = words[j];
    e.lhs = stats[j].mean;
    e.rhs = stats[nw + j].mean;
    const McComplex& d = stats[2 * nw + j];
    e.se = std::max(d.se_re, d.se_im);
    auto zpart = [](double diff, double se) { return se > 0 ? std::abs(diff) / se : std::abs(diff); };
    e.deviation = std::max(zpart(d.mean.real(), d.se_re), zpart(d.mean.imag(), d.se_im));
    rep.max_deviation = std::max(rep.max_deviation, e.deviation);
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace brownlab
