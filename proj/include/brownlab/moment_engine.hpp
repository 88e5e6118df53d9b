#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "brownlab/circle_measure.hpp"
#include "brownlab/rmt_lab.hpp"

namespace brownlab {

// A word in b and b*: '+' is the plain letter, '*' the starred one.
class StarWord {
 public:
  StarWord() = default;
  explicit StarWord(std::string letters);

  // Accepts "+*+" or the comma form "plain,star,plain".
  static StarWord parse(const std::string& text);

  const std::string& letters() const { return letters_; }
  std::size_t size() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }

  // Lexicographically least rotation; traces are invariant under rotation.
  StarWord canonical() const;
  // Reverse and swap letters: tr[w*] = conj tr[w].
  StarWord adjoint() const;

  bool operator==(const StarWord& o) const { return letters_ == o.letters_; }
  bool operator<(const StarWord& o) const { return letters_ < o.letters_; }

 private:
  std::string letters_;
};

// Canonical words of length 0..max_len, shortest first.
std::vector<StarWord> canonical_words(int max_len);

// Trace values keyed by canonical letters.
using MomentSnapshot = std::map<std::string, cplx>;

// Right-hand side of the r-evolution of tr[w] for b_{s+s′,τ}; every word it
// references, including w itself, must be present in the snapshot.
cplx moment_rhs(const StarWord& w, const MomentSnapshot& snapshot, double s, double s_prime, cplx tau);

struct MomentTable {
  double s = 0;
  cplx tau = 0;
  double r_max = 0;
  std::vector<double> r;        // uniform grid, r[0] = 0
  std::vector<StarWord> words;  // canonical
  Eigen::MatrixXcd values;      // (word, time)
  double step_error = 0;        // last step-halving difference, relative to max(1, |value|)

  // Canonicalizes w; throws MissingLowerWord when it is longer than the table.
  cplx at(const StarWord& w, std::size_t k) const;
  cplx final_value(const StarWord& w) const { return at(w, r.size() - 1); }
  MomentSnapshot snapshot(std::size_t k) const;

 private:
  friend MomentTable solve_hierarchy(double, cplx, double, int, int);
  std::map<std::string, Eigen::Index> index_;
};

// RK4 on all words of length ≤ max_len from tr ≡ 1 at r = 0, reported on a
// grid of `steps` intervals. Each interval is split into substeps that double
// until halving them changes no value by more than 1e−8·max(1, |value|);
// StepTooLarge if that takes more than 64 substeps.
MomentTable solve_hierarchy(double s, cplx tau, double r_max, int max_len, int steps = 1024);

// Free unitary Brownian motion moment tr[u_t^n].
double unitary_bm_moment(double t, int n);

struct MomentComparison {
  std::vector<StarWord> words;  // one representative per conjugate pair
  std::vector<cplx> predicted;
  std::vector<McComplex> observed;
  std::vector<double> z;  // deviation in standard errors: max over real and imaginary parts, real part only for real traces
  double max_z = 0;
};

MomentComparison compare_moments(const MomentTable& table, const std::vector<StarWord>& words,
                                 const std::vector<McComplex>& observed);

// Words of length 1..max_len with one member of each conjugate pair.
std::vector<StarWord> comparison_words(int max_len);

struct FactorizationReport {
  MomentComparison first;    // b_{s,τ} against the hierarchy at (s, τ)
  MomentComparison product;  // b_{s,τ}b′_{s′,τ′} against the hierarchy at (s + s′, τ + τ′)
  double max_z = 0;
};

FactorizationReport factorization_check(double s, cplx tau, double s2, cplx tau2, int max_len,
                                        const SimConfig& cfg);

// Right side of the t-derivative identity for f(t) = tr[B^{ε₁}⋯B^{εₙ}],
// B = a₁b_{s,tτ}a₂, assembled from the traces returned by tr:
// (f/2)Σ τ^{εⱼ} + Σ_{j<k, εⱼ=εₖ} τ^{εⱼ} tr[ε₁⋯εⱼε_{k+1}⋯εₙ] tr[ε_{j+1}⋯εₖ].
cplx dfdt_rhs(const StarWord& w, cplx tau, const std::function<cplx(const std::string&)>& tr);

struct DerivativeEntry {
  StarWord word;
  cplx lhs = 0;  // centred difference in t
  cplx rhs = 0;
  double se = 0;  // standard error of lhs − rhs, max over components
  double deviation = 0;  // |lhs − rhs| in standard errors, or absolute when se = 0
};

struct DerivativeReport {
  std::vector<DerivativeEntry> entries;
  double max_deviation = 0;
};

// Both sides from the hierarchy with a₁ = a₂ = I.
DerivativeReport t_derivative_analytic(double s, cplx tau, double t, const std::vector<StarWord>& words,
                                       double h = 1e-4);

// Both sides from simulations of a₁b_{s,tτ}a₂ coupled across t − h, t, t + h.
DerivativeReport t_derivative_check(double s, cplx tau, double t, const std::vector<StarWord>& words,
                                    const Matrix& a1, const Matrix& a2, const SimConfig& cfg, double h = 0.02);

}  // namespace brownlab
