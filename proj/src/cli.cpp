#include "brownlab/cli.hpp"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "brownlab/brown_measure.hpp"
#include "brownlab/errors.hpp"
#include "brownlab/hj_engine.hpp"
#include "brownlab/moment_engine.hpp"
#include "brownlab/parallel.hpp"
#include "brownlab/pushforward_map.hpp"
#include "brownlab/rmt_lab.hpp"
#include "brownlab/rng.hpp"

namespace brownlab {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

double parse_real(std::string_view s, const std::string& whole) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ValidationError("cannot parse complex number '" + whole + "'");
  return v;
}

struct Common {
  std::string measure = "delta1";
  double s = 1.0;
  std::string tau = "1";
  std::string out = ".";
  std::uint64_t seed = 1;
  int threads = 0;
};

struct Options {
  Common common;
  int n = 0;
  int nx = 0, ny = 0;
  double eps = 0.1;
  double h = 1e-3;
  std::vector<std::string> lambdas;
  int max_len = 4;
  double r_max = 1.0;
  int steps = 0;
  int N = 300;
  int samples = 10;
  std::string scheme = "euler";
  bool richardson = false;
  double s_prime = 0, tau_prime_re = 0, tau_prime_im = 0;
};

// Everything validated and resolved before any computation starts.
struct RunConfig {
  CircleMeasure measure;
  BrownParams params;
  fs::path out;
  std::uint64_t seed;
};

RunConfig resolve(const Common& c) {
  RunConfig rc{resolve_measure(c.measure), make_params(c.s, parse_complex(c.tau)), fs::path(c.out), c.seed};
  std::error_code ec;
  fs::create_directories(rc.out, ec);
  if (!fs::is_directory(rc.out)) throw ValidationError("cannot create output directory " + c.out);
  return rc;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ValidationError("cannot write " + p.string());
  os.imbue(std::locale::classic());
  os.precision(17);
  return os;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream os = open_out(p);
  os << j.dump(2) << '\n';
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

std::vector<cplx> parse_lambdas(const std::vector<std::string>& v) {
  std::vector<cplx> out;
  for (const auto& s : v) out.push_back(parse_complex(s));
  return out;
}

SimConfig sim_config(const Options& o, std::uint64_t seed, int default_steps) {
  SimConfig cfg;
  cfg.N = o.N;
  cfg.steps = o.steps > 0 ? o.steps : default_steps;
  cfg.samples = o.samples;
  cfg.seed = seed;
  if (o.scheme == "euler") cfg.scheme = Scheme::Euler;
  else if (o.scheme == "exponential") cfg.scheme = Scheme::Exponential;
  else throw ValidationError("scheme must be euler or exponential");
  cfg.richardson = o.richardson;
  validate(cfg);
  return cfg;
}

// --- subcommands -----------------------------------------------------------

std::vector<std::string> run_domain(const Options& o) {
  const RunConfig rc = resolve(o.common);
  const DomainProfile prof = build_profile(rc.measure, rc.params, o.n > 0 ? o.n : 1024);
  const fs::path grid = rc.out / "domain.csv", bnd = rc.out / "boundary.csv";
  {
    std::ofstream os = open_out(grid);
    os << "theta,r_s,I_s,R_s,phi_s,delta,v1,v2\n";
    for (Eigen::Index j = 0; j < prof.size(); ++j)
      os << prof.theta[j] << ',' << prof.r_s[j] << ',' << prof.I_s[j] << ',' << prof.R_s[j] << ',' << prof.phi_s[j]
         << ',' << prof.delta[j] << ',' << prof.v1[j] << ',' << prof.v2[j] << '\n';
  }
  {
    std::ofstream os = open_out(bnd);
    os << "x,y,arc\n";
    for (const auto& bp : boundary_polyline(prof, 1024))
      os << bp.z.real() << ',' << bp.z.imag() << ',' << (bp.outer ? "outer" : "inner") << '\n';
  }
  return {grid.string(), bnd.string()};
}

std::vector<std::string> run_density(const Options& o) {
  const RunConfig rc = resolve(o.common);
  const int nx = o.nx > 0 ? o.nx : 512, ny = o.ny > 0 ? o.ny : nx;
  const DomainProfile prof = build_profile(rc.measure, rc.params, 1024);
  const Bounds b = enclosing_bounds(prof);
  const DensityRaster ras = raster(prof, b, nx, ny);
  const fs::path csv = rc.out / "density.csv", pgm = rc.out / "density.pgm";
  {
    std::ofstream os = open_out(csv);
    os << "x,y,density\n";
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        os << b.x0 + (i + 0.5) * (b.x1 - b.x0) / nx << ',' << b.y0 + (j + 0.5) * (b.y1 - b.y0) / ny << ','
           << ras.values(j, i) << '\n';
  }
  write_pgm(pgm.string(), ras.values);

  // Logarithmic coordinates (ρ, θ) = (log|λ|, arg λ), where the picture is constant along spirals.
  const double rho0 = prof.params.tau1() * prof.v1.minCoeff(), rho1 = prof.params.tau1() * prof.v2.maxCoeff();
  const double pad = 0.05 * (rho1 - rho0);
  const LogRaster lr = log_raster(prof, rho0 - pad, rho1 + pad, nx, ny);
  const fs::path lcsv = rc.out / "log_density.csv", lpgm = rc.out / "log_density.pgm";
  {
    std::ofstream os = open_out(lcsv);
    os << "rho,theta,density\n";
    for (int j = 0; j < lr.ntheta; ++j)
      for (int i = 0; i < lr.nrho; ++i)
        os << lr.rho0 + (i + 0.5) * (lr.rho1 - lr.rho0) / lr.nrho << ','
           << -std::numbers::pi + (j + 0.5) * 2 * std::numbers::pi / lr.ntheta << ',' << lr.values(j, i) << '\n';
  }
  write_pgm(lpgm.string(), lr.values);
  return {csv.string(), pgm.string(), lcsv.string(), lpgm.string()};
}

std::vector<std::string> run_sample(const Options& o) {
  const RunConfig rc = resolve(o.common);
  const DomainProfile prof = build_profile(rc.measure, rc.params, 1024);
  const std::vector<cplx> pts = sample(prof, o.n > 0 ? o.n : 10000, rc.seed);
  const fs::path csv = rc.out / "sample.csv";
  std::ofstream os = open_out(csv);
  os << "x,y\n";
  for (cplx z : pts) os << z.real() << ',' << z.imag() << '\n';
  return {csv.string()};
}

std::vector<std::string> run_potential(const Options& o) {
  const RunConfig rc = resolve(o.common);
  if (!(o.eps >= 0)) throw ValidationError("eps must be nonnegative");
  const PotentialSolver solver(rc.measure, rc.params.s);
  std::vector<cplx> pts = parse_lambdas(o.lambdas);
  if (pts.empty()) {
    const DomainProfile prof = build_profile(rc.measure, rc.params, 1024);
    const Bounds b = enclosing_bounds(prof);
    const int nx = o.nx > 0 ? o.nx : 24, ny = o.ny > 0 ? o.ny : nx;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        pts.emplace_back(b.x0 + (i + 0.5) * (b.x1 - b.x0) / nx, b.y0 + (j + 0.5) * (b.y1 - b.y0) / ny);
  }
  std::vector<PotentialSample> res(pts.size());
  parallel_for(pts.size(), [&](std::size_t k) { res[k] = solver.evaluate(rc.params.tau, pts[k], o.eps); });
  const fs::path csv = rc.out / "potential.csv";
  std::ofstream os = open_out(csv);
  os << "x,y,eps,S,dS_dx,dS_dy,dS_deps\n";
  for (const auto& r : res)
    os << r.lambda.real() << ',' << r.lambda.imag() << ',' << r.eps << ',' << r.S_value << ','
       << 2 * r.grad_lambda.real() << ',' << -2 * r.grad_lambda.imag() << ',' << r.grad_eps << '\n';
  return {csv.string()};
}

std::vector<std::string> run_pde_check(const Options& o) {
  const RunConfig rc = resolve(o.common);
  const int n = o.n > 0 ? o.n : 20;
  const double s_prime = o.s_prime > 0 ? o.s_prime : rc.params.s;
  const cplx tau_prime = o.s_prime > 0 ? cplx(o.tau_prime_re, o.tau_prime_im) : rc.params.tau;
  SolverCache cache(rc.measure);
  const auto solver = cache.get(rc.params.s);
  struct Row {
    cplx lambda;
    double eps, res_tau, res_r;
  };
  std::vector<Row> rows(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double r = 0.3 + 1.7 * counter_uniform(rc.seed, k, 0);
    const double th = 2 * std::numbers::pi * counter_uniform(rc.seed, k, 1);
    rows[static_cast<std::size_t>(k)] = {std::polar(r, th), 0.05 + 0.45 * counter_uniform(rc.seed, k, 2), 0, 0};
  }
  parallel_for(rows.size(), [&](std::size_t k) {
    Row& row = rows[k];
    row.res_tau = pde_residual_tau(*solver, rc.params.tau, row.lambda, row.eps, o.h).residual();
    row.res_r = pde_residual_r(cache, {rc.params.s, rc.params.tau, s_prime, tau_prime, 0.0}, row.lambda, row.eps, o.h)
                    .residual();
  });
  const fs::path csv = rc.out / "pde_check.csv";
  std::ofstream os = open_out(csv);
  os << "lambda_x,lambda_y,eps,residual_tau,residual_r\n";
  for (const auto& r : rows)
    os << r.lambda.real() << ',' << r.lambda.imag() << ',' << r.eps << ',' << r.res_tau << ',' << r.res_r << '\n';
  return {csv.string()};
}

std::vector<std::string> run_pushforward(const Options& o) {
  const RunConfig rc = resolve(o.common);
  const int n = o.n > 0 ? o.n : 100000;
  const PushMap map = make_push_map(rc.measure, rc.params.s, rc.params.tau);
  const std::vector<cplx> src = sample(map.source, n, rc.seed);
  std::vector<cplx> dst(src.size());
  parallel_for(src.size(), [&](std::size_t k) { dst[k] = phi_stau(map, src[k]); });
  const PushReport rep = chi_square_vdelta(map.target, dst);
  const fs::path csv = rc.out / "pushforward_pairs.csv", js = rc.out / "pushforward.json";
  {
    std::ofstream os = open_out(csv);
    os << "src_x,src_y,dst_x,dst_y\n";
    for (std::size_t k = 0; k < src.size(); ++k)
      os << src[k].real() << ',' << src[k].imag() << ',' << dst[k].real() << ',' << dst[k].imag() << '\n';
  }
  write_json(js, {{"sup_discrepancy", rep.sup_discrepancy},
                  {"chi2", rep.chi2},
                  {"pvalue", rep.pvalue},
                  {"n", rep.n},
                  {"dof", rep.dof},
                  {"touches_contact", rep.touches_contact}});
  return {csv.string(), js.string()};
}

std::vector<std::string> run_moments(const Options& o) {
  const RunConfig rc = resolve(o.common);
  const MomentTable t = solve_hierarchy(rc.params.s, rc.params.tau, o.r_max, o.max_len, o.steps > 0 ? o.steps : 1024);
  json arr = json::array();
  for (std::size_t w = 0; w < t.words.size(); ++w) {
    json traj = json::array();
    for (std::size_t k = 0; k < t.r.size(); ++k) {
      const cplx v = t.values(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(k));
      traj.push_back({t.r[k], v.real(), v.imag()});
    }
    arr.push_back({{"word", t.words[w].letters()}, {"trajectory", std::move(traj)}});
  }
  const fs::path js = rc.out / "moments.json";
  write_json(js, arr);
  return {js.string()};
}

std::vector<std::string> run_simulate(const Options& o) {
  const RunConfig rc = resolve(o.common);
  SimConfig cfg = sim_config(o, rc.seed, 200);
  cfg.richardson = false;
  const EigCloud cloud = simulate_cloud(cfg, rc.measure, rc.params.s, rc.params.tau);
  const DomainProfile prof = build_profile(rc.measure, rc.params, 1024);
  const CloudReport rep = eig_vs_density(cloud, prof);
  const fs::path csv = rc.out / "eigenvalues.csv", js = rc.out / "simulate.json";
  {
    std::ofstream os = open_out(csv);
    os << "x,y,sample_index\n";
    for (std::size_t k = 0; k < cloud.values.size(); ++k)
      os << cloud.values[k].real() << ',' << cloud.values[k].imag() << ',' << cloud.sample[k] << '\n';
  }
  write_json(js, {{"inside_fraction", rep.inside_fraction},
                  {"boundary_fraction", rep.boundary_fraction},
                  {"chi2", rep.chi2},
                  {"dof", rep.dof},
                  {"N", cfg.N},
                  {"samples", cfg.samples}});
  return {csv.string(), js.string()};
}

// Deterministic predictions against the random-matrix model for one (μ₀, s, τ):
// ∗-moments of b_{s,τ} and the regularized potential S at the requested points.
std::vector<std::string> run_compare(const Options& o) {
  const RunConfig rc = resolve(o.common);
  Options oo = o;
  oo.richardson = true;
  const SimConfig cfg = sim_config(oo, rc.seed, 200);
  const std::vector<StarWord> words = comparison_words(o.max_len);
  std::vector<std::string> letters;
  for (const auto& w : words) letters.push_back(w.letters());
  const MomentComparison mc = compare_moments(solve_hierarchy(rc.params.s, rc.params.tau, 1.0, o.max_len), words,
                                              mc_star_moments(cfg, rc.params.s, rc.params.tau, letters));
  json jm = json::array();
  for (std::size_t k = 0; k < words.size(); ++k)
    jm.push_back({{"word", words[k].letters()},
                  {"predicted", complex_json(mc.predicted[k])},
                  {"observed", complex_json(mc.observed[k].mean)},
                  {"stderr", {mc.observed[k].se_re, mc.observed[k].se_im}},
                  {"z", mc.z[k]}});

  std::vector<cplx> pts = parse_lambdas(o.lambdas);
  if (pts.empty()) pts = {cplx(0.3, 0.1), cplx(1.5, 0.5)};
  const PotentialSolver solver(rc.measure, rc.params.s);
  const std::vector<McValue> mcs = estimate_S_mc(cfg, rc.measure, rc.params.s, rc.params.tau, pts, o.eps);
  json js_pts = json::array();
  double max_z_s = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double S = solver.evaluate(rc.params.tau, pts[k], o.eps).S_value;
    const double z = std::abs(mcs[k].mean - S) / mcs[k].stderr_;
    max_z_s = std::max(max_z_s, z);
    js_pts.push_back({{"lambda", complex_json(pts[k])},
                      {"eps", o.eps},
                      {"S", S},
                      {"mc_mean", mcs[k].mean},
                      {"mc_stderr", mcs[k].stderr_},
                      {"z", z}});
  }
  const fs::path out = rc.out / "compare.json";
  write_json(out, {{"moments", jm},
                   {"moments_max_z", mc.max_z},
                   {"potential", js_pts},
                   {"potential_max_z", max_z_s},
                   {"N", cfg.N},
                   {"samples", cfg.samples},
                   {"steps", cfg.steps}});
  return {out.string()};
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--measure", c.measure, "delta1, four_points, inline JSON or a JSON file");
  sub->add_option("--s", c.s, "variance parameter s > 0");
  sub->add_option("--tau", c.tau, "covariance parameter, written a+bi");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--threads", c.threads, "worker threads (0 = BROWNLAB_THREADS or all cores)");
}

void print_summary(const std::string& cmd, double ms, const std::vector<std::string>& outputs,
                   const std::string& status) {
  std::cout << json{{"cmd", cmd}, {"elapsed_ms", ms}, {"outputs", outputs}, {"status", status}}.dump() << std::endl;
}

}  // namespace

cplx parse_complex(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw ValidationError("empty complex number");
  if (s.back() != 'i' && s.back() != 'j') return parse_real(s, text);
  s.pop_back();
  // Split at the last sign that is not part of an exponent.
  std::size_t split = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;)
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  const std::string re = split == std::string::npos ? "" : s.substr(0, split);
  std::string im = split == std::string::npos ? s : s.substr(split);
  if (im.empty() || im == "+") im = "1";
  else if (im == "-") im = "-1";
  return {re.empty() ? 0.0 : parse_real(re, text), parse_real(im, text)};
}

CircleMeasure resolve_measure(const std::string& spec) {
  if (spec == "delta1") return delta1();
  if (spec == "four_points") return four_points();
  if (!spec.empty() && spec.front() == '{') return measure_from_json(spec);
  std::ifstream is(spec);
  if (!is) throw ValidationError("unknown measure '" + spec + "' (not a built-in name or readable file)");
  std::stringstream ss;
  ss << is.rdbuf();
  return measure_from_json(ss.str());
}

int dispatch(int argc, char** argv) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  CLI::App app{"Brown measure toolkit"};
  app.require_subcommand(1);
  Options o;
  using Runner = std::vector<std::string> (*)(const Options&);
  std::vector<std::pair<CLI::App*, Runner>> subs;
  auto add = [&](const char* name, const char* help, Runner run) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, o.common);
    subs.emplace_back(sub, run);
    return sub;
  };

  add("domain", "profile on a θ grid and the boundary polyline", run_domain)->add_option("--n", o.n, "grid nodes");
  {
    auto* d = add("density", "density raster (rectangular and logarithmic) as CSV and PGM", run_density);
    d->add_option("--nx", o.nx, "raster width");
    d->add_option("--ny", o.ny, "raster height (default nx)");
  }
  add("sample", "draws from the Brown measure", run_sample)->add_option("--n", o.n, "number of draws");
  {
    auto* p = add("potential", "S and its gradient at ε on a grid or at --lambda points", run_potential);
    p->add_option("--eps", o.eps, "regularization ε");
    p->add_option("--nx", o.nx, "grid width");
    p->add_option("--ny", o.ny, "grid height");
    p->add_option("--lambda", o.lambdas, "evaluation points a+bi");
  }
  {
    auto* p = add("pde-check", "finite-difference residuals of both PDEs at random points", run_pde_check);
    p->add_option("--n", o.n, "number of points");
    p->add_option("--fd-step", o.h, "finite-difference step");
    p->add_option("--s-prime", o.s_prime, "r-direction s′ (default: s)");
    p->add_option("--tau-prime-re", o.tau_prime_re, "r-direction Re τ′");
    p->add_option("--tau-prime-im", o.tau_prime_im, "r-direction Im τ′");
  }
  add("pushforward", "push μ_{s,s} samples through Φ_{s,τ} and test against μ_{s,τ}", run_pushforward)
      ->add_option("--n", o.n, "number of draws");
  {
    auto* m = add("moments", "∗-moment trajectories from the free Itô hierarchy", run_moments);
    m->add_option("--max-len", o.max_len, "longest word (≤ 10)");
    m->add_option("--r-max", o.r_max, "time horizon");
    m->add_option("--steps", o.steps, "RK4 steps");
  }
  auto sim_opts = [&](CLI::App* a) {
    a->add_option("--N", o.N, "matrix size");
    a->add_option("--samples", o.samples, "independent matrices");
    a->add_option("--steps", o.steps, "SDE steps");
    a->add_option("--scheme", o.scheme, "euler or exponential");
  };
  sim_opts(add("simulate", "eigenvalues of the random matrix model against the domain", run_simulate));
  {
    auto* c = add("compare", "hierarchy and potential against Monte-Carlo estimates", run_compare);
    sim_opts(c);
    c->add_option("--max-len", o.max_len, "longest word");
    c->add_option("--eps", o.eps, "regularization ε");
    c->add_option("--lambda", o.lambdas, "evaluation points a+bi");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const auto& [sub, run] : subs) {
    if (!sub->parsed()) continue;
    const std::string cmd = sub->get_name();
    try {
      if (o.common.threads < 0) throw ValidationError("threads must be nonnegative");
      set_worker_count(o.common.threads);
      const std::vector<std::string> outputs = run(o);
      print_summary(cmd, elapsed(), outputs, "ok");
      return 0;
    } catch (const ValidationError& e) {
      std::cerr << "error: " << e.what() << '\n';
      print_summary(cmd, elapsed(), {}, "invalid_input");
      return 2;
    } catch (const NumericalError& e) {
      std::cerr << "error: " << e.what() << '\n';
      print_summary(cmd, elapsed(), {}, "numerical_failure");
      return 3;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      print_summary(cmd, elapsed(), {}, "numerical_failure");
      return 3;
    }
  }
  return 2;
}

}  // namespace brownlab
