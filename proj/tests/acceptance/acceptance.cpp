// End-to-end acceptance run: prints one PASS/FAIL line per criterion.
// Usage: acceptance [work_dir] [--only 1,2,...]
// Exit: 0 all pass, 2 any failure, 1 on error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "bandtrace/bands.hpp"
#include "bandtrace/experiments.hpp"
#include "bandtrace/fibre.hpp"
#include "bandtrace/finsec.hpp"
#include "bandtrace/kernel.hpp"
#include "bandtrace/report.hpp"
#include "bandtrace/test_function.hpp"

#ifndef BANDTRACE_CONFIG_DIR
#define BANDTRACE_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace bandtrace;
using experiments::ExperimentConfig;
using experiments::SweepResult;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Sweeps are shared between criteria; each config runs once.
class Workspace {
 public:
  explicit Workspace(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& dir() const { return dir_; }

  ExperimentConfig config(const std::string& name) const {
    return ExperimentConfig::load(fs::path(BANDTRACE_CONFIG_DIR) / (name + ".json"));
  }

  const SweepResult& sweep(const std::string& name) {
    auto it = sweeps_.find(name);
    if (it != sweeps_.end()) return it->second;
    auto cfg = config(name);
    cfg.output = (dir_ / name).string();
    const auto t0 = std::chrono::steady_clock::now();
    auto res = experiments::run_sweep(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "  sweep " << name << " done in " << fmt("%.1f", secs) << " s\n";
    std::ofstream(dir_ / (name + "_report.txt")) << experiments::render_report(res, {}).text;
    return sweeps_.emplace(name, std::move(res)).first->second;
  }

 private:
  fs::path dir_;
  std::map<std::string, SweepResult> sweeps_;
};

std::pair<double, double> regression(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

kernel::KernelEvaluator evaluator_for(const experiments::Problem& p, double alpha_max) {
  kernel::KernelOptions o;
  o.alpha_max = alpha_max;
  return kernel::make_evaluator(p.bands, p.mu, o);
}

double band2_mu(Workspace& ws) { return ws.config("cosine_band2").mu; }
double gap1_mu(Workspace& ws) { return ws.config("cosine_gap1").mu; }

Outcome free_kernel_oracle(Workspace&) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = experiments::prepare_problem(fibre::PeriodicPotential::zero(), 1.0);
  const auto ev = evaluator_for(p, 110.0);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ux(-60.0, 60.0);
  std::uniform_real_distribution<double> ud(-100.0, 100.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = ux(rng);
    const double d = ud(rng);
    const double y = x - d;
    const double exact = std::abs(d) < 1e-12 ? 1.0 / kPi : std::sin(d) / (kPi * d);
    worst = std::max(worst, std::abs(kernel::kernel_P(ev, x, y) - exact));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-7 && secs < 10.0,
          "max error " + fmt("%.2e", worst) + " over 1000 pairs, " + fmt("%.2f", secs) + " s"};
}

Outcome leading_term(Workspace& ws) {
  bool ok = true;
  std::string detail;
  const std::pair<fibre::PeriodicPotential, double> cases[] = {
      {fibre::PeriodicPotential::zero(), 1.0},
      {fibre::PeriodicPotential::cosine(1.0), band2_mu(ws)}};
  for (const auto& [v, mu] : cases) {
    const auto p = experiments::prepare_problem(v, mu);
    const auto ev = evaluator_for(p, 16.0 * kPi);
    for (double alpha : {4.0 * kPi, 16.0 * kPi}) {
      const auto sp = finsec::section_spectrum(finsec::assemble_section(ev, alpha, finsec::kDefaultSpacing));
      const double tr = finsec::trace_h(sp, TestFunction::linear());
      const double lead = 2.0 * alpha * p.ids;
      const double err = std::abs(tr - lead);
      ok = ok && err <= std::max(0.02 * lead, 1.0);
      detail += (v.is_zero() ? "free" : "cosine") + fmt(" a=%.1f", alpha) + fmt(" |tr-2aN|=%.3g; ", err);
    }
  }
  return {ok, detail};
}

Outcome log_coefficient(Workspace& ws, const std::string& name, double tol) {
  const auto& res = ws.sweep(name);
  const auto fr = experiments::fit_asymptotics(res, "p:1", res.rows.front().alpha);
  const bool ok = fr.b_deviation && *fr.b_deviation <= tol;
  return {ok, "b = " + fmt("%.6f", fr.b) + " vs " + fmt("%.6f", fr.b_target) + " (" +
                  fmt("%.2f", 100.0 * fr.b_deviation.value_or(NAN)) + "%, limit " + fmt("%.0f", 100.0 * tol) +
                  "%)"};
}

Outcome gap_bounded(Workspace& ws) {
  const auto g = experiments::gap_boundedness_check(ws.sweep("cosine_gap1"), "p:1", 0.1);
  return {g.pass, "range of tr p1(B) over the sweep " + fmt("%.3g", g.range) + " (limit 0.1)"};
}

Outcome widom_exactness(Workspace&) {
  const double pi2 = kPi * kPi;
  double worst = 0.0;
  worst = std::max(worst, std::abs(finsec::widom_coefficient(TestFunction::poly_p(1)) - 1.0 / pi2));
  worst = std::max(worst, std::abs(finsec::widom_coefficient(TestFunction::poly_p(2)) - 1.0 / (6.0 * pi2)));
  for (int n = 1; n <= 4; ++n) {
    const auto [p, q] = finsec::widom_halving_check(n);
    worst = std::max(worst, std::abs(q - 0.5 * p));
  }
  const double vn = std::abs(finsec::widom_coefficient(TestFunction::von_neumann()) - 1.0 / 3.0);
  return {worst <= 1e-9 && vn <= 1e-8, "max error " + fmt("%.2e", worst) + ", |W(vn) - 1/3| = " + fmt("%.2e", vn)};
}

Outcome landau_widom(Workspace&) {
  const double spacing = 0.25;
  const std::vector<double> alphas{25, 50, 100, 200, 400};
  std::vector<double> lx, t1, t2;
  double closed_err = 0.0;
  for (double a : alphas) {
    const auto ev = finsec::lw_spectrum(a, spacing);
    const double tr1 = finsec::lw_trace_from_spectrum(ev, 1);
    closed_err = std::max(closed_err, std::abs(tr1 - std::log(2.0 * a + 1.0) / (4.0 * kPi * kPi)));
    lx.push_back(std::log(a));
    t1.push_back(tr1);
    t2.push_back(finsec::lw_trace_from_spectrum(ev, 2));
  }
  const double s1 = regression(lx, t1).first;
  const double s2 = regression(lx, t2).first;
  const double d1 = std::abs(s1 * 4.0 * kPi * kPi - 1.0);
  const double d2 = std::abs(s2 * 24.0 * kPi * kPi - 1.0);
  return {closed_err <= 1e-6 && d1 <= 0.03 && d2 <= 0.10,
          "closed-form error " + fmt("%.2e", closed_err) + ", n=1 slope off " + fmt("%.2f", 100 * d1) +
              "%, n=2 slope off " + fmt("%.2f", 100 * d2) + "%"};
}

Outcome ap_means(Workspace& ws) {
  const auto p = experiments::prepare_problem(fibre::PeriodicPotential::cosine(1.0), band2_mu(ws));
  const auto& gb = p.bands.genuine.at(static_cast<std::size_t>(p.classification.genuine_index));
  const auto phi = gb.phi(bands::solve_delta(gb, p.mu));
  auto mod2 = [&](double x) { return cplx{std::norm(phi(x))}; };
  auto sq = [&](double x) { return phi(x) * phi(x); };
  const double m1 = std::abs(kernel::ap_mean(mod2, 1e4, 0.05) - 1.0 / (2.0 * kPi));
  const double m2 = std::abs(kernel::ap_mean(sq, 1e4, 0.05));
  const double e1 = kernel::ap_mean_error_envelope(mod2, 1.0 / (2.0 * kPi), 2.5e3, 20.0 * kPi, 0.05);
  const double e2 = kernel::ap_mean_error_envelope(mod2, 1.0 / (2.0 * kPi), 5e3, 20.0 * kPi, 0.05);
  const double ratio = e2 / e1;
  return {m1 <= 1e-3 && m2 <= 1e-3 && ratio >= 0.3 && ratio <= 0.7,
          "|M|Phi|^2 - 1/2pi| = " + fmt("%.2e", m1) + ", |M Phi^2| = " + fmt("%.2e", m2) +
              ", envelope ratio under T doubling " + fmt("%.3f", ratio)};
}

Outcome decay(Workspace& ws) {
  const double max_sep = 200.0;
  const double amax = 0.5 * max_sep + 2.0 * kPi;
  const auto cos1 = fibre::PeriodicPotential::cosine(1.0);
  const auto pi = experiments::prepare_problem(cos1, band2_mu(ws));
  const auto ev_i = evaluator_for(pi, amax);
  const auto& gb = pi.bands.genuine.at(static_cast<std::size_t>(pi.classification.genuine_index));
  const kernel::LeadingKernel lead(gb, bands::solve_delta(gb, pi.mu));
  const double e_int = kernel::decay_probe(ev_i, kernel::DecayMode::Interior, 0.3, max_sep).fitted_exponent;
  const double e_rem = kernel::decay_probe(ev_i, kernel::DecayMode::Remainder, 0.3, max_sep, &lead).fitted_exponent;
  const auto pg = experiments::prepare_problem(cos1, gap1_mu(ws));
  const double e_gap =
      kernel::decay_probe(evaluator_for(pg, amax), kernel::DecayMode::GapOrEdge, 0.3, max_sep).fitted_exponent;
  return {std::abs(e_int + 1.0) <= 0.1 && e_gap <= -1.8 && e_rem <= -1.8,
          "interior " + fmt("%.3f", e_int) + ", gap " + fmt("%.3f", e_gap) + ", remainder " + fmt("%.3f", e_rem)};
}

Outcome schatten_law(Workspace& ws) {
  const std::string id = "schatten:0.5";
  std::vector<double> lx, y;
  for (const auto& r : ws.sweep("cosine_band2").rows_for(id)) {
    lx.push_back(std::log(r.alpha));
    y.push_back(r.trace);
  }
  const double slope = regression(lx, y).first;
  double tv = 0.0;
  const auto gap = ws.sweep("cosine_gap1").rows_for(id);
  for (std::size_t i = 1; i < gap.size(); ++i) tv += std::abs(gap[i].trace - gap[i - 1].trace);
  return {slope > 0.0 && tv <= 0.2,
          "interior slope in log alpha " + fmt("%.4f", slope) + ", gap total variation " + fmt("%.3g", tv)};
}

// Hermiticity, containment, linearity, k -> -k symmetry, Lambda monotonicity and
// CSV determinism for one config.
std::string property_failures(Workspace& ws, const std::string& name) {
  std::string fails;
  auto cfg = ws.config(name);
  const auto v = experiments::potential_from_json(cfg.potential);
  const auto p = experiments::prepare_problem(v, cfg.mu, cfg.cutoff, cfg.touch_tol, cfg.edge_tol);

  for (double k : {0.0, 0.13, 0.31, 0.49}) {
    const auto m = fibre::assemble_fibre_matrix(v, k, cfg.cutoff);
    if ((m.h - m.h.adjoint()).cwiseAbs().maxCoeff() != 0.0) fails += " fibre-hermiticity";
    const auto plus = fibre::fibre_eigenvalues(v, k, cfg.cutoff);
    const auto minus = fibre::fibre_eigenvalues(v, -k, cfg.cutoff);
    if ((plus - minus).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + plus.cwiseAbs().maxCoeff())) fails += " k-symmetry";
  }
  for (std::size_t g = 0; g < p.bands.genuine.size() && g < 3; ++g) {
    const auto& gb = p.bands.genuine[g];
    const double k0 = gb.k_start();
    const double k1 = std::isfinite(gb.k_end()) ? gb.k_end() : k0 + 1.0;
    double prev = -INFINITY;
    for (int i = 0; i < 200; ++i) {
      const double l = gb.lambda(k0 + (k1 - k0) * i / 199.0);
      if (!(l > prev)) {
        fails += " lambda-monotonicity";
        break;
      }
      prev = l;
    }
  }

  const double alpha = cfg.alphas.front();
  const auto ev = evaluator_for(p, alpha);
  const auto sec = finsec::assemble_section(ev, alpha, cfg.spacing);
  if (sec.symmetry_deviation > 1e-10) fails += " section-symmetry";
  try {
    const auto sp = finsec::section_spectrum(sec);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const auto f = TestFunction::von_neumann();
    const auto g = TestFunction::poly_p(1);
    for (int i = 0; i < 5; ++i) {
      const double a = u(rng);
      const double b = u(rng);
      const double lhs = finsec::trace_h(sp, TestFunction::combination({{a, f}, {b, g}}));
      const double rhs = a * finsec::trace_h(sp, f) + b * finsec::trace_h(sp, g);
      if (std::abs(lhs - rhs) > 1e-12 * (1.0 + std::abs(rhs))) fails += " linearity";
    }
  } catch (const EigensolverError&) {
    fails += " containment";
  }

  // two short runs into separate files must agree byte for byte
  cfg.alphas.resize(std::min<std::size_t>(cfg.alphas.size(), 2));
  std::string text[2];
  for (int r = 0; r < 2; ++r) {
    cfg.output = (ws.dir() / (name + "_det" + std::to_string(r))).string();
    (void)experiments::run_sweep(cfg);
    std::ifstream in(cfg.output + ".csv");
    std::stringstream ss;
    ss << in.rdbuf();
    text[r] = ss.str();
  }
  if (text[0] != text[1] || text[0].empty()) fails += " csv-determinism";
  return fails;
}

Outcome property_suite(Workspace& ws) {
  std::string detail;
  bool ok = true;
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(BANDTRACE_CONFIG_DIR)) {
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  for (const auto& n : names) {
    const auto f = property_failures(ws, n);
    ok = ok && f.empty();
    detail += n + (f.empty() ? ": ok; " : ":" + f + "; ");
  }
  if (names.empty()) return {false, "no configs found in " BANDTRACE_CONFIG_DIR};
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::current_path() / "acceptance_out";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else {
      work = a;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome(Workspace&)>>> criteria = {
      {"free-case kernel oracle", free_kernel_oracle},
      {"leading term 2 alpha N", leading_term},
      {"log coefficient, free case", [](Workspace& ws) { return log_coefficient(ws, "free_mu1", 0.20); }},
      {"log coefficient, cosine(1) band 2", [](Workspace& ws) { return log_coefficient(ws, "cosine_band2", 0.25); }},
      {"gap boundedness", gap_bounded},
      {"Widom quadrature exactness", widom_exactness},
      {"Landau-Widom reference", landau_widom},
      {"almost-periodic means", ap_means},
      {"decay dichotomy", decay},
      {"Schatten log-law", schatten_law},
      {"property suite", property_suite},
  };

  try {
    Workspace ws(work);
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
      const int id = static_cast<int>(i) + 1;
      if (!only.empty() && !only.count(id)) continue;
      Outcome o;
      try {
        o = criteria[i].second(ws);
      } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
      }
      all = all && o.pass;
      std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail
                << std::endl;
    }
    return all ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
