// bandtrace: band structures, Fermi projection kernels and finite-section
// trace asymptotics for 1D periodic Schroedinger operators.
//
// Exit codes: 0 success / pass, 2 check failed, 1 error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bandtrace/bands.hpp"
#include "bandtrace/experiments.hpp"
#include "bandtrace/finsec.hpp"
#include "bandtrace/kernel.hpp"
#include "bandtrace/report.hpp"
#include "bandtrace/test_function.hpp"

using namespace bandtrace;
using experiments::format_double;

namespace {

constexpr int kExitFail = 2;

struct PotentialArgs {
  std::string potential = "zero";
  int cutoff = fibre::kDefaultCutoff;
  double touch_tol = bands::kDefaultTouchTol;
  double edge_tol = bands::kDefaultEdgeTol;

  void add_to(CLI::App* app) {
    app->add_option("--potential", potential,
                    "preset (zero, cosine(A)) or JSON {\"coefficients\": {...}}")
        ->capture_default_str();
    app->add_option("--cutoff", cutoff, "plane-wave cutoff N")->capture_default_str();
    app->add_option("--touch-tol", touch_tol, "band touching tolerance")->capture_default_str();
    app->add_option("--edge-tol", edge_tol, "band edge tolerance")->capture_default_str();
  }

  fibre::PeriodicPotential make() const {
    if (!potential.empty() && potential.front() == '{') {
      return experiments::potential_from_json(nlohmann::json::parse(potential));
    }
    return fibre::potential_from_spec(potential);
  }

  experiments::Problem problem(double mu) const {
    return experiments::prepare_problem(make(), mu, cutoff, touch_tol, edge_tol);
  }
};

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot write " + path);
  return file;
}

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

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace asymptotics of finite sections of Fermi projections (1D periodic H)"};
  app.require_subcommand(1);

  // sweep
  std::string config_path;
  std::string out_prefix;
  auto* sweep = app.add_subcommand("sweep", "alpha sweep of tr h(B) from a JSON config");
  sweep->add_option("--config", config_path, "experiment config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_prefix, "output prefix (overrides the config)");

  // fit
  std::string csv_path;
  std::string function_id = "p:1";
  double alpha_min = experiments::kDefaultAlphaMin;
  std::optional<double> tolerance;
  bool as_json = false;
  auto* fit = app.add_subcommand("fit", "fit a alpha + b log alpha + c to a sweep CSV");
  fit->add_option("--csv", csv_path, "sweep CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--function", function_id, "test function id")->capture_default_str();
  fit->add_option("--alpha-min", alpha_min, "smallest alpha used")->capture_default_str();
  fit->add_option("--tolerance", tolerance, "fail (exit 2) if |b - W(h)| / W(h) exceeds this");
  fit->add_flag("--json", as_json, "print JSON instead of text");

  // gap-check
  double window = 0.1;
  auto* gap = app.add_subcommand("gap-check", "boundedness of a gap sweep");
  gap->add_option("--csv", csv_path, "sweep CSV")->required()->check(CLI::ExistingFile);
  gap->add_option("--function", function_id, "test function id")->capture_default_str();
  gap->add_option("--window", window, "allowed max - min")->capture_default_str();

  // bands
  PotentialArgs pot;
  double e_max = 10.0;
  std::string out_path;
  auto* bands_cmd = app.add_subcommand("bands", "band edges: j,k_j,mu_j,nu_j,genuine_group_id");
  pot.add_to(bands_cmd);
  bands_cmd->add_option("--e-max", e_max, "energy cutoff")->capture_default_str();
  bands_cmd->add_option("--out", out_path, "CSV path (default stdout)");

  // ids
  std::vector<double> mus;
  auto* ids = app.add_subcommand("ids", "integrated density of states: mu,N_mu");
  pot.add_to(ids);
  ids->add_option("--mu", mus, "energies")->required()->delimiter(',');
  ids->add_option("--out", out_path, "CSV path (default stdout)");

  // delta
  double mu = 0.0;
  auto* delta = app.add_subcommand("delta", "Fermi quasi-momentum delta with Lambda(delta) = mu");
  pot.add_to(delta);
  delta->add_option("--mu", mu, "Fermi energy")->required();

  // kernel-probe
  std::string mode = "interior";
  double max_sep = 200.0;
  double x0 = 0.3;
  auto* probe = app.add_subcommand("kernel-probe", "off-diagonal decay envelope of the kernel");
  pot.add_to(probe);
  probe->add_option("--mu", mu, "Fermi energy")->required();
  probe->add_option("--mode", mode, "interior | gap | edge | remainder")
      ->check(CLI::IsMember({"interior", "gap", "edge", "remainder"}))
      ->capture_default_str();
  probe->add_option("--max-sep", max_sep, "largest separation")->capture_default_str();
  probe->add_option("--x0", x0, "base point")->capture_default_str();
  probe->add_option("--out", out_path, "CSV path (default stdout)");

  // widom
  auto* widom = app.add_subcommand("widom", "Widom coefficient W(h)");
  widom->add_option("--function", function_id, "p:n | q:n | schatten:q | renyi:g | vn")->required();

  // lw-ref
  int power = 1;
  std::vector<double> alphas{50, 100, 200, 400};
  double spacing = 0.25;
  auto* lw = app.add_subcommand("lw-ref", "tr (D_alpha^+)^n against log alpha");
  lw->add_option("--n", power, "power n")->capture_default_str();
  lw->add_option("--alphas", alphas, "half-lengths")->delimiter(',')->capture_default_str();
  lw->add_option("--spacing", spacing, "node spacing")->capture_default_str();
  lw->add_option("--out", out_path, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*sweep) {
      auto cfg = experiments::ExperimentConfig::load(config_path);
      if (!out_prefix.empty()) cfg.output = out_prefix;
      const auto res = experiments::run_sweep(cfg);
      std::vector<experiments::FitReport> fits;
      std::vector<experiments::GapCheck> checks;
      for (const auto& f : cfg.functions) {
        if (res.rows_for(f).size() >= 4 && cfg.alphas.size() >= 4) {
          try {
            fits.push_back(experiments::fit_asymptotics(res, f, std::min(alpha_min, cfg.alphas.front())));
          } catch (const ValidationError&) {
          }
        }
        if (res.classification == bands::MuClass::Gap) {
          checks.push_back(experiments::gap_boundedness_check(res, f, window));
        }
      }
      const auto rep = experiments::render_report(res, fits, checks);
      std::cout << rep.text;
      if (!cfg.output.empty()) std::ofstream(cfg.output + "_report.json") << rep.json.dump(2) << '\n';
      return 0;
    }
    if (*fit) {
      const auto res = experiments::read_sweep(csv_path);
      const auto fr = experiments::fit_asymptotics(res, function_id, alpha_min);
      const auto rep = experiments::render_report(res, {fr});
      if (as_json) {
        std::cout << rep.json.dump(2) << '\n';
      } else {
        std::cout << rep.text;
      }
      if (tolerance) {
        const bool ok = fr.b_deviation && *fr.b_deviation <= *tolerance;
        std::cout << (ok ? "PASS" : "FAIL") << " log coefficient within " << *tolerance * 100.0
                  << "% of W(h)\n";
        return ok ? 0 : kExitFail;
      }
      return 0;
    }
    if (*gap) {
      const auto res = experiments::read_sweep(csv_path);
      const auto g = experiments::gap_boundedness_check(res, function_id, window);
      std::cout << experiments::render_report(res, {}, {g}).text;
      return g.pass ? 0 : kExitFail;
    }
    if (*bands_cmd) {
      const auto bs = bands::group_genuine(bands::compute_bands(pot.make(), e_max, pot.cutoff),
                                           pot.touch_tol);
      std::ofstream file;
      auto& os = open_out(out_path, file);
      os << "j,k_j,mu_j,nu_j,genuine_group_id\n";
      for (const auto& b : bs.bands) {
        os << b.j << ',' << format_double(b.k_j) << ',' << format_double(b.mu) << ','
           << format_double(b.nu) << ',' << bs.genuine_group_of(b.j) << '\n';
      }
      return 0;
    }
    if (*ids) {
      std::ofstream file;
      auto& os = open_out(out_path, file);
      os << "mu,N_mu\n";
      for (double m : mus) {
        os << format_double(m) << ',' << format_double(pot.problem(m).ids) << '\n';
      }
      return 0;
    }
    if (*delta) {
      const auto p = pot.problem(mu);
      const auto& cls = p.classification;
      if (cls.kind != bands::MuClass::Interior) {
        throw std::domain_error(std::string("mu is ") + bands::to_string(cls.kind) +
                                "; delta is defined only for interior mu");
      }
      const auto& gb = p.bands.genuine.at(static_cast<std::size_t>(cls.genuine_index));
      const double d = bands::solve_delta(gb, mu);
      std::cout << "mu,genuine_band,first_band,delta,lambda_delta\n"
                << format_double(mu) << ',' << cls.genuine_index << ',' << gb.start << ','
                << format_double(d) << ',' << format_double(gb.lambda(d)) << '\n';
      return 0;
    }
    if (*probe) {
      const auto p = pot.problem(mu);
      kernel::KernelOptions options;
      options.alpha_max = std::max(options.alpha_max, 0.5 * max_sep + 2.0 * std::numbers::pi);
      options.edge_tol = pot.edge_tol;
      const bool edge = p.classification.kind == bands::MuClass::Edge;
      const auto ev = edge ? kernel::make_edge_evaluator(p.bands, mu, options)
                           : kernel::make_evaluator(p.bands, mu, options);
      kernel::DecayMode dm = kernel::DecayMode::Interior;
      std::optional<kernel::LeadingKernel> leading;
      if (mode == "gap" || mode == "edge") dm = kernel::DecayMode::GapOrEdge;
      if (mode == "remainder") {
        if (p.classification.kind != bands::MuClass::Interior) {
          throw std::domain_error("remainder mode needs an interior mu");
        }
        const auto& gb = p.bands.genuine.at(static_cast<std::size_t>(p.classification.genuine_index));
        leading.emplace(gb, bands::solve_delta(gb, mu));
        dm = kernel::DecayMode::Remainder;
      }
      const auto rep = kernel::decay_probe(ev, dm, x0, max_sep, leading ? &*leading : nullptr);
      std::ofstream file;
      auto& os = open_out(out_path, file);
      os << "sep,envelope_amplitude\n";
      for (std::size_t i = 0; i < rep.separations.size(); ++i) {
        os << format_double(rep.separations[i]) << ',' << format_double(rep.amplitudes[i]) << '\n';
      }
      os << "fitted_exponent," << format_double(rep.fitted_exponent) << '\n';
      return 0;
    }
    if (*widom) {
      std::printf("%.12g\n", finsec::widom_coefficient(TestFunction::parse(function_id)));
      return 0;
    }
    if (*lw) {
      std::ofstream file;
      auto& os = open_out(out_path, file);
      os << "alpha,trace\n";
      std::vector<double> lx;
      std::vector<double> ty;
      for (double a : alphas) {
        const double t = finsec::lw_trace(a, power, spacing);
        os << format_double(a) << ',' << format_double(t) << '\n' << std::flush;
        lx.push_back(std::log(a));
        ty.push_back(t);
      }
      if (lx.size() >= 2) {
        const auto [slope, intercept] = regression(lx, ty);
        const double target = 0.25 * finsec::widom_coefficient(TestFunction::poly_p(power));
        os << "slope," << format_double(slope) << '\n'
           << "intercept," << format_double(intercept) << '\n'
           << "target_slope," << format_double(target) << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
