#include "bandtrace/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "bandtrace/test_function.hpp"

namespace bandtrace::experiments {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string prefix_of(const std::filesystem::path& csv) {
  auto s = csv.string();
  if (s.size() > 4 && s.ends_with(".csv")) s.resize(s.size() - 4);
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

bands::MuClass parse_class(const std::string& s) {
  if (s == "interior") return bands::MuClass::Interior;
  if (s == "gap") return bands::MuClass::Gap;
  if (s == "edge") return bands::MuClass::Edge;
  throw ValidationError("unknown classification '" + s + "' (expected interior, gap or edge)");
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fibre::PeriodicPotential potential_from_json(const json& j, int order) {
  if (j.is_string()) return fibre::potential_from_spec(j.get<std::string>(), order);
  if (!j.is_object()) throw ValidationError("potential must be an object or a preset string");
  if (j.contains("preset") == j.contains("coefficients")) {
    throw ValidationError("potential needs exactly one of 'preset' or 'coefficients'");
  }
  if (j.contains("preset")) return fibre::potential_from_spec(j.at("preset").get<std::string>(), order);
  std::map<int, cplx> coeffs;
  for (const auto& [key, value] : j.at("coefficients").items()) {
    int m = 0;
    try {
      std::size_t used = 0;
      m = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ValidationError("potential coefficient key '" + key + "' is not an integer");
    }
    if (value.is_number()) {
      coeffs[m] = cplx{value.get<double>(), 0.0};
    } else if (value.is_array() && value.size() == 2) {
      coeffs[m] = cplx{value[0].get<double>(), value[1].get<double>()};
    } else {
      throw ValidationError("potential coefficient " + key + " must be a number or [re, im]");
    }
  }
  return fibre::potential_from_spec(coeffs, order);
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  static const std::vector<std::string> known = {"potential", "mu",        "alphas",
                                                 "spacing",   "cutoff",    "functions",
                                                 "edge_tol",  "touch_tol", "classification",
                                                 "output"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("unknown config field '" + key + "'");
    }
  }
  for (const char* required : {"potential", "mu", "alphas", "functions"}) {
    if (!j.contains(required)) {
      throw ValidationError(std::string("config is missing '") + required + "'");
    }
  }
  ExperimentConfig cfg;
  try {
    cfg.potential = j.at("potential");
    cfg.mu = j.at("mu").get<double>();
    cfg.alphas = j.at("alphas").get<std::vector<double>>();
    cfg.functions = j.at("functions").get<std::vector<std::string>>();
    cfg.spacing = j.value("spacing", cfg.spacing);
    cfg.cutoff = j.value("cutoff", cfg.cutoff);
    cfg.edge_tol = j.value("edge_tol", cfg.edge_tol);
    cfg.touch_tol = j.value("touch_tol", cfg.touch_tol);
    if (j.contains("classification")) cfg.classification = j.at("classification").get<std::string>();
    cfg.output = j.value("output", std::string{});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json j;
  j["potential"] = potential;
  j["mu"] = mu;
  j["alphas"] = alphas;
  j["spacing"] = spacing;
  j["cutoff"] = cutoff;
  j["functions"] = functions;
  j["edge_tol"] = edge_tol;
  j["touch_tol"] = touch_tol;
  if (classification) j["classification"] = *classification;
  if (!output.empty()) j["output"] = output;
  return j;
}

void ExperimentConfig::validate() const {
  if (functions.empty()) throw ValidationError("config lists no test functions");
  if (alphas.empty()) throw ValidationError("config lists no alphas");
  if (alphas.front() < 5.0) throw ValidationError("alphas must be >= 5");
  for (std::size_t i = 1; i < alphas.size(); ++i) {
    if (!(alphas[i] > alphas[i - 1])) throw ValidationError("alphas must increase strictly");
  }
  if (!(spacing > 0.0)) throw ValidationError("spacing must be positive");
  if (cutoff < 1) throw ValidationError("cutoff must be >= 1");
  if (!(edge_tol >= 0.0) || !(touch_tol >= 0.0)) throw ValidationError("tolerances must be >= 0");
  for (const auto& f : functions) (void)TestFunction::parse(f);
  if (classification) (void)parse_class(*classification);
  (void)potential_from_json(potential);
}

std::string ExperimentConfig::hash() const {
  auto text = to_json();
  text.erase("output");
  const std::string s = text.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Problem prepare_problem(const fibre::PeriodicPotential& potential, double mu, int cutoff,
                        double touch_tol, double edge_tol) {
  if (!std::isfinite(mu)) throw ValidationError("mu must be finite");
  const double bottom = fibre::fibre_eigenvalues(potential, 0.0, cutoff)(0);
  const double e_max = std::max(mu, bottom) + 1.0;
  Problem p;
  p.mu = mu;
  p.bands = bands::group_genuine(bands::compute_bands(potential, e_max, cutoff), touch_tol);
  p.classification = bands::classify_mu(p.bands, mu, edge_tol);
  p.ids = bands::integrated_density_of_states(p.bands, mu);
  return p;
}

std::vector<SweepRow> SweepResult::rows_for(const std::string& function) const {
  std::vector<SweepRow> out;
  for (const auto& r : rows) {
    if (r.function == function) out.push_back(r);
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto potential = potential_from_json(cfg.potential);
  const auto problem = prepare_problem(potential, cfg.mu, cfg.cutoff, cfg.touch_tol, cfg.edge_tol);
  const auto kind = problem.classification.kind;
  if (cfg.classification && parse_class(*cfg.classification) != kind) {
    throw ValidationError("config asserts mu is " + *cfg.classification + " but it classifies as " +
                          bands::to_string(kind));
  }
  if (kind == bands::MuClass::Edge) {
    throw std::domain_error("theorem dichotomy undefined at edge within edge_tol");
  }

  SweepResult res;
  res.config_hash = cfg.hash();
  res.classification = kind;
  res.mu = cfg.mu;
  res.ids = problem.ids;
  std::vector<TestFunction> fns;
  for (const auto& id : cfg.functions) {
    fns.push_back(TestFunction::parse(id));
    res.widom[id] = finsec::widom_coefficient(fns.back());
    res.h_at_one[id] = fns.back().at_one();
  }

  kernel::KernelOptions options;
  options.alpha_max = cfg.alphas.back();
  options.edge_tol = cfg.edge_tol;
  const auto ev = kernel::make_evaluator(problem.bands, cfg.mu, options);

  std::ofstream csv;
  std::ofstream timing;
  if (!cfg.output.empty()) {
    const std::filesystem::path prefix(cfg.output);
    if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
    csv.open(cfg.output + ".csv");
    timing.open(cfg.output + "_timing.csv");
    if (!csv || !timing) throw std::runtime_error("cannot write sweep output at " + cfg.output);
    csv << "alpha,function,trace,eigencount\n" << std::flush;
    timing << "alpha,assembly_seconds,eigensolve_seconds\n" << std::flush;
  }

  for (double alpha : cfg.alphas) {
    const auto t0 = Clock::now();
    const auto section = finsec::assemble_section(ev, alpha, cfg.spacing);
    const double t_assembly = seconds_since(t0);
    const auto t1 = Clock::now();
    const auto spectrum = finsec::section_spectrum(section);
    const double t_eigen = seconds_since(t1);
    const int count = static_cast<int>(std::count_if(spectrum.eigenvalues.begin(),
                                                     spectrum.eigenvalues.end(),
                                                     [](double l) { return l > 0.5; }));
    for (std::size_t f = 0; f < fns.size(); ++f) {
      SweepRow row{alpha, cfg.functions[f], finsec::trace_h(spectrum, fns[f]), count,
                   t_assembly + t_eigen};
      if (!std::isfinite(row.trace)) throw std::runtime_error("non-finite trace at alpha " + format_double(alpha));
      if (csv.is_open()) {
        csv << format_double(row.alpha) << ',' << row.function << ',' << format_double(row.trace)
            << ',' << row.eigencount << '\n'
            << std::flush;
      }
      res.rows.push_back(std::move(row));
    }
    if (timing.is_open()) {
      timing << format_double(alpha) << ',' << t_assembly << ',' << t_eigen << '\n' << std::flush;
    }
  }

  if (!cfg.output.empty()) {
    json meta;
    meta["config"] = cfg.to_json();
    meta["config_hash"] = res.config_hash;
    meta["classification"] = bands::to_string(kind);
    meta["mu"] = res.mu;
    meta["ids"] = res.ids;
    meta["widom"] = res.widom;
    meta["h_at_one"] = res.h_at_one;
    std::ofstream(cfg.output + "_meta.json") << meta.dump(2) << '\n';
  }
  return res;
}

SweepResult read_sweep(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error("cannot open sweep CSV " + csv.string());
  SweepResult res;
  res.ids = std::numeric_limits<double>::quiet_NaN();
  std::string line;
  if (!std::getline(in, line) || line != "alpha,function,trace,eigencount") {
    throw ValidationError(csv.string() + " lacks the sweep CSV header");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 4) {
      throw ValidationError(csv.string() + ":" + std::to_string(lineno) + ": expected 4 columns");
    }
    try {
      res.rows.push_back({std::stod(cells[0]), cells[1], std::stod(cells[2]), std::stoi(cells[3]), 0.0});
    } catch (const std::exception&) {
      throw ValidationError(csv.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }

  const auto meta_path = std::filesystem::path(prefix_of(csv) + "_meta.json");
  if (std::filesystem::exists(meta_path)) {
    std::ifstream mf(meta_path);
    const auto meta = json::parse(mf);
    res.config_hash = meta.value("config_hash", std::string{});
    res.classification = parse_class(meta.at("classification").get<std::string>());
    res.mu = meta.at("mu").get<double>();
    res.ids = meta.at("ids").get<double>();
    res.widom = meta.at("widom").get<std::map<std::string, double>>();
    res.h_at_one = meta.at("h_at_one").get<std::map<std::string, double>>();
  }
  for (const auto& r : res.rows) {
    if (!res.widom.count(r.function)) {
      const auto h = TestFunction::parse(r.function);
      res.widom[r.function] = finsec::widom_coefficient(h);
      res.h_at_one[r.function] = h.at_one();
    }
  }
  return res;
}

FitReport fit_asymptotics(const SweepResult& res, const std::string& function, double alpha_min) {
  std::vector<SweepRow> rows;
  for (const auto& r : res.rows_for(function)) {
    if (r.alpha >= alpha_min) rows.push_back(r);
  }
  if (rows.size() < 4) {
    throw ValidationError("fit for '" + function + "' needs >= 4 rows with alpha >= " +
                          format_double(alpha_min) + ", have " + std::to_string(rows.size()));
  }

  double h1 = 0.0;
  if (auto it = res.h_at_one.find(function); it != res.h_at_one.end()) {
    h1 = it->second;
  } else {
    h1 = TestFunction::parse(function).at_one();
  }
  FitReport fr;
  fr.function = function;
  fr.alpha_min = alpha_min;
  fr.rows_used = static_cast<int>(rows.size());
  fr.linear_dropped = (h1 == 0.0);

  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index cols = fr.linear_dropped ? 2 : 3;
  Eigen::MatrixXd design(m, cols);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double a = rows[static_cast<std::size_t>(i)].alpha;
    Eigen::Index c = 0;
    if (!fr.linear_dropped) design(i, c++) = a;
    design(i, c++) = std::log(a);
    design(i, c) = 1.0;
    rhs(i) = rows[static_cast<std::size_t>(i)].trace;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < cols) {
    throw ValidationError("fit design is rank deficient for '" + function +
                          "' (too few distinct alpha values)");
  }
  const Eigen::VectorXd x = qr.solve(rhs);
  Eigen::Index c = 0;
  fr.a = fr.linear_dropped ? 0.0 : x(c++);
  fr.b = x(c++);
  fr.c = x(c);
  fr.residual_rms = std::sqrt((design * x - rhs).squaredNorm() / static_cast<double>(m));

  fr.a_target = 2.0 * h1 * res.ids;
  if (h1 == 0.0) fr.a_target = 0.0;
  if (auto it = res.widom.find(function); it != res.widom.end()) {
    fr.b_target = it->second;
  } else {
    fr.b_target = finsec::widom_coefficient(TestFunction::parse(function));
  }
  if (std::isfinite(fr.a_target) && fr.a_target != 0.0) {
    fr.a_deviation = std::abs(fr.a - fr.a_target) / std::abs(fr.a_target);
  }
  if (fr.b_target != 0.0) fr.b_deviation = std::abs(fr.b - fr.b_target) / std::abs(fr.b_target);
  return fr;
}

GapCheck gap_boundedness_check(const SweepResult& res, const std::string& function,
                               double bound_window) {
  if (res.classification != bands::MuClass::Gap) {
    throw std::domain_error("gap boundedness check needs mu in a spectral gap");
  }
  const auto rows = res.rows_for(function);
  if (rows.empty()) throw ValidationError("no sweep rows for '" + function + "'");
  const double h1 = res.h_at_one.count(function) ? res.h_at_one.at(function)
                                                 : TestFunction::parse(function).at_one();
  if (h1 != 0.0 && !std::isfinite(res.ids)) {
    throw ValidationError("N(mu) unknown; cannot subtract the linear term for '" + function + "'");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : rows) {
    const double v = r.trace - (h1 == 0.0 ? 0.0 : 2.0 * r.alpha * h1 * res.ids);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  GapCheck g;
  g.function = function;
  g.bound_window = bound_window;
  g.range = hi - lo;
  g.pass = g.range <= bound_window;
  return g;
}

}  // namespace bandtrace::experiments
