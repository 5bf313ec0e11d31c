#pragma once

// Config-driven alpha sweeps of tr h(B_{alpha,mu}), asymptotic fits against
//   tr h(B) ~ 2 alpha h(1) N(mu) + W(h) log alpha,
// and gap-boundedness checks.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bandtrace/bands.hpp"
#include "bandtrace/finsec.hpp"
#include "bandtrace/kernel.hpp"

namespace bandtrace::experiments {

struct ExperimentConfig {
  nlohmann::json potential;  // {"preset": "cosine(1)"} or {"coefficients": {"1": 1.0, ...}}
  double mu = 0.0;
  std::vector<double> alphas;
  double spacing = finsec::kDefaultSpacing;
  int cutoff = fibre::kDefaultCutoff;
  std::vector<std::string> functions;
  double edge_tol = bands::kDefaultEdgeTol;
  double touch_tol = bands::kDefaultTouchTol;
  std::optional<std::string> classification;  // asserted against the computed class
  std::string output;                         // path prefix; empty = no files

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
  std::string hash() const;  // FNV-1a of the canonical JSON, hex
};

// Accepts {"preset": ...} or {"coefficients": {m: re | [re, im]}}.
fibre::PeriodicPotential potential_from_json(const nlohmann::json& j, int order = 0);

// Band structure reaching safely above mu, grouped into genuine bands.
struct Problem {
  bands::BandStructure bands;
  bands::Classification classification;
  double mu = 0.0;
  double ids = 0.0;  // N(mu; H)
};

Problem prepare_problem(const fibre::PeriodicPotential& potential, double mu,
                        int cutoff = fibre::kDefaultCutoff,
                        double touch_tol = bands::kDefaultTouchTol,
                        double edge_tol = bands::kDefaultEdgeTol);

struct SweepRow {
  double alpha = 0.0;
  std::string function;
  double trace = 0.0;
  int eigencount = 0;  // eigenvalues above 1/2
  double wall_seconds = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string config_hash;
  bands::MuClass classification = bands::MuClass::Gap;
  double mu = 0.0;
  double ids = 0.0;
  std::map<std::string, double> widom;     // W(h) per function id
  std::map<std::string, double> h_at_one;  // h(1) per function id

  std::vector<SweepRow> rows_for(const std::string& function) const;
};

// Sweeps cfg.alphas in ascending order. With a non-empty output prefix, writes
// <prefix>.csv row by row (alpha,function,trace,eigencount), <prefix>_timing.csv
// and <prefix>_meta.json.
SweepResult run_sweep(const ExperimentConfig& cfg);

// Reads a sweep CSV (and <prefix>_meta.json next to it, if present).
SweepResult read_sweep(const std::filesystem::path& csv);

struct FitReport {
  std::string function;
  double alpha_min = 0.0;
  int rows_used = 0;
  bool linear_dropped = false;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double residual_rms = 0.0;
  double a_target = 0.0;  // 2 h(1) N(mu)
  double b_target = 0.0;  // W(h)
  std::optional<double> a_deviation;  // relative, when a_target != 0
  std::optional<double> b_deviation;
};

inline constexpr double kDefaultAlphaMin = 25.0;

FitReport fit_asymptotics(const SweepResult& res, const std::string& function,
                          double alpha_min = kDefaultAlphaMin);

struct GapCheck {
  std::string function;
  double bound_window = 0.0;
  double range = 0.0;  // max - min of trace - 2 alpha h(1) N
  bool pass = false;
};

GapCheck gap_boundedness_check(const SweepResult& res, const std::string& function,
                               double bound_window);

// 17 significant digits, shortest form.
std::string format_double(double v);

}  // namespace bandtrace::experiments
