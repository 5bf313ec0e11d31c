#pragma once

// Finite sections B = chi_(-a, a) P_mu chi_(-a, a), discretized by Nystroem's
// method on composite Gauss-Legendre panels, and trace functionals of them.

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bandtrace/kernel.hpp"
#include "bandtrace/test_function.hpp"

namespace bandtrace::finsec {

inline constexpr double kDefaultSpacing = 0.125;
inline constexpr int kSectionPanelOrder = 8;
inline constexpr double kSpecTol = 1e-6;
inline constexpr double kLwSpecTol = 1e-4;

// Largest admissible node spacing for Fermi energy mu: min(0.2, pi / (4 sqrt(mu))).
double max_spacing(double mu);

struct FiniteSection {
  double alpha = 0.0;
  std::vector<double> nodes;
  std::vector<double> weights;
  Eigen::MatrixXd matrix;  // sqrt(w_i) P(x_i, x_j) sqrt(w_j), symmetric
  double symmetry_deviation = 0.0;
};

// Composite Gauss-Legendre nodes on (-alpha, alpha): 8-point panels, mean spacing <= `spacing`.
std::pair<std::vector<double>, std::vector<double>> section_nodes(double alpha, double spacing);

FiniteSection assemble_section(const kernel::KernelEvaluator& ev, double alpha,
                               double spacing = kDefaultSpacing);

struct SectionSpectrum {
  std::vector<double> eigenvalues;  // descending
  double spec_tol = kSpecTol;

  std::size_t size() const { return eigenvalues.size(); }
  double clamped(std::size_t i) const;
};

// Eigenvalues of a symmetric matrix (lower triangle read); throws unless all lie in
// [-spec_tol, 1 + spec_tol].
SectionSpectrum section_spectrum(const FiniteSection& section, double spec_tol = kSpecTol);
SectionSpectrum symmetric_spectrum(const Eigen::MatrixXd& matrix, double spec_tol = kSpecTol);

// sum_i h(clamp(lambda_i)), summed in ascending eigenvalue index.
double trace_h(const SectionSpectrum& spectrum, const TestFunction& h);

// sum_i (lambda_i (1 - lambda_i))^q over clamped eigenvalues, q in (0, 1].
double schatten_q(const SectionSpectrum& spectrum, double q);

// W(h) = pi^{-2} int_0^1 [h(t) - t h(1)] / (t (1 - t)) dt.
double widom_coefficient(const TestFunction& h);

// (W(p_n), W(q_n)).
std::pair<double, double> widom_halving_check(int n);

// Eigenvalues (descending) of the Nystroem matrix of D_alpha^+, positivity-guarded at 1e-4.
std::vector<double> lw_spectrum(double alpha, double spacing);
// tr (D_alpha^+)^n = sum lambda_i^n.
double lw_trace(double alpha, int n, double spacing);
double lw_trace_from_spectrum(const std::vector<double>& eigenvalues, int n);

}  // namespace bandtrace::finsec
