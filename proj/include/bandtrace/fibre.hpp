#pragma once

// Periodic potentials and the Floquet-Bloch fibre operators
//
//   H(k) = -d^2/dx^2 + V(x)  on (0, 2 pi),  f(2 pi) = e^{2 pi i k} f(0),
//
// discretized in the plane-wave basis e^{i(n+k)x} / sqrt(2 pi), |n| <= N.

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace bandtrace {

using cplx = std::complex<double>;

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EigensolverError : public std::runtime_error {
 public:
  EigensolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

namespace fibre {

inline constexpr int kDefaultCutoff = 64;
inline constexpr double kResidualTol = 1e-10;

// Real 2 pi-periodic potential V(x) = sum_{|m| <= M} v_m e^{imx}.
class PeriodicPotential {
 public:
  PeriodicPotential() = default;

  static PeriodicPotential zero(int order = 0);
  // V(x) = 2 A cos(x): v_{+1} = v_{-1} = A.
  static PeriodicPotential cosine(double amplitude, int order = 1);
  // Coefficients not listed are zero. Throws ValidationError naming the first m
  // with v_{-m} != conj(v_m).
  static PeriodicPotential from_coefficients(const std::map<int, cplx>& coefficients,
                                             int order = 0, double tol = 1e-12);

  int order() const { return order_; }
  cplx coefficient(int m) const;
  double value(double x) const;
  bool is_zero() const;
  std::string describe() const;

 private:
  int order_ = 0;
  std::vector<cplx> coefficients_{cplx{0.0}};  // index m + order_
  std::string label_ = "zero";
};

// Presets: "zero", "cosine(A)".
PeriodicPotential potential_from_spec(std::string_view preset, int order = 0);
PeriodicPotential potential_from_spec(const std::map<int, cplx>& coefficients, int order = 0);

// Maps k onto the circle representative in [-1/2, 1/2).
double reduce_quasi_momentum(double k);

struct FibreMatrix {
  double k = 0.0;
  int cutoff = 0;
  Eigen::MatrixXcd h;  // rows/cols n = -N..N
};

// Entry (m, n) = (n + k)^2 delta_{mn} + v_{m-n}. Requires N >= M and k in [-1/2, 1/2).
FibreMatrix assemble_fibre_matrix(const PeriodicPotential& potential, double k, int cutoff);

struct FibreEigenSystem {
  double k = 0.0;
  int cutoff = 0;
  Eigen::VectorXd eigenvalues;    // ascending
  Eigen::MatrixXcd eigenvectors;  // column j-1 holds c^{(j)}_n, n = -N..N
  double residual_tol = 0.0;      // achieved max ||Hc - lambda c|| / ||H||

  int dimension() const { return static_cast<int>(eigenvalues.size()); }
  double eigenvalue(int j) const;  // 1-based
};

FibreEigenSystem solve_fibre(const FibreMatrix& matrix);
// Convenience: reduces k, assembles and solves.
FibreEigenSystem solve_fibre(const PeriodicPotential& potential, double k,
                             int cutoff = kDefaultCutoff);

// Eigenvalues only (ascending), k reduced first.
Eigen::VectorXd fibre_eigenvalues(const PeriodicPotential& potential, double k,
                                  int cutoff = kDefaultCutoff);

// A single Bloch function written against an unreduced quasi-momentum K:
//   phi(x) = e^{iKx} sum_p a_p e^{ipx} / sqrt(2 pi).
// The periodic part E(x) = e^{-iKx} phi(x) has Fourier coefficients a_p.
class BlochFunction {
 public:
  BlochFunction() = default;
  BlochFunction(double quasi_momentum, int p_min, std::vector<cplx> coefficients);

  // Band j (1-based) of `system`, relabelled to quasi-momentum K; K - system.k
  // must be an integer.
  static BlochFunction from_eigensystem(const FibreEigenSystem& system, int j, double K);

  double quasi_momentum() const { return quasi_momentum_; }
  int p_min() const { return p_min_; }
  int p_max() const { return p_min_ + static_cast<int>(coefficients_.size()) - 1; }
  const std::vector<cplx>& coefficients() const { return coefficients_; }

  cplx operator()(double x) const;
  cplx derivative(double x) const;
  cplx periodic_part(double x) const;
  cplx periodic_part_derivative(double x) const;

  // sum_p conj(a_p) b_p over the common index range (L^2(0, 2pi) pairing of
  // the periodic parts, normalized so that <E, E> = 1).
  cplx overlap(const BlochFunction& other) const;
  double norm() const;

  BlochFunction& scale(cplx factor);
  // The function x -> conj(phi(x)), written against quasi-momentum 2c - K where
  // 2c is an integer (c = k_j in {0, 1/2}).
  BlochFunction conjugate_reflection(double center) const;

 private:
  double quasi_momentum_ = 0.0;
  int p_min_ = 0;
  std::vector<cplx> coefficients_;
};

// phi_j(x, k) = sum_n c_n^{(j)} e^{i(n+k)x} / sqrt(2 pi).
cplx bloch_eval(const FibreEigenSystem& system, int j, double x);

struct PeriodicPartValue {
  cplx value;       // e_j(x, k) = e^{-ikx} phi_j(x, k)
  cplx derivative;  // d e_j / dx
};
PeriodicPartValue periodic_part(const FibreEigenSystem& system, int j, double x);

}  // namespace fibre
}  // namespace bandtrace
