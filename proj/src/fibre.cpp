#include "bandtrace/fibre.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace bandtrace::fibre {

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

double parse_double(std::string_view text, std::string_view context) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  while (begin != end && *begin == ' ') ++begin;
  while (end != begin && *(end - 1) == ' ') --end;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError("cannot parse number '" + std::string(text) + "' in " +
                          std::string(context));
  }
  return value;
}

// sum_{p = p_min}^{p_min + len - 1} a_p e^{ipx}, and optionally sum i p a_p e^{ipx}.
void periodic_sum(const cplx* a, int len, int p_min, double x, cplx& value, cplx* derivative) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double xr = x - two_pi * std::floor(x / two_pi);
  const cplx step = std::polar(1.0, xr);
  cplx z = std::polar(1.0, p_min * xr);
  cplx s{0.0};
  cplx ds{0.0};
  for (int i = 0; i < len; ++i) {
    const cplx term = a[i] * z;
    s += term;
    if (derivative) ds += cplx(0.0, static_cast<double>(p_min + i)) * term;
    z *= step;
  }
  value = s;
  if (derivative) *derivative = ds;
}

}  // namespace

PeriodicPotential PeriodicPotential::zero(int order) {
  PeriodicPotential v;
  v.order_ = std::max(order, 0);
  v.coefficients_.assign(2 * v.order_ + 1, cplx{0.0});
  v.label_ = "zero";
  return v;
}

PeriodicPotential PeriodicPotential::cosine(double amplitude, int order) {
  PeriodicPotential v = zero(std::max(order, 1));
  v.coefficients_[v.order_ + 1] = amplitude;
  v.coefficients_[v.order_ - 1] = amplitude;
  std::ostringstream os;
  os.precision(17);
  os << "cosine(" << amplitude << ")";
  v.label_ = os.str();
  return v;
}

PeriodicPotential PeriodicPotential::from_coefficients(const std::map<int, cplx>& coefficients,
                                                       int order, double tol) {
  int m_max = std::max(order, 0);
  for (const auto& [m, c] : coefficients) m_max = std::max(m_max, std::abs(m));
  PeriodicPotential v = zero(m_max);
  for (const auto& [m, c] : coefficients) v.coefficients_[m + m_max] = c;
  for (int m = 0; m <= m_max; ++m) {
    const cplx plus = v.coefficient(m);
    const cplx minus = v.coefficient(-m);
    const double scale = std::max(1.0, std::max(std::abs(plus), std::abs(minus)));
    if (std::abs(minus - std::conj(plus)) > tol * scale) {
      std::ostringstream os;
      os << "potential coefficients violate reality at m = " << m << ": v_{-" << m
         << "} != conj(v_" << m << ")";
      throw ValidationError(os.str());
    }
  }
  v.label_ = "coefficients";
  return v;
}

cplx PeriodicPotential::coefficient(int m) const {
  if (std::abs(m) > order_) return cplx{0.0};
  return coefficients_[m + order_];
}

double PeriodicPotential::value(double x) const {
  cplx s{0.0};
  for (int m = -order_; m <= order_; ++m) s += coefficient(m) * std::polar(1.0, m * x);
  return s.real();
}

bool PeriodicPotential::is_zero() const {
  return std::all_of(coefficients_.begin(), coefficients_.end(),
                     [](cplx c) { return c == cplx{0.0}; });
}

std::string PeriodicPotential::describe() const { return label_; }

PeriodicPotential potential_from_spec(std::string_view preset, int order) {
  if (preset == "zero") return PeriodicPotential::zero(order);
  constexpr std::string_view prefix = "cosine(";
  if (preset.starts_with(prefix) && preset.ends_with(")")) {
    const auto inner = preset.substr(prefix.size(), preset.size() - prefix.size() - 1);
    return PeriodicPotential::cosine(parse_double(inner, preset), std::max(order, 1));
  }
  throw ValidationError("unknown potential preset '" + std::string(preset) +
                        "' (expected \"zero\" or \"cosine(A)\")");
}

PeriodicPotential potential_from_spec(const std::map<int, cplx>& coefficients, int order) {
  return PeriodicPotential::from_coefficients(coefficients, order);
}

double reduce_quasi_momentum(double k) {
  double r = k - std::floor(k + 0.5);
  if (r >= 0.5) r -= 1.0;
  return r;
}

FibreMatrix assemble_fibre_matrix(const PeriodicPotential& potential, double k, int cutoff) {
  if (cutoff < potential.order()) {
    std::ostringstream os;
    os << "cutoff N = " << cutoff << " is below the potential order M = " << potential.order()
       << "; coefficients would be truncated";
    throw std::invalid_argument(os.str());
  }
  if (!(k >= -0.5 && k < 0.5)) {
    throw std::domain_error("quasi-momentum must lie in [-1/2, 1/2)");
  }
  const int dim = 2 * cutoff + 1;
  FibreMatrix out{k, cutoff, Eigen::MatrixXcd::Zero(dim, dim)};
  for (int row = 0; row < dim; ++row) {
    const int m = row - cutoff;
    for (int col = 0; col < dim; ++col) {
      const int n = col - cutoff;
      out.h(row, col) = potential.coefficient(m - n);
    }
    out.h(row, row) += (m + k) * (m + k);
  }
  return out;
}

double FibreEigenSystem::eigenvalue(int j) const {
  if (j < 1 || j > dimension()) throw std::out_of_range("band index out of range");
  return eigenvalues(j - 1);
}

FibreEigenSystem solve_fibre(const FibreMatrix& matrix) {
  const auto& h = matrix.h;
  if (h.rows() != h.cols() || h.rows() == 0) {
    throw std::invalid_argument("solve_fibre: matrix must be square and non-empty");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw EigensolverError("Hermitian eigensolver did not converge", std::nan(""));
  }
  FibreEigenSystem out;
  out.k = matrix.k;
  out.cutoff = matrix.cutoff;
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();

  const double h_norm = std::max(out.eigenvalues.cwiseAbs().maxCoeff(), 1e-300);
  const Eigen::MatrixXcd r = h * out.eigenvectors - out.eigenvectors * out.eigenvalues.asDiagonal();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < r.cols(); ++j) worst = std::max(worst, r.col(j).norm());
  out.residual_tol = worst / h_norm;
  if (out.residual_tol > kResidualTol) {
    std::ostringstream os;
    os << "eigensolver residual " << out.residual_tol << " exceeds " << kResidualTol;
    throw EigensolverError(os.str(), out.residual_tol);
  }
  return out;
}

FibreEigenSystem solve_fibre(const PeriodicPotential& potential, double k, int cutoff) {
  return solve_fibre(assemble_fibre_matrix(potential, reduce_quasi_momentum(k), cutoff));
}

Eigen::VectorXd fibre_eigenvalues(const PeriodicPotential& potential, double k, int cutoff) {
  const auto m = assemble_fibre_matrix(potential, reduce_quasi_momentum(k), cutoff);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m.h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw EigensolverError("Hermitian eigensolver did not converge", std::nan(""));
  }
  return solver.eigenvalues();
}

BlochFunction::BlochFunction(double quasi_momentum, int p_min, std::vector<cplx> coefficients)
    : quasi_momentum_(quasi_momentum), p_min_(p_min), coefficients_(std::move(coefficients)) {}

BlochFunction BlochFunction::from_eigensystem(const FibreEigenSystem& system, int j, double K) {
  if (j < 1 || j > system.dimension()) throw std::out_of_range("band index out of range");
  const double shift_real = K - system.k;
  const long shift = std::lround(shift_real);
  if (std::abs(shift_real - static_cast<double>(shift)) > 1e-9) {
    throw std::invalid_argument("BlochFunction: K - k must be an integer");
  }
  // e^{i(n+k)x} = e^{iKx} e^{i(n - shift)x}
  std::vector<cplx> a(system.dimension());
  for (int i = 0; i < system.dimension(); ++i) a[i] = system.eigenvectors(i, j - 1);
  return BlochFunction(K, -system.cutoff - static_cast<int>(shift), std::move(a));
}

cplx BlochFunction::periodic_part(double x) const {
  cplx v;
  periodic_sum(coefficients_.data(), static_cast<int>(coefficients_.size()), p_min_, x, v, nullptr);
  return v * kInvSqrt2Pi;
}

cplx BlochFunction::periodic_part_derivative(double x) const {
  cplx v;
  cplx d;
  periodic_sum(coefficients_.data(), static_cast<int>(coefficients_.size()), p_min_, x, v, &d);
  return d * kInvSqrt2Pi;
}

cplx BlochFunction::operator()(double x) const {
  return std::polar(1.0, quasi_momentum_ * x) * periodic_part(x);
}

cplx BlochFunction::derivative(double x) const {
  cplx v;
  cplx d;
  periodic_sum(coefficients_.data(), static_cast<int>(coefficients_.size()), p_min_, x, v, &d);
  return std::polar(1.0, quasi_momentum_ * x) * (cplx(0.0, quasi_momentum_) * v + d) * kInvSqrt2Pi;
}

cplx BlochFunction::overlap(const BlochFunction& other) const {
  const int lo = std::max(p_min(), other.p_min());
  const int hi = std::min(p_max(), other.p_max());
  cplx s{0.0};
  for (int p = lo; p <= hi; ++p) {
    s += std::conj(coefficients_[p - p_min_]) * other.coefficients_[p - other.p_min_];
  }
  return s;
}

double BlochFunction::norm() const {
  double s = 0.0;
  for (const auto& c : coefficients_) s += std::norm(c);
  return std::sqrt(s);
}

BlochFunction& BlochFunction::scale(cplx factor) {
  for (auto& c : coefficients_) c *= factor;
  return *this;
}

BlochFunction BlochFunction::conjugate_reflection(double center) const {
  const double twice = 2.0 * center;
  const long shift = std::lround(twice);
  if (std::abs(twice - static_cast<double>(shift)) > 1e-12) {
    throw std::invalid_argument("conjugate_reflection: 2 * center must be an integer");
  }
  // conj(phi)(x) = e^{-iKx} sum conj(a_p) e^{-ipx}
  //             = e^{i(2c - K)x} sum conj(a_p) e^{i(-p - 2c)x}
  const int len = static_cast<int>(coefficients_.size());
  std::vector<cplx> b(len);
  for (int i = 0; i < len; ++i) b[len - 1 - i] = std::conj(coefficients_[i]);
  const int new_p_min = -p_max() - static_cast<int>(shift);
  return BlochFunction(twice - quasi_momentum_, new_p_min, std::move(b));
}

cplx bloch_eval(const FibreEigenSystem& system, int j, double x) {
  return BlochFunction::from_eigensystem(system, j, system.k)(x);
}

PeriodicPartValue periodic_part(const FibreEigenSystem& system, int j, double x) {
  const auto f = BlochFunction::from_eigensystem(system, j, system.k);
  return {f.periodic_part(x), f.periodic_part_derivative(x)};
}

}  // namespace bandtrace::fibre
