#include "bandtrace/finsec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <lapacke.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "bandtrace/quadrature.hpp"

namespace bandtrace::finsec {

namespace {

constexpr std::size_t kBlockColumns = 256;

// Ascending eigenvalues of the symmetric matrix whose lower triangle is `a` (destroyed).
std::vector<double> dsyevd_values(Eigen::MatrixXd& a) {
  const auto n = static_cast<lapack_int>(a.rows());
  std::vector<double> w(static_cast<std::size_t>(n));
  if (n == 0) return w;
  // Eigen is column-major: its lower triangle is LAPACK's 'L'.
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, a.data(), n, w.data());
  if (info != 0) {
    throw EigensolverError("dsyevd failed with info = " + std::to_string(info),
                           static_cast<double>(info));
  }
  return w;
}

}  // namespace

double max_spacing(double mu) {
  double bound = 0.2;
  if (mu > 0.0) bound = std::min(bound, std::numbers::pi / (4.0 * std::sqrt(mu)));
  return bound;
}

std::pair<std::vector<double>, std::vector<double>> section_nodes(double alpha, double spacing) {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(spacing > 0.0)) throw ValidationError("spacing must be positive");
  const int panels = std::max(
      1, static_cast<int>(std::ceil(2.0 * alpha / (kSectionPanelOrder * spacing) - 1e-12)));
  const auto rule = composite_gauss_legendre(-alpha, alpha, panels, kSectionPanelOrder);
  return {rule.nodes, rule.weights};
}

FiniteSection assemble_section(const kernel::KernelEvaluator& ev, double alpha, double spacing) {
  const double bound = max_spacing(ev.mu());
  if (spacing > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "node spacing " << spacing << " exceeds the admissible bound " << bound
       << " for mu = " << ev.mu();
    throw ValidationError(os.str());
  }
  if (alpha > ev.alpha_max() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "alpha = " << alpha << " exceeds the evaluator's alpha_max = " << ev.alpha_max();
    throw ValidationError(os.str());
  }

  FiniteSection sec;
  sec.alpha = alpha;
  std::tie(sec.nodes, sec.weights) = section_nodes(alpha, spacing);
  const auto n = static_cast<Eigen::Index>(sec.nodes.size());
  std::vector<double> scale(sec.nodes.size());
  for (std::size_t i = 0; i < scale.size(); ++i) scale[i] = std::sqrt(sec.weights[i]);

  // B = Re(G G^*) = Gr Gr^T + Gi Gi^T, accumulated over column blocks.
  sec.matrix = Eigen::MatrixXd::Zero(n, n);
  const std::size_t total = ev.columns().size();
  for (std::size_t first = 0; first < total; first += kBlockColumns) {
    const std::size_t count = std::min(kBlockColumns, total - first);
    const Eigen::MatrixXcd g = ev.factor(sec.nodes, scale, first, count);
    const Eigen::MatrixXd gr = g.real();
    sec.matrix.selfadjointView<Eigen::Lower>().rankUpdate(gr);
    const Eigen::MatrixXd gi = g.imag();
    sec.matrix.selfadjointView<Eigen::Lower>().rankUpdate(gi);
  }
  sec.matrix.triangularView<Eigen::StrictlyUpper>() = sec.matrix.transpose();
  sec.symmetry_deviation = (sec.matrix - sec.matrix.transpose()).cwiseAbs().maxCoeff();
  if (sec.symmetry_deviation > 1e-10) {
    throw EigensolverError("finite section is not symmetric", sec.symmetry_deviation);
  }
  return sec;
}

double SectionSpectrum::clamped(std::size_t i) const {
  return std::clamp(eigenvalues.at(i), 0.0, 1.0);
}

SectionSpectrum symmetric_spectrum(const Eigen::MatrixXd& matrix, double spec_tol) {
  Eigen::MatrixXd work = matrix;
  auto w = dsyevd_values(work);
  std::reverse(w.begin(), w.end());
  if (!w.empty() && (w.front() > 1.0 + spec_tol || w.back() < -spec_tol)) {
    std::ostringstream os;
    os.precision(17);
    os << "section spectrum [" << w.back() << ", " << w.front() << "] leaves [-" << spec_tol
       << ", 1 + " << spec_tol << "]; refine the discretization";
    throw EigensolverError(os.str(), std::max(w.front() - 1.0, -w.back()));
  }
  return SectionSpectrum{std::move(w), spec_tol};
}

SectionSpectrum section_spectrum(const FiniteSection& section, double spec_tol) {
  return symmetric_spectrum(section.matrix, spec_tol);
}

double trace_h(const SectionSpectrum& spectrum, const TestFunction& h) {
  double s = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) s += h(spectrum.clamped(i));
  return s;
}

double schatten_q(const SectionSpectrum& spectrum, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("Schatten index q must lie in (0, 1]");
  double s = 0.0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const double l = spectrum.clamped(i);
    s += std::pow(l * (1.0 - l), q);
  }
  return s;
}

double widom_coefficient(const TestFunction& h) {
  const double h1 = h.at_one();
  // t = s^2 on [0, 1/2] and t = 1 - s^2 on [1/2, 1] tame the endpoint singularities.
  auto left = [&](double s) {
    const double t = s * s;
    return 2.0 * (h(t) - t * h1) / (s * (1.0 - t));
  };
  auto right = [&](double s) {
    const double u = s * s;
    return 2.0 * (h.reflected(u) - (1.0 - u) * h1) / ((1.0 - u) * s);
  };
  const double top = std::sqrt(0.5);
  boost::math::quadrature::tanh_sinh<double> integrator(15, 1e-100);  // keep t = s^2 above underflow
  double err_l = 0.0;
  double err_r = 0.0;
  double l1_l = 0.0;
  double l1_r = 0.0;
  const double il = integrator.integrate(left, 0.0, top, 1e-14, &err_l, &l1_l);
  const double ir = integrator.integrate(right, 0.0, top, 1e-14, &err_r, &l1_r);
  const double err = err_l + err_r;
  if (!std::isfinite(il + ir) || err > 1e-10) {
    std::ostringstream os;
    os << "Widom integral for '" << h.id() << "' did not converge (error estimate " << err
       << "); h may not be Hoelder at the endpoints";
    throw std::runtime_error(os.str());
  }
  return (il + ir) / (std::numbers::pi * std::numbers::pi);
}

std::pair<double, double> widom_halving_check(int n) {
  return {widom_coefficient(TestFunction::poly_p(n)), widom_coefficient(TestFunction::poly_q(n))};
}

std::vector<double> lw_spectrum(double alpha, double spacing) {
  const auto [x, w] = section_nodes(alpha, spacing);
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double sj = std::sqrt(w[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = j; i < n; ++i) {
      const double si = std::sqrt(w[static_cast<std::size_t>(i)]);
      m(i, j) = si * kernel::lw_kernel(alpha, +1, x[static_cast<std::size_t>(i)],
                                       x[static_cast<std::size_t>(j)]) * sj;
    }
  }
  auto ev = dsyevd_values(m);
  std::reverse(ev.begin(), ev.end());
  if (!ev.empty() && ev.back() < -kLwSpecTol) {
    throw EigensolverError("Landau-Widom section has eigenvalue below -1e-4", -ev.back());
  }
  return ev;
}

double lw_trace_from_spectrum(const std::vector<double>& eigenvalues, int n) {
  if (n < 1) throw ValidationError("power n must be >= 1");
  double s = 0.0;
  for (auto it = eigenvalues.rbegin(); it != eigenvalues.rend(); ++it) s += std::pow(*it, n);
  return s;
}

double lw_trace(double alpha, int n, double spacing) {
  return lw_trace_from_spectrum(lw_spectrum(alpha, spacing), n);
}

}  // namespace bandtrace::finsec
