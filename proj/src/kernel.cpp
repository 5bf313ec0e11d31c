#include "bandtrace/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "bandtrace/quadrature.hpp"

namespace bandtrace::kernel {

using bands::BandStructure;
using fibre::BlochFunction;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;
const double kInvSqrt2Pi = 1.0 / std::sqrt(kTwoPi);

BlochFunction trimmed(const BlochFunction& f, double relative_cutoff) {
  const auto& a = f.coefficients();
  double largest = 0.0;
  for (const auto& c : a) largest = std::max(largest, std::abs(c));
  const double floor = relative_cutoff * largest;
  std::size_t lo = 0;
  std::size_t hi = a.size();
  while (lo + 1 < hi && std::abs(a[lo]) < floor) ++lo;
  while (hi > lo + 1 && std::abs(a[hi - 1]) < floor) --hi;
  return BlochFunction(f.quasi_momentum(), f.p_min() + static_cast<int>(lo),
                       std::vector<cplx>(a.begin() + static_cast<std::ptrdiff_t>(lo),
                                         a.begin() + static_cast<std::ptrdiff_t>(hi)));
}

// z^p for p in [p_min, p_max], z = e^{ix}.
void fourier_table(double x, int p_min, int p_max, std::vector<cplx>& out) {
  const double xr = x - kTwoPi * std::floor(x / kTwoPi);
  out.resize(static_cast<std::size_t>(std::max(p_max - p_min + 1, 0)));
  const cplx step = std::polar(1.0, xr);
  cplx z = std::polar(1.0, p_min * xr);
  for (auto& v : out) {
    v = z;
    z *= step;
  }
}

cplx column_value(const KernelColumn& col, double x, const std::vector<cplx>& table, int p_min) {
  const auto& a = col.phi.coefficients();
  const cplx* t = table.data() + (col.phi.p_min() - p_min);
  cplx s{0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * t[i];
  return std::polar(1.0, col.phi.quasi_momentum() * x) * s;
}

}  // namespace

KernelEvaluator build_evaluator(const BandStructure& bs, double mu, const KernelOptions& options,
                                bool edge_case) {
  if (mu > bs.e_max) throw std::domain_error("mu exceeds the energy cutoff of the band structure");
  if (options.alpha_max <= 0.0) throw std::invalid_argument("alpha_max must be positive");
  const auto cls = bands::classify_mu(bs, mu, options.edge_tol);
  if (!edge_case && cls.kind == bands::MuClass::Edge) {
    throw std::domain_error(
        "mu lies within edge_tol of a band edge; use the edge-case evaluator (full bands only)");
  }

  KernelEvaluator ev;
  ev.mu_ = mu;
  ev.alpha_max_ = options.alpha_max;

  for (const auto& band : bs.bands) {
    BandContribution c;
    c.band = band.j;
    c.genuine_index = bs.genuine_group_of(band.j);
    if (edge_case) {
      if (band.nu > mu + options.edge_tol) continue;
      c.kind = ContributionKind::Full;
    } else if (band.nu <= mu) {
      c.kind = ContributionKind::Full;
    } else if (band.mu < mu) {
      const auto& gb = bs.genuine.at(static_cast<std::size_t>(c.genuine_index));
      const double delta = bands::solve_delta(gb, mu);
      const int l = band.j - gb.start;
      const double t = delta - gb.k_start() - 0.5 * l;
      c.kind = ContributionKind::Partial;
      c.delta = delta;
      const bool starts_at_zero = (static_cast<int>(std::lround(2.0 * gb.k_start())) + l) % 2 == 0;
      if (starts_at_zero) {
        c.k_lo = 0.0;
        c.k_hi = t;
      } else {
        c.k_lo = 0.5 - t;
        c.k_hi = 0.5;
      }
      if (c.k_hi - c.k_lo <= 1e-15) continue;
    } else {
      continue;
    }
    ev.contributions_.push_back(c);
  }

  // Bands sharing an interval share the fibre solves.
  std::map<std::pair<double, double>, std::vector<int>> by_interval;
  for (const auto& c : ev.contributions_) by_interval[{c.k_lo, c.k_hi}].push_back(c.band);

  bool first = true;
  for (const auto& [interval, band_list] : by_interval) {
    const auto [lo, hi] = interval;
    const int panels = std::max(
        options.min_panels,
        static_cast<int>(std::ceil(4.0 * options.alpha_max * (hi - lo) / std::numbers::pi)));
    const auto rule = composite_gauss_legendre(lo, hi, panels, options.panel_order);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double k = rule.nodes[q];
      const auto system = fibre::solve_fibre(bs.potential, k, bs.cutoff);
      for (int b : band_list) {
        KernelColumn col;
        col.weight = rule.weights[q];
        col.phi = trimmed(BlochFunction::from_eigensystem(system, b, system.k),
                          options.coefficient_cutoff);
        if (first) {
          ev.p_min_ = col.phi.p_min();
          ev.p_max_ = col.phi.p_max();
          first = false;
        } else {
          ev.p_min_ = std::min(ev.p_min_, col.phi.p_min());
          ev.p_max_ = std::max(ev.p_max_, col.phi.p_max());
        }
        ev.columns_.push_back(std::move(col));
      }
    }
  }
  return ev;
}

KernelEvaluator make_evaluator(const BandStructure& bs, double mu, const KernelOptions& options) {
  return build_evaluator(bs, mu, options, false);
}

KernelEvaluator make_edge_evaluator(const BandStructure& bs, double mu,
                                    const KernelOptions& options) {
  return build_evaluator(bs, mu, options, true);
}

double KernelEvaluator::operator()(double x, double y) const {
  if (columns_.empty()) return 0.0;
  std::vector<cplx> tx;
  std::vector<cplx> ty;
  fourier_table(x, p_min_, p_max_, tx);
  fourier_table(y, p_min_, p_max_, ty);
  // Fixed summation order (column index) keeps results reproducible.
  cplx s{0.0};
  for (const auto& col : columns_) {
    s += col.weight * column_value(col, x, tx, p_min_) * std::conj(column_value(col, y, ty, p_min_));
  }
  return 2.0 * s.real() / kTwoPi;
}

Eigen::MatrixXcd KernelEvaluator::factor(std::span<const double> x,
                                         std::span<const double> row_scale, std::size_t first,
                                         std::size_t count) const {
  if (x.size() != row_scale.size()) throw std::invalid_argument("factor: size mismatch");
  if (first + count > columns_.size()) throw std::out_of_range("factor: column range");
  const auto rows = static_cast<Eigen::Index>(x.size());
  const auto cols = static_cast<Eigen::Index>(count);
  const int width = p_max_ - p_min_ + 1;

  Eigen::MatrixXcd waves(rows, width);
  std::vector<cplx> table;
  for (Eigen::Index i = 0; i < rows; ++i) {
    fourier_table(x[static_cast<std::size_t>(i)], p_min_, p_max_, table);
    for (int p = 0; p < width; ++p) waves(i, p) = table[static_cast<std::size_t>(p)];
  }
  Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(width, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const auto& phi = columns_[first + static_cast<std::size_t>(c)].phi;
    const auto& a = phi.coefficients();
    for (std::size_t i = 0; i < a.size(); ++i) {
      coeffs(phi.p_min() - p_min_ + static_cast<Eigen::Index>(i), c) = a[i];
    }
  }
  Eigen::MatrixXcd g = waves * coeffs;
  for (Eigen::Index c = 0; c < cols; ++c) {
    const auto& col = columns_[first + static_cast<std::size_t>(c)];
    const double k = col.phi.quasi_momentum();
    const double scale = std::sqrt(2.0 * col.weight) * kInvSqrt2Pi;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double xi = x[static_cast<std::size_t>(i)];
      g(i, c) *= std::polar(scale * row_scale[static_cast<std::size_t>(i)], k * xi);
    }
  }
  return g;
}

double kernel_P(const KernelEvaluator& ev, double x, double y) { return ev(x, y); }

LeadingKernel::LeadingKernel(const bands::GenuineBand& band, double delta)
    : phi_(band.phi(delta)) {}

LeadingKernel::LeadingKernel(BlochFunction phi_at_delta) : phi_(std::move(phi_at_delta)) {}

double LeadingKernel::operator()(double x, double y) const {
  const double d = x - y;
  if (std::abs(d) < 1e-5) {
    const double m = 0.5 * (x + y);
    return 2.0 * (std::conj(phi_(m)) * phi_.derivative(m)).imag();
  }
  return 2.0 * (phi_(x) * std::conj(phi_(y))).imag() / d;
}

double kernel_Pi(const KernelEvaluator& /*ev*/, const bands::GenuineBand& band, double delta,
                 double x, double y) {
  return LeadingKernel(band, delta)(x, y);
}

DecayReport decay_probe(const KernelEvaluator& ev, DecayMode mode, double x0, double max_sep,
                        const LeadingKernel* leading, int bins, int samples_per_bin) {
  if (max_sep < 20.0) throw std::invalid_argument("decay_probe: max_sep must be at least 20");
  if (mode == DecayMode::Remainder && leading == nullptr) {
    throw std::invalid_argument("decay_probe: remainder mode needs the leading kernel");
  }
  if (bins < 2 || samples_per_bin < 1) throw std::invalid_argument("decay_probe: bad sampling");
  const double s_lo = 10.0;
  const double s_hi = max_sep - kTwoPi;
  DecayReport report;
  for (int b = 0; b < bins; ++b) {
    const double s = s_lo * std::pow(s_hi / s_lo, static_cast<double>(b) / (bins - 1));
    double amp = 0.0;
    for (int m = 0; m < samples_per_bin; ++m) {
      const double y = x0 + s + kTwoPi * m / samples_per_bin;
      double v = ev(x0, y);
      if (mode == DecayMode::Remainder) v -= (*leading)(x0, y);
      amp = std::max(amp, std::abs(v));
    }
    report.separations.push_back(s + std::numbers::pi);
    report.amplitudes.push_back(amp);
  }
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double sxy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < report.amplitudes.size(); ++i) {
    if (!(report.amplitudes[i] > 0.0)) continue;
    const double lx = std::log(report.separations[i]);
    const double ly = std::log(report.amplitudes[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) {
    report.fitted_exponent = -std::numeric_limits<double>::infinity();
  } else {
    report.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return report;
}

cplx ap_mean(const std::function<cplx(double)>& f, double half_width, double spacing) {
  if (half_width < 100.0) throw std::invalid_argument("ap_mean: half-width T must be >= 100");
  if (!(spacing > 0.0)) throw std::invalid_argument("ap_mean: spacing must be positive");
  const long n = static_cast<long>(std::ceil(2.0 * half_width / spacing));
  const double h = 2.0 * half_width / static_cast<double>(n);
  cplx s = 0.5 * (f(-half_width) + f(half_width));
  for (long i = 1; i < n; ++i) s += f(-half_width + h * static_cast<double>(i));
  return s * h / (2.0 * half_width);
}

double ap_mean_error_envelope(const std::function<cplx(double)>& f, cplx limit, double half_width,
                              double window, double spacing) {
  if (!(spacing > 0.0) || !(half_width > 0.0) || window < 0.0) {
    throw std::invalid_argument("ap_mean_error_envelope: bad arguments");
  }
  const long m_lo = static_cast<long>(std::ceil(half_width / spacing));
  const long m_hi = static_cast<long>(std::floor((half_width + window) / spacing));
  cplx integral{0.0};
  cplx f_left = f(0.0);
  cplx f_right = f_left;
  double worst = 0.0;
  for (long m = 1; m <= m_hi; ++m) {
    const double t = spacing * static_cast<double>(m);
    const cplx fl = f(-t);
    const cplx fr = f(t);
    integral += 0.5 * spacing * (fl + f_left + fr + f_right);
    f_left = fl;
    f_right = fr;
    if (m >= m_lo) worst = std::max(worst, std::abs(integral / (2.0 * t) - limit));
  }
  return worst;
}

double lw_kernel(double alpha, int sign, double x, double y) {
  if (sign < 0) return lw_kernel(alpha, +1, -x, -y);
  if (std::abs(x) >= alpha || std::abs(y) >= alpha) return 0.0;
  const double a = alpha + 1.0;
  // int_{a}^{inf} dz / ((z - x)(z - y)) = log((a - y) / (a - x)) / (x - y)
  const double u = (x - y) / (a - x);
  const double ratio = (std::abs(u) < 1e-8) ? 1.0 - 0.5 * u : std::log1p(u) / u;
  return ratio / ((a - x) * 4.0 * std::numbers::pi * std::numbers::pi);
}

}  // namespace bandtrace::kernel
