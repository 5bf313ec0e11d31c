#pragma once

// Integral kernel of the Fermi projection P_mu = 1_{(-inf, mu)}(H),
//
//   P_mu(x, y) = sum_j int_{T, lambda_j(k) < mu} phi_j(x, k) conj(phi_j(y, k)) dk,
//
// its leading part Pi_mu (built from Phi(., delta)) and related reference kernels.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bandtrace/bands.hpp"
#include "bandtrace/fibre.hpp"

namespace bandtrace::kernel {

struct KernelOptions {
  // Largest |x - y| / 2 the k-quadrature must resolve.
  double alpha_max = 50.0;
  int panel_order = 6;
  int min_panels = 32;
  double edge_tol = bands::kDefaultEdgeTol;
  // Fourier coefficients below this fraction of the largest one are dropped.
  double coefficient_cutoff = 1e-17;
};

enum class ContributionKind { Full, Partial };

// One band's share of the Fermi sea, folded onto |k| in [k_lo, k_hi] within [0, 1/2].
struct BandContribution {
  int band = 1;
  int genuine_index = -1;
  ContributionKind kind = ContributionKind::Full;
  double k_lo = 0.0;
  double k_hi = 0.5;
  double delta = 0.0;  // Partial: Lambda(delta) = mu on the genuine band
};

// A quadrature column: weight w and the Bloch function phi_j(., k) at a node.
struct KernelColumn {
  double weight = 0.0;
  fibre::BlochFunction phi;
};

class KernelEvaluator {
 public:
  double mu() const { return mu_; }
  double alpha_max() const { return alpha_max_; }
  const std::vector<BandContribution>& contributions() const { return contributions_; }
  const std::vector<KernelColumn>& columns() const { return columns_; }
  bool empty() const { return columns_.empty(); }

  // P(x, y) = 2 Re sum_c w_c phi_c(x) conj(phi_c(y)); real because phi_j(-k) = conj(phi_j(k)).
  double operator()(double x, double y) const;

  // Row-scaled factor G (rows x, cols c): G(i, c) = sqrt(2 w_c) row_scale_i phi_c(x_i), so that
  // row_scale_i P(x_i, x_j) row_scale_j = Re (G G^*)_{ij}. Columns [first, first + count).
  Eigen::MatrixXcd factor(std::span<const double> x, std::span<const double> row_scale,
                          std::size_t first, std::size_t count) const;

 private:
  friend KernelEvaluator build_evaluator(const bands::BandStructure&, double,
                                         const KernelOptions&, bool);
  double mu_ = 0.0;
  double alpha_max_ = 0.0;
  std::vector<BandContribution> contributions_;
  std::vector<KernelColumn> columns_;
  int p_min_ = 0;
  int p_max_ = -1;
};

// Quadrature over {k : Lambda(k) < mu}. Throws when mu is within edge_tol of a
// genuine band endpoint (use make_edge_evaluator).
KernelEvaluator make_evaluator(const bands::BandStructure& bs, double mu,
                               const KernelOptions& options = {});

// Edge case: only the bands lying entirely below mu + edge_tol contribute.
KernelEvaluator make_edge_evaluator(const bands::BandStructure& bs, double mu,
                                    const KernelOptions& options = {});

double kernel_P(const KernelEvaluator& ev, double x, double y);

// Pi_mu(x, y) = [Phi(x) conj(Phi(y)) - conj(Phi(x)) Phi(y)] / (i (x - y)), Phi = Phi(., delta),
// continued to x = y by 2 Im[conj(Phi(y)) Phi'(y)].
class LeadingKernel {
 public:
  LeadingKernel(const bands::GenuineBand& band, double delta);
  explicit LeadingKernel(fibre::BlochFunction phi_at_delta);

  double operator()(double x, double y) const;
  const fibre::BlochFunction& phi() const { return phi_; }

 private:
  fibre::BlochFunction phi_;
};

double kernel_Pi(const KernelEvaluator& ev, const bands::GenuineBand& band, double delta, double x,
                 double y);

enum class DecayMode { Interior, GapOrEdge, Remainder };

struct DecayReport {
  std::vector<double> separations;  // bin centres, strictly increasing
  std::vector<double> amplitudes;   // max |kernel| over y in the bin (one period)
  double fitted_exponent = 0.0;     // slope of log amplitude vs log separation
};

// Envelope of |P(x0, y)| (or |P - Pi| for Remainder) over bins [s, s + 2 pi) with s
// log-spaced in [10, max_sep - 2 pi]; requires max_sep >= 20.
DecayReport decay_probe(const KernelEvaluator& ev, DecayMode mode, double x0, double max_sep,
                        const LeadingKernel* leading = nullptr, int bins = 24,
                        int samples_per_bin = 64);

// Trapezoid estimate of (2T)^{-1} int_{-T}^{T} f.
cplx ap_mean(const std::function<cplx(double)>& f, double half_width, double spacing);

// max |mean over [-T', T'] - limit| for T' in [T, T + window], from one cumulative pass.
double ap_mean_error_envelope(const std::function<cplx(double)>& f, cplx limit, double half_width,
                              double window, double spacing);

// Landau-Widom reference kernels D_alpha^{+/-}(x, y); zero outside (-alpha, alpha)^2.
double lw_kernel(double alpha, int sign, double x, double y);

}  // namespace bandtrace::kernel
