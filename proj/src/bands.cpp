#include "bandtrace/bands.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bandtrace::bands {

using fibre::BlochFunction;

namespace {

constexpr double kDegeneracyTol = 1e-8;
constexpr double kMinOverlap = 0.5;

}  // namespace

BandSampler::BandSampler(fibre::PeriodicPotential potential, int cutoff, int first,
                         int multiplicity, bool unbounded, int nodes_per_half_band)
    : potential_(std::move(potential)),
      cutoff_(cutoff),
      first_(first),
      multiplicity_(multiplicity),
      unbounded_(unbounded),
      nodes_per_half_band_(nodes_per_half_band) {
  if (first < 1 || multiplicity < 1) throw std::invalid_argument("BandSampler: bad band range");
  if (nodes_per_half_band < 2) throw std::invalid_argument("BandSampler: grid too small");
}

double BandSampler::k_end() const {
  return unbounded_ ? std::numeric_limits<double>::infinity() : k_start() + 0.5 * multiplicity_;
}

int BandSampler::half_band_of(double K) const {
  const double t = 2.0 * (K - k_start());
  int h = static_cast<int>(std::floor(t));
  if (h < 0) h = 0;
  if (!unbounded_) {
    if (K > k_end() + 1e-12) {
      throw std::domain_error("quasi-momentum beyond the end of a bounded genuine band");
    }
    h = std::min(h, multiplicity_ - 1);
  }
  const int band = band_of_half(h);
  if (band > cutoff_) {
    std::ostringstream os;
    os << "band " << band << " is beyond the reliable range of cutoff N = " << cutoff_
       << "; increase the cutoff";
    throw std::out_of_range(os.str());
  }
  return h;
}

double BandSampler::lambda(double K) const {
  if (K < k_start()) K = 2.0 * k_start() - K;
  const int band = band_of_half(half_band_of(K));
  return fibre::fibre_eigenvalues(potential_, K, cutoff_)(band - 1);
}

BlochFunction BandSampler::start_node() const {
  const double K = k_start();
  const auto system = fibre::solve_fibre(potential_, K, cutoff_);
  BlochFunction v = BlochFunction::from_eigensystem(system, first_, K);
  // Real representative: <conj(v), v> = e^{2 i theta} for v = e^{i theta} (real).
  const cplx s = v.conjugate_reflection(K).overlap(v);
  v.scale(std::polar(1.0, -0.5 * std::arg(s)));
  const auto& a = v.coefficients();
  const auto largest = std::max_element(a.begin(), a.end(), [](cplx x, cplx y) {
    return std::abs(x) < std::abs(y);
  });
  if (largest->real() < 0.0) v.scale(-1.0);
  return v;
}

BlochFunction BandSampler::solve_aligned(double K, int half_band, const BlochFunction& ref) const {
  const auto system = fibre::solve_fibre(potential_, K, cutoff_);
  const int band = band_of_half(half_band);
  const double lam = system.eigenvalue(band);
  const double tol = kDegeneracyTol * std::max(1.0, std::abs(lam));

  std::vector<int> cluster;
  for (int i = 1; i <= system.dimension(); ++i) {
    if (std::abs(system.eigenvalue(i) - lam) <= tol) cluster.push_back(i);
  }
  BlochFunction v = BlochFunction::from_eigensystem(system, band, K);
  if (cluster.size() > 1) {
    // Closed gap: pick the state of the eigenspace continuing `ref`.
    std::vector<cplx> acc(v.coefficients().size(), cplx{0.0});
    for (int i : cluster) {
      const BlochFunction u = BlochFunction::from_eigensystem(system, i, K);
      const cplx c = u.overlap(ref);
      for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += c * u.coefficients()[p];
    }
    v = BlochFunction(K, v.p_min(), std::move(acc));
    const double n = v.norm();
    if (n > 0.0) v.scale(1.0 / n);
  }
  const cplx ov = ref.overlap(v);
  if (std::abs(ov) < kMinOverlap) {
    std::ostringstream os;
    os << "k grid too coarse for gauge continuity (overlap " << std::abs(ov) << " at K = " << K
       << ")";
    throw std::runtime_error(os.str());
  }
  v.scale(std::conj(ov) / std::abs(ov));
  return v;
}

void BandSampler::extend_locked(int half_bands) const {
  if (!unbounded_) half_bands = std::min(half_bands, multiplicity_);
  if (nodes_.empty()) {
    nodes_.push_back({k_start(), 0, start_node()});
  }
  const int n = nodes_per_half_band_;
  for (int h = built_half_bands_; h < half_bands; ++h) {
    if (band_of_half(h) > cutoff_) {
      throw std::out_of_range("genuine band extends beyond the reliable range of the cutoff");
    }
    for (int m = 0; m < n; ++m) {
      const double K = k_start() + 0.5 * h + (m + 0.5) / (2.0 * n);
      BlochFunction v = solve_aligned(K, h, nodes_.back().phi);
      nodes_.push_back({K, h, std::move(v)});
    }
    if (!unbounded_ && h == multiplicity_ - 1) {
      const double K = k_end();
      BlochFunction v = solve_aligned(K, h, nodes_.back().phi);
      nodes_.push_back({K, h, std::move(v)});
    }
    built_half_bands_ = h + 1;
  }
}

void BandSampler::ensure_grid(int half_bands) const {
  std::lock_guard lock(mutex_);
  extend_locked(half_bands);
}

std::vector<double> BandSampler::grid_momenta() const {
  std::lock_guard lock(mutex_);
  std::vector<double> out;
  out.reserve(nodes_.size());
  for (const auto& node : nodes_) out.push_back(node.K);
  return out;
}

BlochFunction BandSampler::phi(double K) const {
  if (K < k_start()) return phi(2.0 * k_start() - K).conjugate_reflection(k_start());

  const int h = half_band_of(K);
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(K); it != cache_.end()) return it->second;
  extend_locked(h + 1);

  // Nearest grid node on the same half-band.
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), K,
                                   [](const Node& node, double k) { return node.K < k; });
  const auto pos = static_cast<std::ptrdiff_t>(it - nodes_.begin());
  const Node* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(pos - 2, 0);
       i < std::min<std::ptrdiff_t>(pos + 2, std::ssize(nodes_)); ++i) {
    const Node& cand = nodes_[static_cast<std::size_t>(i)];
    if (cand.half_band != h) continue;
    const double d = std::abs(cand.K - K);
    if (d < best_dist) {
      best_dist = d;
      best = &cand;
    }
  }
  if (best == nullptr) throw std::logic_error("BandSampler: no grid node on the half-band");
  BlochFunction v = (best_dist == 0.0) ? best->phi : solve_aligned(K, h, best->phi);
  cache_.emplace(K, v);
  return v;
}

double GenuineBand::k_end() const {
  return unbounded ? std::numeric_limits<double>::infinity() : k_start() + 0.5 * multiplicity;
}

int BandStructure::genuine_group_of(int j) const {
  for (std::size_t g = 0; g < genuine.size(); ++g) {
    const auto& gb = genuine[g];
    if (j >= gb.start && j < gb.start + gb.multiplicity) return static_cast<int>(g);
    if (gb.unbounded && j >= gb.start) return static_cast<int>(g);
  }
  return -1;
}

BandStructure compute_bands(const fibre::PeriodicPotential& potential, double e_max, int cutoff) {
  if (cutoff < potential.order()) {
    throw std::invalid_argument("cutoff N is below the potential order M");
  }
  const Eigen::VectorXd at0 = fibre::fibre_eigenvalues(potential, 0.0, cutoff);
  const Eigen::VectorXd at_half = fibre::fibre_eigenvalues(potential, -0.5, cutoff);
  const Eigen::VectorXd at0_fine = fibre::fibre_eigenvalues(potential, 0.0, 2 * cutoff);
  const Eigen::VectorXd at_half_fine = fibre::fibre_eigenvalues(potential, -0.5, 2 * cutoff);
  if (!(e_max > at0(0))) {
    throw std::invalid_argument("E_max must exceed the bottom of the spectrum");
  }

  auto edges = [&](int j, const Eigen::VectorXd& zero, const Eigen::VectorXd& half) {
    const bool odd = (j % 2 == 1);
    return std::pair{odd ? zero(j - 1) : half(j - 1), odd ? half(j - 1) : zero(j - 1)};
  };
  auto checked = [&](int j) {
    if (j > cutoff) {
      throw std::out_of_range("cutoff N insufficient for the requested E_max; use a larger N");
    }
    const auto coarse = edges(j, at0, at_half);
    const auto fine = edges(j, at0_fine, at_half_fine);
    const double diff = std::max(std::abs(coarse.first - fine.first),
                                 std::abs(coarse.second - fine.second));
    if (diff > 1e-6) {
      std::ostringstream os;
      os << "band " << j << " edges change by " << diff << " between N = " << cutoff
         << " and 2N; use a larger N";
      throw std::out_of_range(os.str());
    }
    return coarse;
  };

  BandStructure bs;
  bs.potential = potential;
  bs.cutoff = cutoff;
  bs.e_max = e_max;
  for (int j = 1;; ++j) {
    const auto [mu, nu] = checked(j);
    bs.bands.push_back({j, mu, nu, band_start_momentum(j)});
    if (nu > e_max) break;
  }
  bs.next_mu = checked(static_cast<int>(bs.bands.size()) + 1).first;
  return bs;
}

BandStructure group_genuine(BandStructure bs, double touch_tol) {
  bs.touch_tol = touch_tol;
  bs.genuine.clear();
  const auto& b = bs.bands;
  std::size_t i = 0;
  while (i < b.size()) {
    std::size_t last = i;
    while (last + 1 < b.size() && b[last + 1].mu - b[last].nu <= touch_tol) ++last;
    GenuineBand gb;
    gb.start = b[i].j;
    gb.multiplicity = static_cast<int>(last - i + 1);
    gb.lower = b[i].mu;
    gb.unbounded = (last + 1 == b.size()) && (bs.next_mu - b[last].nu <= touch_tol);
    gb.upper = gb.unbounded ? std::numeric_limits<double>::infinity() : b[last].nu;
    gb.sampler = std::make_shared<BandSampler>(bs.potential, bs.cutoff, gb.start,
                                               gb.multiplicity, gb.unbounded);
    bs.genuine.push_back(std::move(gb));
    i = last + 1;
  }
  return bs;
}

GenuineBand build_lambda_phi(const BandStructure& bs, std::size_t genuine_index,
                             int nodes_per_half_band) {
  if (genuine_index >= bs.genuine.size()) throw std::out_of_range("genuine band index");
  GenuineBand gb = bs.genuine[genuine_index];
  auto sampler = std::make_shared<BandSampler>(bs.potential, bs.cutoff, gb.start, gb.multiplicity,
                                               gb.unbounded, nodes_per_half_band);
  sampler->ensure_grid(gb.multiplicity);
  gb.sampler = std::move(sampler);
  return gb;
}

double integrated_density_of_states(const BandStructure& bs, double mu) {
  if (mu > bs.e_max) throw std::domain_error("mu exceeds the energy cutoff of the band structure");
  for (const auto& gb : bs.genuine) {
    if (gb.contains_interior(mu)) {
      const double delta = solve_delta(gb, mu);
      return (static_cast<double>(gb.start - 1) + 2.0 * (delta - gb.k_start())) /
             (2.0 * std::numbers::pi);
    }
  }
  int filled = 0;
  for (const auto& band : bs.bands) {
    if (band.nu <= mu) ++filled;
  }
  return filled / (2.0 * std::numbers::pi);
}

Classification classify_mu(const BandStructure& bs, double mu, double edge_tol) {
  Classification out;
  for (std::size_t g = 0; g < bs.genuine.size(); ++g) {
    const auto& gb = bs.genuine[g];
    const int last = gb.start + gb.multiplicity - 1;
    const bool near_lower = std::abs(mu - gb.lower) <= edge_tol;
    const bool near_upper = !gb.unbounded && std::abs(mu - gb.upper) <= edge_tol;
    if (near_lower || near_upper) {
      return {MuClass::Edge, static_cast<int>(g), gb.start, last};
    }
    if (mu > gb.lower && mu < gb.upper) {
      return {MuClass::Interior, static_cast<int>(g), gb.start, last};
    }
  }
  return out;
}

const char* to_string(MuClass kind) {
  switch (kind) {
    case MuClass::Interior:
      return "interior";
    case MuClass::Gap:
      return "gap";
    case MuClass::Edge:
      return "edge";
  }
  return "unknown";
}

double solve_delta(const GenuineBand& band, double mu) {
  if (!band.contains_interior(mu)) {
    throw std::domain_error("mu not interior to genuine band");
  }
  double lo = band.k_start();
  double hi;
  if (band.unbounded) {
    double width = 0.5;
    hi = lo + width;
    while (band.lambda(hi) <= mu) {
      width *= 2.0;
      hi = lo + width;
    }
  } else {
    hi = band.k_end();
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (band.lambda(mid) < mu) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double delta = 0.5 * (lo + hi);
  const double residual = std::abs(band.lambda(delta) - mu);
  if (residual > 1e-10 * std::max(1.0, std::abs(mu))) {
    std::ostringstream os;
    os << "solve_delta: residual " << residual << " above tolerance";
    throw std::runtime_error(os.str());
  }
  return delta;
}

}  // namespace bandtrace::bands
