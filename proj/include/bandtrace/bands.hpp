#pragma once

// Band structure of H = -d^2/dx^2 + V on L^2(R): band edges, genuine bands
// (maximal groups of touching bands) and the functions Lambda(k), Phi(x, k)
// that glue the branches of a genuine band together.

#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "bandtrace/fibre.hpp"

namespace bandtrace::bands {

inline constexpr double kDefaultTouchTol = 1e-9;
inline constexpr double kDefaultEdgeTol = 1e-6;
inline constexpr int kDefaultNodesPerHalfBand = 512;

// sigma_j = [mu_j, nu_j], mu_j = lambda_j(k_j), nu_j = lambda_j(k_j + 1/2).
struct Band {
  int j = 1;
  double mu = 0.0;
  double nu = 0.0;
  double k_j = 0.0;  // 0 for odd j, 1/2 for even j
};

inline double band_start_momentum(int j) { return (j % 2 == 1) ? 0.0 : 0.5; }

// Samples Lambda(K) and the gauge-fixed Phi(., K) of one genuine band starting
// at band `first` and spanning `multiplicity` bands (or unbounded). Phi is
// continued along a grid of `nodes_per_half_band` points per half-band by
// maximal-overlap phase alignment, starting from a real Bloch function at k_j.
// The grid grows on demand; all reads are thread safe and deterministic.
class BandSampler {
 public:
  BandSampler(fibre::PeriodicPotential potential, int cutoff, int first, int multiplicity,
              bool unbounded, int nodes_per_half_band = kDefaultNodesPerHalfBand);

  int first() const { return first_; }
  int multiplicity() const { return multiplicity_; }
  bool unbounded() const { return unbounded_; }
  double k_start() const { return band_start_momentum(first_); }
  double k_end() const;  // +inf when unbounded
  int nodes_per_half_band() const { return nodes_per_half_band_; }

  double lambda(double K) const;
  fibre::BlochFunction phi(double K) const;

  // Builds the gauge grid through half-band `half_bands - 1`.
  void ensure_grid(int half_bands) const;
  // Copies of the grid nodes built so far (K ascending).
  std::vector<double> grid_momenta() const;

 private:
  struct Node {
    double K;
    int half_band;
    fibre::BlochFunction phi;
  };

  int half_band_of(double K) const;  // K >= k_start
  int band_of_half(int half_band) const { return first_ + half_band; }
  fibre::BlochFunction solve_aligned(double K, int half_band, const fibre::BlochFunction& ref) const;
  fibre::BlochFunction start_node() const;
  void extend_locked(int half_bands) const;

  fibre::PeriodicPotential potential_;
  int cutoff_;
  int first_;
  int multiplicity_;
  bool unbounded_;
  int nodes_per_half_band_;

  mutable std::mutex mutex_;
  mutable std::vector<Node> nodes_;
  mutable int built_half_bands_ = 0;
  mutable std::map<double, fibre::BlochFunction> cache_;
};

struct GenuineBand {
  int start = 1;
  int multiplicity = 1;    // number of touching bands (stored ones when unbounded)
  bool unbounded = false;  // unbounded-or-truncated at the energy cutoff
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  std::shared_ptr<const BandSampler> sampler;

  double k_start() const { return band_start_momentum(start); }
  double k_end() const;
  bool contains_interior(double mu) const { return mu > lower && mu < upper; }

  double lambda(double K) const { return sampler->lambda(K); }
  fibre::BlochFunction phi(double K) const { return sampler->phi(K); }
  cplx phi(double x, double K) const { return sampler->phi(K)(x); }
};

struct BandStructure {
  fibre::PeriodicPotential potential;
  int cutoff = fibre::kDefaultCutoff;
  double e_max = 0.0;
  std::vector<Band> bands;
  std::vector<GenuineBand> genuine;
  double touch_tol = kDefaultTouchTol;
  // mu of the first band beyond `bands`, used to decide whether the last band
  // touches its successor.
  double next_mu = std::numeric_limits<double>::infinity();

  int genuine_group_of(int j) const;  // index into `genuine`, -1 if ungrouped
};

// Edges from fibre solves at k = 0 and k = 1/2. Bands with nu_j <= E_max plus
// the first band crossing E_max. Throws when cutoff N and 2N disagree by more
// than 1e-6 on any returned edge.
BandStructure compute_bands(const fibre::PeriodicPotential& potential, double e_max,
                            int cutoff = fibre::kDefaultCutoff);

BandStructure group_genuine(BandStructure bs, double touch_tol = kDefaultTouchTol);

// Eagerly builds the gauge grid for `band` (all stored half-bands).
GenuineBand build_lambda_phi(const BandStructure& bs, std::size_t genuine_index,
                             int nodes_per_half_band = kDefaultNodesPerHalfBand);

// N(mu; H) = (2 pi)^{-1} int_T #{j : lambda_j(k) < mu} dk.
double integrated_density_of_states(const BandStructure& bs, double mu);

enum class MuClass { Interior, Gap, Edge };

struct Classification {
  MuClass kind = MuClass::Gap;
  int genuine_index = -1;  // genuine band containing mu (Interior / Edge), else -1
  int first_band = 0;      // band-index range of that genuine band
  int last_band = 0;
};

Classification classify_mu(const BandStructure& bs, double mu, double edge_tol = kDefaultEdgeTol);

const char* to_string(MuClass kind);

// delta in (k_j, k_j + n/2) with Lambda(delta) = mu.
double solve_delta(const GenuineBand& band, double mu);

}  // namespace bandtrace::bands
