#include <limits>

#include "doctest.h"
#include "helpers.hpp"

using namespace bandtrace;
using namespace bandtrace::bands;
using fibre::PeriodicPotential;
using testing::kPi;

TEST_CASE("band edges") {
  SUBCASE("free: squares of half-integers and integers") {
    const auto bs = compute_bands(PeriodicPotential::zero(), 2.0);
    REQUIRE(bs.bands.size() >= 3);
    const double mu[] = {0.0, 0.25, 1.0};
    const double nu[] = {0.25, 1.0, 2.25};
    for (int j = 0; j < 3; ++j) {
      CHECK(bs.bands[j].mu == doctest::Approx(mu[j]).epsilon(1e-12));
      CHECK(bs.bands[j].nu == doctest::Approx(nu[j]).epsilon(1e-12));
      CHECK(bs.bands[j].k_j == band_start_momentum(j + 1));
    }
    CHECK(bs.bands.back().nu > 2.0);
  }
  SUBCASE("cosine(1) against N = 256 solves") {
    const auto v = PeriodicPotential::cosine(1.0);
    const auto bs = compute_bands(v, 6.0);
    CHECK(bs.bands[0].mu == doctest::Approx(testing::oracle_eigenvalue(v, 0.0, 1)).epsilon(1e-10));
    CHECK(bs.bands[0].nu == doctest::Approx(testing::oracle_eigenvalue(v, 0.5, 1)).epsilon(1e-10));
    CHECK(bs.bands[1].mu == doctest::Approx(testing::oracle_eigenvalue(v, 0.5, 2)).epsilon(1e-10));
    CHECK(bs.bands[0].nu < bs.bands[1].mu);
    for (std::size_t j = 0; j + 1 < bs.bands.size(); ++j) {
      CHECK(bs.bands[j].mu < bs.bands[j].nu);
      CHECK(bs.bands[j].nu <= bs.bands[j + 1].mu);
    }
  }
  SUBCASE("insufficient cutoff is an error") {
    CHECK_THROWS(compute_bands(PeriodicPotential::cosine(1.0), 400.0, 8));
  }
}

TEST_CASE("genuine band grouping") {
  const auto free_bs = group_genuine(compute_bands(PeriodicPotential::zero(), 5.0));
  REQUIRE(free_bs.genuine.size() == 1);
  CHECK(free_bs.genuine[0].start == 1);
  CHECK(free_bs.genuine[0].unbounded);

  const auto bs = testing::cosine_bands();
  REQUIRE(bs.genuine.size() >= 4);
  for (int j = 1; j <= 4; ++j) {
    CHECK(bs.genuine_group_of(j) == j - 1);
    CHECK(bs.genuine[static_cast<std::size_t>(j - 1)].multiplicity == 1);
  }
  // every band in exactly one group; groups disjoint
  for (const auto& b : bs.bands) CHECK(bs.genuine_group_of(b.j) >= 0);
  for (std::size_t g = 0; g + 1 < bs.genuine.size(); ++g) {
    CHECK(bs.genuine[g + 1].lower - bs.genuine[g].upper > bs.touch_tol);
  }

  // gaps shrink with j: a tolerance just above gap 4 joins bands 4 and 5 only
  const double gap4 = bs.bands[4].mu - bs.bands[3].nu;
  const double gap3 = bs.bands[3].mu - bs.bands[2].nu;
  REQUIRE(gap4 < gap3);
  const auto merged = group_genuine(compute_bands(PeriodicPotential::cosine(1.0), 6.0), 1.1 * gap4);
  CHECK(merged.genuine[3].multiplicity == 2);
  CHECK(merged.genuine_group_of(5) == 3);
  CHECK(merged.genuine_group_of(3) == 2);
}

TEST_CASE("free Lambda and Phi") {
  const auto bs = group_genuine(compute_bands(PeriodicPotential::zero(), 5.0));
  const auto gb = build_lambda_phi(bs, 0, 64);
  for (double k : {0.0, 0.1, 0.37, 0.5, 0.8, 1.3, 2.6}) {
    CHECK(gb.lambda(k) == doctest::Approx(k * k).epsilon(1e-12));
    const auto phi = gb.phi(k);
    // Phi = e^{ikx}/sqrt(2 pi) up to a global phase
    const cplx ratio = phi(0.0) * std::sqrt(2.0 * kPi);
    CHECK(std::abs(ratio) == doctest::Approx(1.0).epsilon(1e-10));
    for (double x : {0.7, 3.1, -5.0}) {
      CHECK(std::abs(phi(x) - ratio * std::exp(cplx{0.0, k * x}) / std::sqrt(2.0 * kPi)) < 1e-10);
    }
  }
}

TEST_CASE("Phi: reflection symmetry, reality at k_j, normalization, continuity") {
  const auto bs = testing::cosine_bands();
  for (std::size_t g : {0u, 1u}) {
    const auto gb = build_lambda_phi(bs, g, 128);
    const double kj = gb.k_start();
    for (double t : {0.05, 0.21, 0.4}) {
      const auto plus = gb.phi(kj + t);
      const auto minus = gb.phi(kj - t);
      for (double x : {0.2, 1.9, 4.4}) CHECK(std::abs(minus(x) - std::conj(plus(x))) < 1e-13);
      CHECK(std::abs(plus.norm() - 1.0) <= 1e-8);
    }
    const auto at_start = gb.phi(kj);
    double max_imag = 0.0;
    for (double x = 0.0; x < 2.0 * kPi; x += 0.1) max_imag = std::max(max_imag, std::abs(at_start(x).imag()));
    CHECK(max_imag < 1e-12);
  }

  // |Phi(k + h) - Phi(k)| is linear in h
  const auto gb = build_lambda_phi(bs, 0, 128);
  auto dist = [&](double h) {
    const auto a = gb.phi(0.17);
    const auto b = gb.phi(0.17 + h);
    double m = 0.0;
    for (double x = 0.0; x < 2.0 * kPi; x += 0.05) m = std::max(m, std::abs(b(x) - a(x)));
    return m;
  };
  const double ratio = dist(0.5e-3) / dist(1e-3);
  CHECK(ratio == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("Lambda is increasing and hits the band edges") {
  const auto bs = testing::cosine_bands();
  for (std::size_t g = 0; g < 3; ++g) {
    const auto gb = build_lambda_phi(bs, g, 64);
    const double k0 = gb.k_start();
    const double k1 = gb.k_end();
    CHECK(gb.lambda(k0) == doctest::Approx(gb.lower).epsilon(1e-12));
    CHECK(gb.lambda(k1) == doctest::Approx(gb.upper).epsilon(1e-12));
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200; ++i) {
      const double l = gb.lambda(k0 + (k1 - k0) * i / 199.0);
      CHECK(l > prev);
      prev = l;
    }
  }
}

TEST_CASE("touching point: one-sided Bloch functions are L2-orthogonal") {
  // Free case, K = 1/2 joins bands 1 and 2: int_0^{2 pi} Phi^2 = 0.
  const auto bs = group_genuine(compute_bands(PeriodicPotential::zero(), 5.0));
  const auto gb = build_lambda_phi(bs, 0, 64);
  for (double K : {0.5, 1.0, 1.5}) {
    const auto phi = gb.phi(K);
    const double re = testing::integrate_period([&](double x) { return (phi(x) * phi(x)).real(); });
    const double im = testing::integrate_period([&](double x) { return (phi(x) * phi(x)).imag(); });
    CHECK(std::hypot(re, im) < 1e-6);
  }
}

TEST_CASE("integrated density of states") {
  const auto free_bs = group_genuine(compute_bands(PeriodicPotential::zero(), 12.0));
  for (double mu : {0.1, 1.0, 4.0, 10.0}) {
    CHECK(integrated_density_of_states(free_bs, mu) == doctest::Approx(std::sqrt(mu) / kPi).epsilon(1e-8));
  }
  CHECK(integrated_density_of_states(free_bs, -0.5) == 0.0);
  CHECK_THROWS_AS(integrated_density_of_states(free_bs, 50.0), std::domain_error);

  const auto bs = testing::cosine_bands();
  const double lo = bs.bands[0].nu;
  const double hi = bs.bands[1].mu;
  const double mid = 0.5 * (lo + hi);
  CHECK(integrated_density_of_states(bs, mid) == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-14));
  const double q = 0.25 * (hi - lo);
  CHECK(integrated_density_of_states(bs, mid - q) == integrated_density_of_states(bs, mid + q));
}

TEST_CASE("classification of mu") {
  const auto free_bs = group_genuine(compute_bands(PeriodicPotential::zero(), 5.0));
  CHECK(classify_mu(free_bs, 1.0).kind == MuClass::Interior);

  const auto bs = testing::cosine_bands();
  CHECK(classify_mu(bs, 0.5 * (bs.bands[0].nu + bs.bands[1].mu)).kind == MuClass::Gap);
  CHECK(classify_mu(bs, bs.bands[0].nu).kind == MuClass::Edge);
  CHECK(classify_mu(bs, bs.bands[0].nu - 1e-7).kind == MuClass::Edge);
  CHECK(classify_mu(bs, -5.0).kind == MuClass::Gap);
  const auto c = classify_mu(bs, 0.5 * (bs.bands[1].mu + bs.bands[1].nu));
  CHECK(c.kind == MuClass::Interior);
  CHECK(c.genuine_index == 1);
  CHECK(c.first_band == 2);
}

TEST_CASE("solve_delta") {
  const auto free_bs = group_genuine(compute_bands(PeriodicPotential::zero(), 5.0));
  const auto& fg = free_bs.genuine[0];
  CHECK(solve_delta(fg, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(solve_delta(fg, 0.25) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(solve_delta(fg, 20.0) == doctest::Approx(std::sqrt(20.0)).epsilon(1e-12));

  const auto bs = testing::cosine_bands();
  const double mu = 0.5 * (bs.bands[0].mu + bs.bands[0].nu);
  const double delta = solve_delta(bs.genuine[0], mu);
  CHECK(delta > 0.0);
  CHECK(delta < 0.5);
  CHECK(testing::oracle_eigenvalue(fibre::PeriodicPotential::cosine(1.0), delta, 1) == doctest::Approx(mu).epsilon(1e-8));

  try {
    solve_delta(bs.genuine[0], bs.bands[1].mu + 0.01);
    FAIL("expected an error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()) == "mu not interior to genuine band");
  }
}
