#include <gtest/gtest.h>

#include <cmath>

#include "nhqb/errors.hpp"
#include "nhqb/model.hpp"
#include "nhqb/topology.hpp"
#include "oracles.hpp"

using namespace nhqb;

namespace {

// Winding of the closed curve k -> (x(k), y(k)) around the origin by
// accumulating principal angle differences on a fine grid.
template <class F>
double winding_oracle(F curve, int samples = 20000) {
  double total = 0.0;
  double prev = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double k = -oracle::kPi + 2.0 * oracle::kPi * i / samples;
    const auto [x, y] = curve(k);
    const double a = std::atan2(y, x);
    if (i > 0) total += std::remainder(a - prev, 2.0 * oracle::kPi);
    prev = a;
  }
  return total / (2.0 * oracle::kPi);
}

double nu_oracle(const CouplingSet& c) {
  const double wb = c.w_mean(), u = c.w_half_diff(), v = c.v();
  const double n1 = winding_oracle([&](double k) {
    return std::pair{v + wb * std::cos(k) - u, wb * std::sin(k)};
  });
  const double n2 = winding_oracle([&](double k) {
    return std::pair{v + wb * std::cos(k) + u, wb * std::sin(k)};
  });
  return 0.5 * (std::round(n1) + std::round(n2));
}

}  // namespace

TEST(Grid, BrillouinZoneSampling) {
  const auto g = bz_grid(8);
  ASSERT_EQ(g.size(), 8u);
  EXPECT_DOUBLE_EQ(g.front(), -kPi);
  EXPECT_NEAR(g.back(), kPi - 2 * kPi / 8, 1e-15);
  EXPECT_THROW(bz_grid(1), DomainError);
}

TEST(Winding, PhaseTableAtReferenceParameters) {
  const auto grid = bz_grid(2001);
  const double expected[] = {0.0, 0.5, 1.0};
  const double deltas[] = {-0.9, -0.1, 0.9};
  for (int i = 0; i < 3; ++i) {
    const CouplingSet c = derive_couplings(1, deltas[i], 0.4);
    const WindingResult w = winding_pair([&](double k) { return bloch_nssh2(k, c); }, grid);
    EXPECT_NEAR(w.nu, expected[i], 1e-3);
    EXPECT_LT(w.imag_residual, 1e-6);
    EXPECT_EQ(w.grid_size, 2001);
    EXPECT_EQ(classify_phase_real(c).nu, expected[i]);
  }
}

TEST(Winding, HermitianLimit) {
  const auto grid = bz_grid(1001);
  for (double delta : {-0.5, 0.5}) {
    const CouplingSet c = derive_couplings(1, delta, 0);
    const WindingResult w = winding_pair([&](double k) { return bloch_nssh2(k, c); }, grid);
    EXPECT_NEAR(w.nu1, w.nu2, 1e-12);
    EXPECT_NEAR(w.nu, delta > 0 ? 1.0 : 0.0, 1e-9);
  }
}

TEST(Winding, AgreesWithAngleSumOracle) {
  oracle::Sampler s(31);
  const auto grid = bz_grid(4001);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    const CouplingSet c = s.couplings(-0.95, 0.95, 1.0);
    try {
      const WindingResult w = winding_pair([&](double k) { return bloch_nssh2(k, c); }, grid);
      EXPECT_NEAR(w.nu, nu_oracle(c), 1e-3);
      EXPECT_NEAR(w.nu1, std::round(w.nu1), 1e-9);
      EXPECT_NEAR(w.nu2, std::round(w.nu2), 1e-9);
      ++checked;
    } catch (const ResolutionError&) {
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(Winding, IntegralMatchesAngleCountAwayFromEps) {
  oracle::Sampler s(32);
  const auto grid = bz_grid(2001);
  for (int i = 0; i < 30; ++i) {
    const CouplingSet c = s.couplings(-0.95, 0.95, 0.8);
    if (std::abs(c.v() - c.w_l()) < 0.05 || std::abs(c.v() - c.w_r()) < 0.05) continue;
    const auto d = [&](double k) { return bloch_nssh2(k, c); };
    const cplx w = winding_integral(d, grid);
    EXPECT_NEAR(w.real(), nu_oracle(c), 1e-6);
    EXPECT_NEAR(w.imag(), 0.0, 1e-6);
  }
}

TEST(Winding, RejectsCoarseOrUnorderedGrids) {
  const CouplingSet c = derive_couplings(1, 0.3, 0.2);
  const auto d = [&](double k) { return bloch_nssh2(k, c); };
  EXPECT_THROW(winding_pair(d, bz_grid(100)), DomainError);
  auto grid = bz_grid(500);
  std::swap(grid[10], grid[11]);
  EXPECT_THROW(winding_pair(d, grid), DomainError);
  auto nonuniform = bz_grid(500);
  nonuniform[10] += 1e-4;
  EXPECT_THROW(winding_integral(d, nonuniform), DomainError);
}

TEST(Winding, SingularAtExceptionalPoint) {
  // v = w_r puts an EP of the Bloch vector at k = pi, which is on the grid
  const CouplingSet c = derive_couplings(1, 0.0, 0.5);
  EXPECT_THROW(winding_integral([&](double k) { return bloch_nssh2(k, c); }, bz_grid(1000)),
               SingularityError);
}

TEST(ExceptionalPoints, LocationsAndPolygonWinding) {
  const CouplingSet c = derive_couplings(1, -0.1, 0.4);
  const auto ep = ep_locations_nssh2(c);
  EXPECT_NEAR(ep.ep1.x, 0.5 * (c.w_l() - c.w_r()), 1e-15);
  EXPECT_NEAR(ep.ep2.x, -ep.ep1.x, 1e-15);
  EXPECT_FALSE(ep.degenerate);
  EXPECT_TRUE(ep_locations_nssh2(derive_couplings(1, 0.2, 0)).degenerate);

  std::vector<PlanarVector> loop;
  for (double k : bz_grid(1000)) loop.push_back(bloch_nssh2(k, c).dr);
  // Moebius phase: the real loop encloses exactly one EP
  EXPECT_EQ(polygon_winding(loop, ep.ep1) + polygon_winding(loop, ep.ep2), 1);
  const std::vector<PlanarVector> square{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
  EXPECT_EQ(polygon_winding(square, {0, 0}), 1);
  EXPECT_EQ(polygon_winding(square, {3, 0}), 0);
}

TEST(Phases, RealRegimeBoundaries) {
  EXPECT_NEAR(moebius_lower_bound(0.4), -0.197375320224904, 1e-12);
  EXPECT_EQ(moebius_lower_bound(0.0), 0.0);
  EXPECT_EQ(classify_phase_real(derive_couplings(1, -0.15, 0.4)).phase, Phase::Moebius);
  EXPECT_EQ(classify_phase_real(derive_couplings(1, -0.25, 0.4)).phase, Phase::Trivial);
  EXPECT_EQ(classify_phase_real(derive_couplings(1, 0.05, 0.4)).phase, Phase::NonTrivial);
  const PhaseLabel crit = classify_phase_real(derive_couplings(1, 0.0, 0.4));
  EXPECT_EQ(crit.phase, Phase::Critical);
  EXPECT_TRUE(std::isnan(crit.nu));
  EXPECT_EQ(to_string(Phase::Moebius), "moebius");
}

TEST(Phases, MoebiusWindowMatchesWindingOracle) {
  for (double theta : {0.2, 0.4, 0.8}) {
    const double lo = moebius_lower_bound(theta);
    for (double delta : {lo - 0.02, lo + 0.02, -0.01, 0.02}) {
      const CouplingSet c = derive_couplings(1, delta, theta);
      EXPECT_EQ(classify_phase_real(c).nu, nu_oracle(c)) << "theta=" << theta << " delta=" << delta;
    }
  }
}

TEST(Phases, TransitionPoint) {
  EXPECT_EQ(transition_delta0(0.0), 0.0);
  EXPECT_NEAR(transition_delta0(0.4), -0.118923, 1e-6);
  oracle::Sampler s(33);
  for (int i = 0; i < 20; ++i) {
    const double theta = s.uniform(0.05, 1.5);
    const double d0 = transition_delta0(theta);
    EXPECT_LT(d0, 0.0);
    EXPECT_GT(d0, -1.0);
    // at delta0 the nSSH1 determinant vanishes at k*
    const CouplingSet c = derive_couplings(1.3, d0, theta);
    const auto ep = ep_nssh1(c);
    EXPECT_NEAR(c.v(), ep.v_critical, 1e-12);
    EXPECT_NEAR(nssh1_x(ep.k_star, c), 0.0, 1e-11);
    EXPECT_NEAR(nssh1_y(ep.k_star, c), 0.0, 1e-11);
    EXPECT_NEAR(std::abs(nssh1_k(ep.k_star, c).determinant()), 0.0, 1e-11);
  }
}

TEST(Phases, Nssh1DeterminantDecomposition) {
  oracle::Sampler s(34);
  for (int i = 0; i < 50; ++i) {
    const double k = s.momentum();
    const CouplingSet c = s.couplings();
    const cplx det = nssh1_k(k, c).determinant();
    EXPECT_NEAR(std::abs(det + cplx(nssh1_x(k, c), nssh1_y(k, c))), 0.0, 1e-12);
  }
}

TEST(Phases, ImaginaryRegimeClassification) {
  const auto grid = bz_grid(2001);
  const double d0 = transition_delta0(0.4);
  for (double delta : {-0.9, -0.3, d0 - 0.02, d0 + 0.02, 0.1, 0.9}) {
    const PhaseLabel p = classify_phase_imag(derive_couplings(1, delta, 0.4), grid);
    EXPECT_EQ(p.nu, delta > d0 ? 1.0 : 0.0) << delta;
    EXPECT_EQ(p.phase, delta > d0 ? Phase::NonTrivial : Phase::Trivial);
  }
  EXPECT_EQ(classify_phase_imag(derive_couplings(1, d0, 0.4), grid).phase, Phase::Critical);
}

TEST(EnergyLoops, MergeOnlyInMoebiusPhase) {
  const auto grid = bz_grid(2001);
  EXPECT_FALSE(parametric_energy_loops(derive_couplings(1, -0.5, 0.4), grid).merged);
  EXPECT_TRUE(parametric_energy_loops(derive_couplings(1, -0.1, 0.4), grid).merged);
  EXPECT_FALSE(parametric_energy_loops(derive_couplings(1, 0.5, 0.4), grid).merged);
  const EnergyLoops l = parametric_energy_loops(derive_couplings(1, 0.5, 0.4), grid);
  ASSERT_EQ(l.upper.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(l.lower[i], -l.upper[i]);
  EXPECT_GT(l.band_separation, 0.1);
}

TEST(PhaseDiagram, GridOfLabels) {
  const auto rows = phase_diagram(1, {-0.9, -0.1, 0.0, 0.9}, {0.0, 0.4}, Regime::Real, bz_grid(801), 2);
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& r : rows) {
    if (r.label == Phase::Critical) {
      EXPECT_TRUE(std::isnan(r.winding.nu));
      EXPECT_EQ(r.delta, 0.0);
      continue;
    }
    EXPECT_NEAR(r.winding.nu, classify_phase_real(derive_couplings(1, r.delta, r.theta)).nu, 1e-3);
  }
  const auto imag = phase_diagram(1, {-0.5, 0.5}, {0.4}, Regime::Imaginary, bz_grid(801));
  EXPECT_NEAR(imag[0].winding.nu, 0.0, 1e-9);
  EXPECT_NEAR(imag[1].winding.nu, 1.0, 1e-9);
}
