#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "nhqb/errors.hpp"
#include "nhqb/model.hpp"
#include "nhqb/spectral.hpp"
#include "nhqb/topology.hpp"
#include "oracles.hpp"

using namespace nhqb;

namespace {

CMatrix random_matrix(oracle::Sampler& s, int n) {
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(s.uniform(-1, 1), s.uniform(-1, 1));
  return m;
}

}  // namespace

TEST(EigGeneral, BiorthonormalPairsForRandomMatrices) {
  oracle::Sampler s(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 9;
    const CMatrix a = random_matrix(s, n);
    const EigenSystem es = eig_general(a);
    ASSERT_EQ(es.values.size(), n);
    EXPECT_FALSE(es.any_defective());
    for (int i = 0; i < n; ++i) {
      EXPECT_LT((a * es.right.col(i) - es.values[i] * es.right.col(i)).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT((es.left.row(i) * a - es.values[i] * es.left.row(i)).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_NEAR(es.right.col(i).norm(), 1.0, 1e-12);
      EXPECT_GE(es.condition[i], 1.0 - 1e-12);
    }
    EXPECT_LT(oracle::max_abs(es.left * es.right - CMatrix::Identity(n, n)), 1e-9);
  }
}

TEST(EigGeneral, OrderingIsLexicographic) {
  oracle::Sampler s(22);
  const EigenSystem es = eig_general(random_matrix(s, 12));
  for (int i = 1; i < es.values.size(); ++i) {
    const cplx a = es.values[i - 1], b = es.values[i];
    EXPECT_TRUE(a.real() < b.real() || (a.real() == b.real() && a.imag() <= b.imag()));
  }
  const Eigen::VectorXcd v = eigenvalues_sorted(random_matrix(s, 12));
  for (int i = 1; i < v.size(); ++i) EXPECT_LE(v[i - 1].real(), v[i].real());
}

TEST(EigGeneral, HermitianMatricesAreWellConditioned) {
  oracle::Sampler s(23);
  CMatrix a = random_matrix(s, 8);
  a = (a + a.adjoint()).eval();
  const EigenSystem es = eig_general(a);
  for (int i = 0; i < 8; ++i) {
    EXPECT_NEAR(es.condition[i], 1.0, 1e-8);
    EXPECT_LT(std::abs(es.values[i].imag()), 1e-12);
  }
}

TEST(EigGeneral, JordanBlockIsFlaggedDefective) {
  CMatrix j(2, 2);
  j << 0, 1, 0, 0;
  const EigenSystem es = eig_general(j);
  EXPECT_TRUE(es.any_defective());
  for (int i = 0; i < 2; ++i) {
    EXPECT_TRUE(es.defective[i]);
    EXPECT_TRUE(std::isinf(es.condition[i]));
  }
  // nSSH2 block exactly at its exceptional point: v = w_r, k = pi
  const Eigen::Matrix2cd h = hamiltonian_nssh2_k(kPi, derive_couplings(1, 0, 0.5));
  CMatrix hm = h;
  hm(0, 1) = 0.0;
  EXPECT_TRUE(eig_general(hm).any_defective());
}

TEST(EigGeneral, DegenerateDiagonalisableIsNotDefective) {
  CMatrix d = CMatrix::Identity(4, 4);
  d(2, 2) = d(3, 3) = -1.0;
  const EigenSystem es = eig_general(d);
  EXPECT_FALSE(es.any_defective());
  EXPECT_LT(oracle::max_abs(es.left * es.right - CMatrix::Identity(4, 4)), 1e-12);
}

TEST(EigGeneral, RejectsBadInput) {
  EXPECT_THROW(eig_general(CMatrix::Zero(2, 3)), DomainError);
  CMatrix bad = CMatrix::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(eig_general(bad), DomainError);
}

TEST(BlockDiagonalisation, RealRegime) {
  oracle::Sampler s(24);
  EXPECT_LT(oracle::max_abs(q_real().adjoint() * q_real() - CMatrix::Identity(8, 8)), 1e-15);
  for (int i = 0; i < 100; ++i) EXPECT_LT(block_diagonalize_real(s.momentum(), s.couplings()), 1e-12);
}

TEST(BlockDiagonalisation, ImaginaryRegime) {
  oracle::Sampler s(25);
  EXPECT_LT(oracle::max_abs(q_tilde_imag().adjoint() * q_tilde_imag() - CMatrix::Identity(8, 8)), 1e-15);
  for (int i = 0; i < 100; ++i) EXPECT_LT(block_diagonalize_imag(s.momentum(), s.couplings()), 1e-12);
}

TEST(BlockDiagonalisation, CorrectedTransformStillDiagonalisesTheUnitarySymmetry) {
  const CMatrix u = gamma_phs3() * gamma_phs4();
  const CMatrix d = q_tilde_imag().adjoint() * u * q_tilde_imag();
  EXPECT_LT(oracle::max_abs(d - CMatrix(d.diagonal().asDiagonal())), 1e-14);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(std::abs(std::abs(d(i, i)) - 1.0), 0.0, 1e-14);
  // the uncorrected column signs do not reach the target ordering
  const CouplingSet c = derive_couplings(1, 0.3, 0.6);
  const CMatrix g = dynamical_qb_k(0.8, c, Regime::Imaginary).values;
  const CMatrix printed = q_tilde_printed().adjoint() * g * q_tilde_printed();
  const Eigen::Matrix2cd h = nssh1_k(0.8, c);
  EXPECT_GT(oracle::max_abs(printed.block(2, 2, 2, 2) + CMatrix(h)), 0.1);
}

TEST(BlockDiagonalisation, SpectraMatchTwoByTwoBlocks) {
  oracle::Sampler s(26);
  for (int i = 0; i < 20; ++i) {
    const double k = s.momentum();
    const CouplingSet c = s.couplings();
    const Eigen::VectorXcd ev = eigenvalues_sorted(dynamical_qb_k(k, c, Regime::Real).values);
    const cplx e = energy_nssh2(k, c);
    for (const cplx& target : {e, -e, std::conj(e), -std::conj(e)}) {
      double best = 1e300;
      for (const cplx& f : ev) best = std::min(best, std::abs(f - target));
      EXPECT_LT(best, 1e-8);
    }
  }
}

TEST(SpectrumSweep, HermitianLimitIsReal) {
  const SpectrumSweep sw = spectrum_sweep(1, 0, {-0.5, 0.0, 0.5}, Regime::Real,
                                          PeriodicBoundary{bz_grid(64)}, 2);
  ASSERT_EQ(sw.eigenvalues.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(sw.eigenvalues[i].size(), 8 * 64);
    EXPECT_LT(sw.relative_imag[i], 1e-12);
  }
  EXPECT_EQ(sw.metadata.at("boundary"), "pbc");
  EXPECT_EQ(sw.metadata.at("regime"), "real");
  // the Hermitian gap 2|delta| closes at delta = 0
  const auto gap = minimum_gap(sw);
  EXPECT_NEAR(gap[0], 1.0, 1e-2);
  EXPECT_NEAR(gap[2], 1.0, 1e-2);
  EXPECT_LT(gap[1], 0.1);
}

TEST(SpectrumSweep, OpenChainRealRegimeIsReal) {
  const SpectrumSweep sw = spectrum_sweep(1, 0.4, {-0.6, 0.2, 0.7}, Regime::Real, OpenBoundary{12}, 3);
  EXPECT_EQ(sw.metadata.at("cells"), "12");
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(sw.eigenvalues[i].size(), 96);
    EXPECT_LT(sw.relative_imag[i], 1e-6);
  }
}

TEST(SpectrumSweep, ZeroModesOnlyInTheTopologicalPhase) {
  const auto gap = minimum_gap(spectrum_sweep(1, 0.4, {-0.5, 0.5}, Regime::Real, OpenBoundary{20}));
  EXPECT_GT(gap[0], 1e-3);
  EXPECT_LT(gap[1], 1e-3);
}

TEST(SpectrumSweep, RejectsBadGrids) {
  EXPECT_THROW(spectrum_sweep(1, 0.4, {}, Regime::Real, OpenBoundary{4}), DomainError);
  EXPECT_THROW(spectrum_sweep(1, 0.4, {0.2, 0.1}, Regime::Real, OpenBoundary{4}), DomainError);
  EXPECT_THROW(spectrum_sweep(1, 0.4, {0.1}, Regime::Real, OpenBoundary{1}), DomainError);
  EXPECT_THROW(spectrum_sweep(-1, 0.4, {0.1}, Regime::Real, OpenBoundary{4}), DomainError);
}

TEST(Localization, DiagonalMatrixGivesSiteStates) {
  const int cells = 5;
  CMatrix d = CMatrix::Zero(2 * cells, 2 * cells);
  for (int i = 0; i < 2 * cells; ++i) d(i, i) = static_cast<double>(i + 1);
  const auto entries = ipr_localization(d, cells);
  ASSERT_EQ(entries.size(), static_cast<std::size_t>(2 * cells));
  for (const auto& e : entries) {
    EXPECT_NEAR(e.ipr, 1.0, 1e-12);
    const int row = static_cast<int>(std::lround(e.value.real())) - 1;
    EXPECT_NEAR(e.mean_position, row % cells, 1e-12);
  }
  // cells 0 and 4 are the outer 20% of a five-cell chain
  EXPECT_NEAR(edge_fraction(entries, cells), 0.4, 1e-12);
  EXPECT_THROW(ipr_localization(CMatrix::Identity(6, 6), 4), DomainError);
}

TEST(Localization, DegenerateClusterIsResolvedByPosition) {
  const int cells = 4;
  const auto entries = ipr_localization(CMatrix::Identity(2 * cells, 2 * cells), cells);
  for (const auto& e : entries) {
    EXPECT_GE(e.ipr, 0.5 - 1e-10);
    EXPECT_NEAR(e.mean_position, std::round(e.mean_position), 1e-10);
  }
}

TEST(Localization, ExtendedStateHasSmallIpr) {
  const int cells = 16;
  CMatrix ring = CMatrix::Zero(2 * cells, 2 * cells);
  for (int h = 0; h < 2; ++h)
    for (int i = 0; i < cells; ++i) {
      const int a = h * cells + i, b = h * cells + (i + 1) % cells;
      ring(a, b) = ring(b, a) = 1.0;
      ring(a, a) = 10.0 * h;
    }
  for (const auto& e : ipr_localization(ring, cells)) EXPECT_LT(e.ipr, 0.2);
}

TEST(Localization, SkinEffectInRealRegimeOnly) {
  const CouplingSet c = derive_couplings(1, 0.5, 0.4);
  const int cells = 24;
  const double real =
      edge_fraction(ipr_localization(realspace_dynamical(c, cells, Regime::Real, BoundaryKind::Open).values, cells), cells);
  const double imag = edge_fraction(
      ipr_localization(realspace_dynamical(c, cells, Regime::Imaginary, BoundaryKind::Open).values, cells), cells);
  EXPECT_GE(real, 0.9);
  EXPECT_LT(imag, 0.2);
}
