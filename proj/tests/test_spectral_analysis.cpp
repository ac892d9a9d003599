#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "epchain/spectral_analysis.hpp"
#include "test_helpers.hpp"

using namespace epchain;

namespace {

BdgMatrix uniform_m(int n, double g, double J, double eta = 0.0, double phi = 0.0) {
  return build_bdg_matrix(ChainSpec::uniform(n, g, J, eta, phi));
}

// EP positions of the uniform chain with single-mode squeezing, g = J +- eta / (2 cos(k pi/(N+1))).
// Read off from an independent numpy bisection (2000-cell scan, 1e-12 width):
//   N=4, J=1, eta=0.2: 0.6763932022503576 0.8763932022503576 1.1236067977496422 1.3236067977496424
//   N=3, J=1, eta=0.2: 0.8585786437623901 1.141421356237144
std::vector<double> ep_oracle(int n, double J, double eta) {
  std::vector<double> out;
  for (int k = 1; k <= n / 2; ++k) {
    const double c = 2.0 * std::cos(k * M_PI / (n + 1));
    if (std::abs(c) < 1e-12) continue;
    out.push_back(J - eta / c);
    out.push_back(J + eta / c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Eigenspectrum, KitaevTwoModeFormula) {
  const double r = std::sqrt(1.25);
  EXPECT_LT(multiset_distance(eigenspectrum(uniform_m(2, 1.5, 1.0)), {-r, -r, r, r}), 1e-12);
  const double i = std::sqrt(0.75);
  EXPECT_LT(multiset_distance(eigenspectrum(uniform_m(2, 0.5, 1.0)),
                              {cplx(0, -i), cplx(0, -i), cplx(0, i), cplx(0, i)}),
            1e-12);
}

TEST(Eigenspectrum, ZeroMatrixSingleMode) {
  const auto ev = eigenspectrum(uniform_m(1, 0, 0, 0));
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0], cplx(0));
  EXPECT_EQ(ev[1], cplx(0));
}

TEST(Eigenspectrum, SortedAndRejectsNonFinite) {
  const auto ev = eigenspectrum(uniform_m(4, 0.7, 0.4, 0.1, 0.3));
  EXPECT_TRUE(std::is_sorted(ev.begin(), ev.end(), eigen_less));
  CMatrix bad = CMatrix::Identity(2, 2);
  bad(0, 1) = cplx(NAN, 0);
  EXPECT_THROW(eigenspectrum(bad), Error);
}

TEST(ClassifyRegion, TwoModeWithSqueezingRegions) {
  EXPECT_EQ(classify_region(eigenspectrum(uniform_m(2, 0.79, 1.0, 0.2))), Region::PurelyImaginary);
  EXPECT_EQ(classify_region(eigenspectrum(uniform_m(2, 1.19, 1.0, 0.2))), Region::Mixed);
  EXPECT_EQ(classify_region(eigenspectrum(uniform_m(2, 1.59, 1.0, 0.2))), Region::PurelyReal);
}

TEST(ClassifyRegion, ZeroEigenvaluesDoNotForceMixed) {
  // Three-mode chain always carries a zero pair; below the surface the rest is real.
  EXPECT_EQ(classify_region(eigenspectrum(build_bdg_matrix(ChainSpec::three_mode(1.5, 1.5, 1.0, 1.0)))),
            Region::PurelyReal);
  EXPECT_EQ(classify_region(eigenspectrum(build_bdg_matrix(ChainSpec::three_mode(0.5, 0.5, 1.0, 1.0)))),
            Region::PurelyImaginary);
}

TEST(ClassifyRegion, ScaleInvariant) {
  std::mt19937_64 rng(3);
  for (int draw = 0; draw < 50; ++draw) {
    const ChainSpec spec = test::random_chain(rng, 2 + draw % 4, 1.5, 1.0, 0.3);
    const auto ev = eigenspectrum(build_bdg_matrix(spec));
    for (double s : {0.01, 3.0, 250.0}) {
      std::vector<cplx> scaled;
      for (const auto& v : ev) scaled.push_back(s * v);
      EXPECT_EQ(classify_region(ev), classify_region(scaled));
    }
  }
}

TEST(AnalyzeSpectrum, FlagsBoundaryNearEp) {
  EXPECT_FALSE(analyze_spectrum(uniform_m(2, 1.59, 1.0, 0.2)).boundary);
  // With a coarse tolerance the band of flagged points straddles g0+ = 1.2.
  int flagged = 0;
  for (int i = -400; i <= 400; ++i) {
    const double g = 1.2 + i * 1e-6;
    const auto report = analyze_spectrum(uniform_m(2, g, 1.0, 0.2), 1e-3);
    if (report.boundary) {
      ++flagged;
      EXPECT_LT(std::abs(g - 1.2), 1e-4) << g;
    }
  }
  EXPECT_GT(flagged, 0);
  EXPECT_FALSE(analyze_spectrum(uniform_m(2, 1.25, 1.0, 0.2), 1e-3).boundary);
}

TEST(JordanStructure, UniformChainCases) {
  EXPECT_EQ(jordan_structure(uniform_m(2, 1, 1), 0.0), (std::vector<int>{2, 2}));
  EXPECT_EQ(jordan_structure(uniform_m(3, 1, 1, 0, M_PI / 2), 0.0), (std::vector<int>{3, 3}));
  EXPECT_EQ(jordan_structure(uniform_m(4, 1, 1, 0, M_PI / 2), 0.0), (std::vector<int>{4, 4}));
  EXPECT_EQ(jordan_structure(uniform_m(4, 1, 1, 0, 0), 0.0), (std::vector<int>{2, 2, 2, 2}));
}

TEST(JordanStructure, SimpleEigenvalue) {
  // g=2, J=1: +-sqrt(3) twice each, diagonalizable.
  EXPECT_EQ(jordan_structure(uniform_m(2, 2, 1), std::sqrt(3.0)), (std::vector<int>{1, 1}));
  // Single-mode squeezer: +-i simple.
  EXPECT_EQ(jordan_structure(uniform_m(1, 0, 0, 1.0), cplx(0, 1)), (std::vector<int>{1}));
  EXPECT_TRUE(jordan_structure(uniform_m(2, 2, 1), 0.5).empty());
}

TEST(JordanStructure, AmbiguousRankIsReported) {
  // Eigenvalue offset ~ 1e-8 relative lands next to the rank threshold.
  const BdgMatrix m = uniform_m(1, 0, 0, 1.0);
  EXPECT_THROW(
      {
        try {
          jordan_structure(m, cplx(0, 1.0 + 1e-8), 1e-8);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::RankAmbiguity);
          throw;
        }
      },
      Error);
}

TEST(DetectEps, EvenChainXFoldEp2) {
  const auto eps = detect_eps(uniform_m(4, 1, 1));
  ASSERT_EQ(eps.size(), 1u);
  EXPECT_LT(std::abs(eps[0].center), 1e-8);
  EXPECT_EQ(eps[0].jordan_blocks, (std::vector<int>{2, 2, 2, 2}));
  EXPECT_EQ(eps[0].order, 2);
  EXPECT_EQ(eps[0].algebraic_multiplicity, 8);
}

TEST(DetectEps, PhaseGivesHighestOrder) {
  for (int n : {3, 4, 5}) {
    const auto eps = detect_eps(uniform_m(n, 1, 1, 0, M_PI / 2));
    ASSERT_EQ(eps.size(), 1u) << "N=" << n;
    EXPECT_EQ(eps[0].jordan_blocks, (std::vector<int>{n, n})) << "N=" << n;
    EXPECT_EQ(eps[0].order, n);
  }
  const auto generic = detect_eps(uniform_m(4, 1, 1, 0, 0.7));
  ASSERT_EQ(generic.size(), 1u);
  EXPECT_EQ(generic[0].jordan_blocks, (std::vector<int>{4, 4}));
}

TEST(DetectEps, NoneAwayFromEp) {
  EXPECT_TRUE(detect_eps(uniform_m(2, 2, 1)).empty());
  EXPECT_TRUE(detect_eps(uniform_m(3, 1.3, 1, 0, M_PI / 2)).empty());
}

TEST(DetectEps, SplitByEtaAtTransition) {
  const auto eps = detect_eps(uniform_m(2, 0.8, 1.0, 0.2));
  ASSERT_EQ(eps.size(), 1u);
  EXPECT_EQ(eps[0].jordan_blocks, (std::vector<int>{2}));
}

TEST(DetectEps, BlocksSumToMultiplicityRandomized) {
  std::mt19937_64 rng(11);
  for (int draw = 0; draw < 40; ++draw) {
    const int n = 2 + draw % 4;
    const double phi = (draw % 3) * M_PI / 3;
    for (const auto& c : detect_eps(uniform_m(n, 1, 1, 0, phi))) {
      EXPECT_EQ(std::accumulate(c.jordan_blocks.begin(), c.jordan_blocks.end(), 0),
                c.algebraic_multiplicity);
      EXPECT_GE(c.order, 2);
    }
  }
}

TEST(LocateEp1d, SqueezingSplitsTwoModeEp) {
  const auto hits = locate_ep_1d([](double g) { return ChainSpec::uniform(2, g, 1.0, 0.2); }, 0.5, 1.5);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_NEAR(hits[0], 0.8, 1e-6);
  EXPECT_NEAR(hits[1], 1.2, 1e-6);
}

TEST(LocateEp1d, NoSqueezingSingleEp) {
  const auto hits = locate_ep_1d([](double g) { return ChainSpec::uniform(2, g, 1.0); }, 0.5, 1.5);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_NEAR(hits[0], 1.0, 1e-6);
}

TEST(LocateEp1d, FourModeInteriorEps) {
  const auto hits = locate_ep_1d([](double g) { return ChainSpec::uniform(4, g, 1.0, 0.2); }, 0.5, 1.5);
  const auto expected = ep_oracle(4, 1.0, 0.2);
  ASSERT_EQ(hits.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(hits[i], expected[i], 1e-6);
  EXPECT_NEAR(hits[0], 0.6763932022503576, 1e-6);
  EXPECT_NEAR(hits[3], 1.3236067977496424, 1e-6);
}

TEST(LocateEp1d, OddChainTwoEps) {
  const auto hits = locate_ep_1d([](double g) { return ChainSpec::uniform(3, g, 1.0, 0.2); }, 0.0, 3.0);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_NEAR(hits[0], 0.8585786437623901, 1e-6);
  EXPECT_NEAR(hits[1], 1.141421356237144, 1e-6);
}

// Every eigenvalue vanishes like sqrt(distance) at the surface, so the type
// threshold must not shrink with the spectrum.
TEST(LocateEp1d, ThreeModeSurfaceCrossing) {
  const auto hits =
      locate_ep_1d([](double g2) { return ChainSpec::three_mode(0.7, g2, 1.2, 0.8); }, 0.0, 3.0);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_NEAR(hits[0], 1.2609520212918492, 1e-7);
}

TEST(LocateEp1d, UniformIntervalThrows) {
  try {
    locate_ep_1d([](double g) { return ChainSpec::uniform(2, g, 1.0); }, 1.5, 2.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoTransition);
  }
}

TEST(Spectrum, OddChainNeverPurelyReal) {
  for (int i = 0; i <= 600; ++i) {
    const double g = 3.0 * i / 600;
    EXPECT_NE(classify_region(eigenspectrum(uniform_m(3, g, 1.0, 0.2))), Region::PurelyReal) << g;
  }
}

TEST(Spectrum, ThreeModeKeepsDoubleZeroRandomized) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int draw = 0; draw < 100; ++draw) {
    const BdgMatrix m = build_bdg_matrix(ChainSpec::three_mode(u(rng), u(rng), u(rng), u(rng)));
    const auto blocks = jordan_structure(m, 0.0);
    EXPECT_GE(std::accumulate(blocks.begin(), blocks.end(), 0), 2);
  }
}

TEST(ExceptionalSurface, ArcPoint) {
  const auto p = classify_surface_point(1, 1, 1, 1, 1e-9);
  EXPECT_TRUE(p.on_surface);
  EXPECT_EQ(p.kind, SurfaceKind::Arc);
  EXPECT_EQ(p.ep_order, 2);
  EXPECT_EQ(p.block_sizes, (std::vector<int>{1, 1, 2, 2}));
}

TEST(ExceptionalSurface, SurfacePointIsEp3) {
  const auto p = classify_surface_point(std::sqrt(2.0), 0.0, 1, 1, 1e-9);
  EXPECT_TRUE(p.on_surface);
  EXPECT_EQ(p.kind, SurfaceKind::Surface);
  EXPECT_EQ(p.ep_order, 3);
  EXPECT_EQ(p.block_sizes, (std::vector<int>{3, 3}));
  const auto q = classify_surface_point(1.2, 0.8, 1.3, std::sqrt(1.44 + 0.64 - 1.69), 1e-9);
  EXPECT_EQ(q.block_sizes, (std::vector<int>{3, 3}));
}

TEST(ExceptionalSurface, OffSurface) {
  const auto p = classify_surface_point(1, 1, 0.5, 0.5, 1e-9);
  EXPECT_FALSE(p.on_surface);
  EXPECT_NEAR(p.residual, 1.5, 1e-15);
  EXPECT_EQ(p.ep_order, 0);
}

TEST(ExceptionalSurface, ScanIsOrderedAndThreadIndependent) {
  SurfaceGrid grid{{0.5, 1.0, std::sqrt(2.0)}, {0.0, 1.0}, {1.0}, {1.0}};
  const auto serial = scan_exceptional_surface(grid, 1e-9, 1);
  const auto parallel = scan_exceptional_surface(grid, 1e-9, 4);
  ASSERT_EQ(serial.size(), 6u);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].g1, parallel[i].g1);
    EXPECT_EQ(serial[i].g2, parallel[i].g2);
    EXPECT_EQ(serial[i].block_sizes, parallel[i].block_sizes);
  }
  EXPECT_EQ(serial[3].kind, SurfaceKind::Arc);     // g1=1, g2=1
  EXPECT_EQ(serial[4].kind, SurfaceKind::Surface); // g1=sqrt2, g2=0
}
