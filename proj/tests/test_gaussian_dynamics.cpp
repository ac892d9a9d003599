#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

#include "epchain/gaussian_dynamics.hpp"
#include "epchain/spectral_analysis.hpp"
#include "epchain/testing/covariance_ode.hpp"
#include "test_helpers.hpp"

using namespace epchain;

namespace {

RealGenerator generator_of(const ChainSpec& spec) { return quadrature_generator(build_bdg_matrix(spec)); }

double rel_diff(const RMatrix& a, const RMatrix& b) {
  return max_abs(RMatrix(a - b)) / std::max(1.0, max_abs(b));
}

}  // namespace

TEST(InitialState, VacuumAndThermal) {
  EXPECT_EQ(vacuum_state(2).cm(), RMatrix::Identity(4, 4));
  EXPECT_EQ(initial_state(1, {0.5}).cm(), 2.0 * RMatrix::Identity(2, 2));
  RVector diag(6);
  diag << 1, 1, 3, 3, 1, 1;
  EXPECT_EQ(initial_state(3, {0, 1, 0}).cm(), RMatrix(diag.asDiagonal()));
}

TEST(InitialState, PurityFlagFollowsTransport) {
  const auto k = generator_of(ChainSpec::uniform(2, 0.5, 1.0, 0.1));
  EXPECT_TRUE(vacuum_state(3).is_pure());
  EXPECT_FALSE(initial_state(2, {0.0, 0.1}).is_pure());
  EXPECT_TRUE(evolve(vacuum_state(2), k, 1.5).is_pure());
  EXPECT_FALSE(evolve(initial_state(2, {0.0, 0.1}), k, 1.5).is_pure());
  EXPECT_FALSE(GaussianState(1, RMatrix::Identity(2, 2)).is_pure());
}

TEST(InitialState, Errors) {
  try {
    initial_state(2, {0.0, -0.1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeOccupancy);
  }
  EXPECT_THROW(initial_state(2, {0.0}), Error);
  EXPECT_THROW(initial_state(0, {}), Error);
}

TEST(GaussianState, RejectsUnphysical) {
  EXPECT_THROW(GaussianState(1, 0.5 * RMatrix::Identity(2, 2)), Error);  // violates uncertainty
  RMatrix asym = RMatrix::Identity(2, 2);
  asym(0, 1) = 0.1;
  EXPECT_THROW(GaussianState(1, asym), Error);
  EXPECT_THROW(GaussianState(2, RMatrix::Identity(2, 2)), Error);
}

TEST(Expm, MatchesEigenMatrixFunctions) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int draw = 0; draw < 30; ++draw) {
    const int n = 2 + draw % 7;
    RMatrix a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = nd(rng) * (0.1 + draw * 0.2);
    const RMatrix ref = a.exp();
    EXPECT_LE(rel_diff(expm(a), ref), 1e-12) << "draw " << draw;
  }
}

TEST(Propagator, IdentityAtZero) {
  const auto k = generator_of(ChainSpec::uniform(3, 0.7, 0.3, 0.1));
  EXPECT_LE(max_abs(RMatrix(propagator(k, 0.0).s - RMatrix::Identity(6, 6))), 0.0);
}

// K^2 = I for the single-mode squeezer, so exp(Kt) = cosh t + K sinh t with eigenvalues e^{+-t}.
TEST(Propagator, SingleModeSqueezerClosedForm) {
  const auto k = generator_of(ChainSpec::uniform(1, 0, 0, 1.0));
  ASSERT_LE(max_abs(RMatrix(k.data() * k.data() - RMatrix::Identity(2, 2))), 1e-15);
  for (double t : {0.3, 1.0, 2.5}) {
    const RMatrix s = propagator(k, t).s;
    const RMatrix expected = std::cosh(t) * RMatrix::Identity(2, 2) + std::sinh(t) * k.data();
    EXPECT_LE(rel_diff(s, expected), 1e-14);
    Eigen::SelfAdjointEigenSolver<RMatrix> es(s);
    EXPECT_NEAR(es.eigenvalues()(0), std::exp(-t), 1e-13 * std::exp(t));
    EXPECT_NEAR(es.eigenvalues()(1), std::exp(t), 1e-13 * std::exp(t));
  }
}

// At the 2-fold EP2 the generator is nilpotent of index 2: the series stops at I + K t.
TEST(Propagator, PolynomialAtEp) {
  const auto k = generator_of(ChainSpec::uniform(2, 1.0, 1.0));
  ASSERT_LE(max_abs(RMatrix(k.data() * k.data())), 1e-14);
  for (double t : {0.5, 2.0, 5.0, 20.0}) {
    const RMatrix expected = RMatrix::Identity(4, 4) + t * k.data();
    EXPECT_LE(rel_diff(propagator(k, t).s, expected), 1e-13) << t;
  }
}

// EP3 (N=3, phi=pi/2): K^3 = 0, exp(Kt) = I + Kt + K^2 t^2/2.
TEST(Propagator, QuadraticAtEp3) {
  const auto k = generator_of(ChainSpec::uniform(3, 1.0, 1.0, 0.0, M_PI / 2));
  const RMatrix k2 = k.data() * k.data();
  ASSERT_LE(max_abs(RMatrix(k2 * k.data())), 1e-13);
  const double t = 3.0;
  const RMatrix expected = RMatrix::Identity(6, 6) + t * k.data() + 0.5 * t * t * k2;
  EXPECT_LE(rel_diff(propagator(k, t).s, expected), 1e-13);
}

TEST(Propagator, OverflowGuard) {
  const auto k = generator_of(ChainSpec::uniform(2, 0.0, 1.0));
  EXPECT_NO_THROW(propagator(k, 5.0));
  try {
    propagator(k, 1000.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OverflowRisk);
  }
}

TEST(Propagator, SymplecticAndSemigroupRandomized) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ut(0.0, 2.5);
  for (int draw = 0; draw < 100; ++draw) {
    const int n = 1 + draw % 6;
    const auto k = generator_of(test::random_chain(rng, n));
    const double t1 = ut(rng), t2 = ut(rng);
    const RMatrix s1 = propagator(k, t1).s, s2 = propagator(k, t2).s;
    const RMatrix s12 = propagator(k, t1 + t2).s;
    const RMatrix omega = symplectic_form(n);
    EXPECT_LE(symplectic_defect(s1, omega), 1e-10);
    EXPECT_LE(symplectic_defect(s12, omega), 1e-10);
    EXPECT_LE(rel_diff(s1 * s2, s12), 1e-9);
  }
}

TEST(Evolve, ZeroTimeUnchanged) {
  const auto state = initial_state(3, {0.2, 0.0, 1.5});
  const auto k = generator_of(ChainSpec::uniform(3, 0.5, 0.4, 0.1));
  EXPECT_LE(max_abs(RMatrix(evolve(state, k, 0.0).cm() - state.cm())), 0.0);
}

TEST(Evolve, PurityAndBonaFideRandomized) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ut(0.0, 5.0);
  for (int draw = 0; draw < 100; ++draw) {
    const int n = 1 + draw % 6;
    const auto k = generator_of(test::random_chain(rng, n));
    const auto state = evolve(vacuum_state(n), k, ut(rng));
    EXPECT_NEAR(state.cm().determinant(), 1.0, 1e-8);
    EXPECT_GE(bona_fide_margin(state.cm()), -1e-8 * max_abs(state.cm()));
    EXPECT_LE(max_abs(RMatrix(state.cm() - state.cm().transpose())), 0.0);
  }
}

TEST(Evolve, ThermalDeterminantConserved) {
  const auto state = initial_state(2, {0.5, 1.0});
  const auto k = generator_of(ChainSpec::uniform(2, 0.79, 1.0, 0.2));
  const double det0 = state.cm().determinant();
  EXPECT_NEAR(evolve(state, k, 3.0).cm().determinant() / det0, 1.0, 1e-8);
}

TEST(Evolve, AgreesWithOdeIntegration) {
  std::mt19937_64 rng(77);
  for (int draw = 0; draw < 12; ++draw) {
    const int n = 1 + draw % 6;
    const auto k = generator_of(test::random_chain(rng, n));
    const auto sigma0 = vacuum_state(n);
    const RMatrix via_exp = evolve(sigma0, k, 5.0).cm();
    const RMatrix via_ode = epchain::testing::integrate_covariance(k.data(), sigma0.cm(), 5.0);
    EXPECT_LE(rel_diff(via_exp, via_ode), 1e-7) << "draw " << draw;
  }
}

TEST(EvolveTrajectory, SingleTimeAndDeterminism) {
  const auto k = generator_of(ChainSpec::uniform(3, 0.9, 0.6, 0.2, 0.4));
  const auto s0 = vacuum_state(3);
  const auto only_zero = evolve_trajectory(s0, k, {0.0});
  ASSERT_EQ(only_zero.size(), 1u);
  EXPECT_EQ(only_zero[0].cm(), s0.cm());
  const auto a = evolve_trajectory(s0, k, {0.0, 1.0, 2.0}, 3);
  const auto b = evolve_trajectory(s0, k, {2.0});
  EXPECT_LE(rel_diff(a[2].cm(), b[0].cm()), 1e-12);
}

TEST(EvolveTrajectory, RejectsUnsortedTimes) {
  const auto k = generator_of(ChainSpec::uniform(2, 1, 1));
  try {
    evolve_trajectory(vacuum_state(2), k, {0.0, 2.0, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsortedTimes);
  }
}

TEST(EvolveTrajectory, RegionOneGrowsMonotonically) {
  const auto spec = ChainSpec::uniform(2, 0.79, 1.0, 0.2);
  ASSERT_EQ(classify_region(eigenspectrum(build_bdg_matrix(spec))), Region::PurelyImaginary);
  std::vector<double> times;
  for (int i = 0; i <= 100; ++i) times.push_back(0.05 * i);
  const auto traj = evolve_trajectory(vacuum_state(2), generator_of(spec), times);
  for (std::size_t i = 1; i < traj.size(); ++i)
    EXPECT_GT(traj[i].cm().norm(), traj[i - 1].cm().norm()) << times[i];
}
