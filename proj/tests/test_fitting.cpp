#include <gtest/gtest.h>

#include <cmath>

#include "epchain/fitting.hpp"

using namespace epchain;

// Frozen from the least-squares fit of the numeric (1|N-1) witness at g=J, phi=pi/2
// (independent numpy pipeline, residual < 1e-12): c_1..c_5.
const std::vector<double> kFittedC{8.0, 8.0, 3.5555555555555554, 0.88888888888888884, 0.14222222222222222};

TEST(SeriesFit, TwoModeLeadingCoefficient) {
  const auto fit = fit_xi_series(2, M_PI / 2);
  ASSERT_EQ(fit.coefficients.size(), 1u);
  EXPECT_NEAR(fit.coefficients[0], 8.0, 1e-6);
  EXPECT_LE(fit.residual, 1e-6);
}

TEST(SeriesFit, ConsistentAcrossSizes) {
  const auto table = xi_series_coefficients(6);
  ASSERT_EQ(table.coefficients.size(), 5u);
  ASSERT_EQ(table.fits.size(), 5u);
  EXPECT_LE(table.max_inconsistency, 1e-4);
  for (std::size_t j = 0; j < kFittedC.size(); ++j)
    EXPECT_NEAR(table.coefficients[j], kFittedC[j], 1e-6 * kFittedC[j]) << "c_" << j + 1;
  for (const auto& f : table.fits) EXPECT_LE(f.residual, 1e-6);
}

TEST(SeriesFit, ZeroPhaseCollapsesToLeadingTerm) {
  for (int n = 2; n <= 6; ++n) {
    const auto fit = fit_xi_series(n, 0.0);
    EXPECT_NEAR(fit.coefficients[0], 8.0, 1e-6);
    for (std::size_t j = 1; j < fit.coefficients.size(); ++j)
      EXPECT_NEAR(fit.coefficients[j], 0.0, 1e-6) << "N=" << n << " c_" << j + 1;
  }
}

TEST(SeriesFit, ClosedFormReproducesPipeline) {
  const auto& table = cached_xi_coefficients(6);
  const auto pipeline = numeric_ep_pipeline();
  for (int n = 2; n <= 6; ++n)
    for (double phi : {0.0, 0.6, M_PI / 2})
      for (double t : {0.3, 1.0, 2.0})
        EXPECT_NEAR(nu_closed_form_bkc_ep(n, phi, 1.0, t, table.coefficients), pipeline(n, phi, t),
                    1e-7)
            << n << " " << phi << " " << t;
}

TEST(SeriesFit, CacheReturnsSameTable) {
  const auto& a = cached_xi_coefficients(4);
  const auto& b = cached_xi_coefficients(4);
  EXPECT_EQ(&a, &b);
}

TEST(SeriesFit, RejectsSmallN) { EXPECT_THROW(xi_series_coefficients(1), Error); }

TEST(ExpFit, RecoversSyntheticParameters) {
  std::vector<double> x, y;
  for (int n = 2; n <= 30; ++n) {
    x.push_back(n);
    y.push_back(-4.11 * std::exp(-0.4633 * n) + 2.493);
  }
  const auto fit = fit_exponential(x, y);
  EXPECT_NEAR(fit.a, -4.11, 1e-5);
  EXPECT_NEAR(fit.b, -0.4633, 1e-6);
  EXPECT_NEAR(fit.c, 2.493, 1e-6);
  EXPECT_LT(fit.rms, 1e-8);
}

TEST(ExpFit, NeedsThreePoints) { EXPECT_THROW(fit_exponential({1, 2}, {1, 2}), Error); }
