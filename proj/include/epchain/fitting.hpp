#pragma once

// Least-squares fits: the polynomial series xi_N(t) = 1 + sum_j c_j (Jt)^(2j)
// extracted from the numeric pipeline, and a*exp(b x) + c for R(N).

#include <boost/math/tools/minima.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "epchain/entanglement.hpp"
#include "epchain/error.hpp"

namespace epchain {

struct SeriesFitOptions {
  double t_min = 0.05;  // in units of 1/J
  double t_max = 1.0;
  int nodes = 40;
  double max_residual = 1e-6;
  double consistency_tol = 1e-4;  // relative, across N
};

struct SeriesFit {
  int n_modes = 0;
  double phi = 0.0;
  std::vector<double> coefficients;  // c_1 .. c_{N-1}
  double residual = 0.0;             // max |fit - xi| over the nodes
};

/// Fits xi_N from the (1|N-1) witness of the uniform chain at g = J = 1, eta = 0.
inline SeriesFit fit_xi_series(int n_modes, double phi, const SeriesFitOptions& opts = {}) {
  if (n_modes < 2) throw Error(ErrorCode::OutOfRange, "series fit needs N >= 2");
  const int terms = n_modes - 1;
  const auto pipeline = numeric_ep_pipeline(1.0);
  RMatrix design(opts.nodes, terms);
  RVector rhs(opts.nodes);
  for (int i = 0; i < opts.nodes; ++i) {
    const double t = opts.t_min + (opts.t_max - opts.t_min) * i / (opts.nodes - 1);
    const double x2 = t * t;
    double p = 1.0;
    for (int j = 0; j < terms; ++j) {
      p *= x2;
      design(i, j) = p;
    }
    rhs(i) = xi_from_nu(pipeline(n_modes, phi, t)) - 1.0;
  }
  // Column scaling keeps the Vandermonde-type system well conditioned.
  RVector col_scale = design.colwise().norm().transpose();
  const RMatrix scaled = design * col_scale.cwiseInverse().asDiagonal();
  const RVector y = scaled.colPivHouseholderQr().solve(rhs);
  const RVector c = y.cwiseQuotient(col_scale);

  SeriesFit fit;
  fit.n_modes = n_modes;
  fit.phi = phi;
  fit.coefficients.assign(c.data(), c.data() + c.size());
  fit.residual = (design * c - rhs).cwiseAbs().maxCoeff();
  if (fit.residual > opts.max_residual)
    throw Error(ErrorCode::FitResidualTooLarge,
                "N=" + std::to_string(n_modes) + " residual " + std::to_string(fit.residual));
  return fit;
}

struct CoefficientTable {
  std::vector<double> coefficients;  // c_1 .. c_{max_n-1}, from the largest N
  std::vector<SeriesFit> fits;       // one per N = 2 .. max_n
  double max_inconsistency = 0.0;    // worst relative spread of shared c_j
};

/// Runs the series fit for every N up to max_n at phi = pi/2 and checks that
/// coefficients shared between N and N+1 agree.
inline CoefficientTable xi_series_coefficients(int max_n, const SeriesFitOptions& opts = {}) {
  if (max_n < 2) throw Error(ErrorCode::OutOfRange, "max_n must be >= 2");
  CoefficientTable table;
  for (int n = 2; n <= max_n; ++n) table.fits.push_back(fit_xi_series(n, std::numbers::pi / 2.0, opts));
  for (std::size_t i = 1; i < table.fits.size(); ++i) {
    const auto& prev = table.fits[i - 1].coefficients;
    const auto& cur = table.fits[i].coefficients;
    for (std::size_t j = 0; j < prev.size(); ++j) {
      const double rel = std::abs(prev[j] - cur[j]) / std::max(std::abs(cur[j]), 1e-300);
      table.max_inconsistency = std::max(table.max_inconsistency, rel);
    }
  }
  if (table.max_inconsistency > opts.consistency_tol)
    throw Error(ErrorCode::FitResidualTooLarge,
                "coefficients disagree across N (relative " +
                    std::to_string(table.max_inconsistency) + ")");
  table.coefficients = table.fits.back().coefficients;
  return table;
}

/// Fitted coefficients up to c_{max_n-1}, computed once per max_n and cached.
inline const CoefficientTable& cached_xi_coefficients(int max_n = 6) {
  static std::mutex mutex;
  static std::map<int, CoefficientTable> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(max_n);
  if (it == cache.end()) it = cache.emplace(max_n, xi_series_coefficients(max_n)).first;
  return it->second;
}

struct ExpFit {
  double a = 0.0, b = 0.0, c = 0.0;
  double rms = 0.0;
};

/// y ~ a exp(b x) + c. For fixed b the model is linear in (a, c); b is found by
/// a bracketed 1-D minimisation of the projected residual over [b_lo, b_hi].
inline ExpFit fit_exponential(const std::vector<double>& x, const std::vector<double>& y,
                              double b_lo = -5.0, double b_hi = -1e-3) {
  if (x.size() != y.size() || x.size() < 3)
    throw Error(ErrorCode::LengthMismatch, "exponential fit needs >= 3 matched points");
  const auto m = static_cast<Eigen::Index>(x.size());
  auto solve_linear = [&](double b, double& a, double& c) {
    RMatrix design(m, 2);
    RVector rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      design(i, 0) = std::exp(b * x[static_cast<std::size_t>(i)]);
      design(i, 1) = 1.0;
      rhs(i) = y[static_cast<std::size_t>(i)];
    }
    const RVector sol = design.colPivHouseholderQr().solve(rhs);
    a = sol(0);
    c = sol(1);
    return (design * sol - rhs).squaredNorm();
  };
  auto objective = [&](double b) {
    double a, c;
    return solve_linear(b, a, c);
  };
  // Coarse scan to pick the basin, then Brent inside the neighbouring cells.
  constexpr int scan = 400;
  double best_b = b_lo, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= scan; ++i) {
    const double b = b_lo + (b_hi - b_lo) * i / scan;
    const double v = objective(b);
    if (v < best) {
      best = v;
      best_b = b;
    }
  }
  const double cell = (b_hi - b_lo) / scan;
  const auto r = boost::math::tools::brent_find_minima(
      objective, std::max(b_lo, best_b - cell), std::min(b_hi, best_b + cell), 52);
  ExpFit fit;
  fit.b = r.first;
  const double sse = solve_linear(fit.b, fit.a, fit.c);
  fit.rms = std::sqrt(sse / static_cast<double>(m));
  return fit;
}

}  // namespace epchain
