#pragma once

// Zero-mean Gaussian states evolved by the symplectic flow S(t) = exp(K t):
// sigma(t) = S sigma(0) S^T.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "epchain/chain_model.hpp"
#include "epchain/error.hpp"
#include "epchain/linalg.hpp"
#include "epchain/parallel.hpp"

namespace epchain {

/// Largest admissible ||K t||_1 before exp(K t) is refused.
inline constexpr double kMaxGrowthExponent = 300.0;

/// Smallest eigenvalue of the Hermitian matrix sigma + i Omega.
inline double bona_fide_margin(const RMatrix& cm) {
  const int n = static_cast<int>(cm.rows() / 2);
  const CMatrix h = cm.cast<cplx>() + cplx(0.0, 1.0) * symplectic_form(n).cast<cplx>();
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::EigensolverFailure, "bona fide check did not converge");
  return solver.eigenvalues()(0);
}

/// Covariance matrix sigma_ij = <b_i b_j + b_j b_i> - 2<b_i><b_j>, b = (X1, P1, ..., XN, PN).
/// Vacuum is the identity. Means are identically zero.
class GaussianState {
 public:
  /// `pure` asserts det sigma = 1 by construction (vacuum, or symplectic images of a pure state).
  GaussianState(int n_modes, RMatrix cm, bool pure = false)
      : n_modes_(n_modes), cm_(std::move(cm)), pure_(pure) {
    if (n_modes_ < 1) throw Error(ErrorCode::NonPositiveN, "state needs at least one mode");
    if (cm_.rows() != 2 * n_modes_ || cm_.cols() != 2 * n_modes_)
      throw Error(ErrorCode::DimensionMismatch, "covariance matrix must be 2N x 2N");
    if (!cm_.allFinite()) throw Error(ErrorCode::NonFiniteParameter, "covariance matrix");
    const double scale = std::max(1.0, max_abs(cm_));
    if (max_abs(RMatrix(cm_ - cm_.transpose())) > 1e-12 * scale)
      throw Error(ErrorCode::AsymmetricInput, "covariance matrix is not symmetric");
    const double margin = bona_fide_margin(cm_);
    if (margin < -1e-9 * scale)
      throw Error(ErrorCode::OutOfRange,
                  "covariance matrix violates sigma + i Omega >= 0 (min eigenvalue " +
                      std::to_string(margin) + ")");
  }

  int n_modes() const noexcept { return n_modes_; }
  const RMatrix& cm() const noexcept { return cm_; }
  bool is_pure() const noexcept { return pure_; }

 private:
  int n_modes_;
  RMatrix cm_;
  bool pure_;
};

inline GaussianState initial_state(int n_modes, const std::vector<double>& thermal_occupancies) {
  if (n_modes < 1) throw Error(ErrorCode::NonPositiveN, "n_modes must be >= 1");
  if (thermal_occupancies.size() != static_cast<std::size_t>(n_modes))
    throw Error(ErrorCode::LengthMismatch, "one thermal occupancy per mode required");
  RMatrix cm = RMatrix::Zero(2 * n_modes, 2 * n_modes);
  bool pure = true;
  for (int k = 0; k < n_modes; ++k) {
    const double nbar = thermal_occupancies[static_cast<std::size_t>(k)];
    if (!std::isfinite(nbar)) throw Error(ErrorCode::NonFiniteParameter, "thermal occupancy");
    if (nbar < 0.0) throw Error(ErrorCode::NegativeOccupancy, "thermal occupancy must be >= 0");
    cm(2 * k, 2 * k) = cm(2 * k + 1, 2 * k + 1) = 2.0 * nbar + 1.0;
    pure = pure && nbar == 0.0;
  }
  return GaussianState(n_modes, std::move(cm), pure);
}

inline GaussianState vacuum_state(int n_modes) {
  return initial_state(n_modes, std::vector<double>(static_cast<std::size_t>(std::max(n_modes, 0)), 0.0));
}

struct SymplecticPropagator {
  RMatrix s;
  double t = 0.0;
};

/// Deviation from S Omega S^T = Omega, relative to max(1, max|S|^2).
inline double symplectic_defect(const RMatrix& s, const RMatrix& omega) {
  const double scale = std::max(1.0, max_abs(s) * max_abs(s));
  return max_abs(RMatrix(s * omega * s.transpose() - omega)) / scale;
}

inline double growth_exponent(const RealGenerator& k, double t) {
  return norm_1(k.data()) * std::abs(t);
}

inline SymplecticPropagator propagator(const RealGenerator& k, double t) {
  if (!std::isfinite(t)) throw Error(ErrorCode::NonFiniteParameter, "time");
  if (!k.data().allFinite()) throw Error(ErrorCode::NonFiniteParameter, "generator");
  const double growth = growth_exponent(k, t);
  if (growth > kMaxGrowthExponent)
    throw Error(ErrorCode::OverflowRisk,
                "||K t||_1 = " + std::to_string(growth) + " exceeds " +
                    std::to_string(kMaxGrowthExponent));
  return SymplecticPropagator{expm(RMatrix(k.data() * t)), t};
}

inline GaussianState transport(const GaussianState& state, const SymplecticPropagator& p) {
  if (p.s.rows() != state.cm().rows())
    throw Error(ErrorCode::DimensionMismatch, "propagator and state sizes differ");
  RMatrix cm = p.s * state.cm() * p.s.transpose();
  cm = 0.5 * (cm + cm.transpose()).eval();
  return GaussianState(state.n_modes(), std::move(cm), state.is_pure());
}

inline GaussianState evolve(const GaussianState& state, const RealGenerator& k, double t) {
  if (k.n_modes() != state.n_modes())
    throw Error(ErrorCode::DimensionMismatch, "generator and state mode counts differ");
  return transport(state, propagator(k, t));
}

/// One state per time, each computed directly from t = 0.
inline std::vector<GaussianState> evolve_trajectory(const GaussianState& state,
                                                    const RealGenerator& k,
                                                    const std::vector<double>& times,
                                                    unsigned threads = 1) {
  if (!std::is_sorted(times.begin(), times.end()))
    throw Error(ErrorCode::UnsortedTimes, "times must be ascending");
  std::vector<RMatrix> cms(times.size());
  parallel_for(times.size(), threads,
               [&](std::size_t i) { cms[i] = evolve(state, k, times[i]).cm(); });
  std::vector<GaussianState> out;
  out.reserve(times.size());
  for (auto& cm : cms) out.emplace_back(state.n_modes(), std::move(cm), state.is_pure());
  return out;
}

}  // namespace epchain
