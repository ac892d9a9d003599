#pragma once

// N-mode bosonic chain with beam-splitter hopping g_j e^{i phi_j}, two-mode
// squeezing J_j between neighbours and single-mode squeezing eta_j:
//
//   H = sum_j eta_j/2 a_j^2 + sum_j (g_j a_j^+ a_{j+1} + J_j a_j^+ a_{j+1}^+) + h.c.
//
// The Heisenberg equations i dPhi/dt = M Phi with Phi = [a, a^+] give the BdG
// matrix M = [[A, B], [-B*, -A*]] built below.

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "epchain/error.hpp"
#include "epchain/linalg.hpp"

namespace epchain {

/// A parameter that is either broadcast from a scalar or given per bond/site.
using ParamValue = std::variant<double, std::vector<double>>;

/// Raw parameter record, as read from a config file or command line.
struct ChainConfig {
  int n = 0;
  ParamValue g = 0.0;
  ParamValue phi = 0.0;
  ParamValue J = 0.0;
  ParamValue eta = 0.0;
};

class ChainSpec {
 public:
  ChainSpec(int n_modes, std::vector<cplx> hopping, std::vector<double> pairing,
            std::vector<cplx> sms)
      : n_modes_(n_modes),
        hopping_(std::move(hopping)),
        pairing_(std::move(pairing)),
        sms_(std::move(sms)) {
    if (n_modes_ < 1)
      throw Error(ErrorCode::NonPositiveN, "n_modes must be >= 1, got " + std::to_string(n_modes_));
    const auto bonds = static_cast<std::size_t>(n_modes_ - 1);
    if (hopping_.size() != bonds || pairing_.size() != bonds)
      throw Error(ErrorCode::LengthMismatch,
                  "expected " + std::to_string(bonds) + " bond parameters for N=" +
                      std::to_string(n_modes_) + ", got hopping=" +
                      std::to_string(hopping_.size()) + " pairing=" +
                      std::to_string(pairing_.size()));
    if (sms_.size() != static_cast<std::size_t>(n_modes_))
      throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(n_modes_) +
                                                 " site parameters, got " +
                                                 std::to_string(sms_.size()));
    for (const cplx& v : hopping_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw Error(ErrorCode::NonFiniteParameter, "hopping");
    for (double v : pairing_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteParameter, "pairing");
      if (v < 0.0) throw Error(ErrorCode::OutOfRange, "pairing rates must be nonnegative");
    }
    for (const cplx& v : sms_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw Error(ErrorCode::NonFiniteParameter, "sms");
  }

  int n_modes() const noexcept { return n_modes_; }
  const std::vector<cplx>& hopping() const noexcept { return hopping_; }
  const std::vector<double>& pairing() const noexcept { return pairing_; }
  const std::vector<cplx>& sms() const noexcept { return sms_; }

  /// Uniform chain: |g| e^{i phi} on every bond, J on every bond, eta on every site.
  static ChainSpec uniform(int n_modes, double g, double J, double eta = 0.0, double phi = 0.0) {
    if (n_modes < 1)
      throw Error(ErrorCode::NonPositiveN, "n_modes must be >= 1, got " + std::to_string(n_modes));
    const auto bonds = static_cast<std::size_t>(n_modes - 1);
    return ChainSpec(n_modes, std::vector<cplx>(bonds, std::polar(1.0, phi) * g),
                     std::vector<double>(bonds, J),
                     std::vector<cplx>(static_cast<std::size_t>(n_modes), cplx(eta, 0.0)));
  }

  /// Three-mode chain with per-bond real hopping and pairing, no single-mode squeezing.
  static ChainSpec three_mode(double g1, double g2, double J1, double J2) {
    return ChainSpec(3, {cplx(g1, 0.0), cplx(g2, 0.0)}, {J1, J2}, std::vector<cplx>(3, 0.0));
  }

 private:
  int n_modes_;
  std::vector<cplx> hopping_;
  std::vector<double> pairing_;
  std::vector<cplx> sms_;
};

namespace detail {

inline std::vector<double> expand(const ParamValue& value, std::size_t length, const char* name) {
  if (const double* scalar = std::get_if<double>(&value)) {
    if (!std::isfinite(*scalar)) throw Error(ErrorCode::NonFiniteParameter, name);
    return std::vector<double>(length, *scalar);
  }
  const auto& seq = std::get<std::vector<double>>(value);
  if (seq.size() != length)
    throw Error(ErrorCode::LengthMismatch, std::string(name) + " has " +
                                               std::to_string(seq.size()) + " entries, expected " +
                                               std::to_string(length));
  for (double v : seq)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteParameter, name);
  return seq;
}

}  // namespace detail

/// Validates a parameter record and broadcasts scalars to per-bond / per-site sequences.
inline ChainSpec build_chain_spec(const ChainConfig& config) {
  if (config.n < 1)
    throw Error(ErrorCode::NonPositiveN, "n must be >= 1, got " + std::to_string(config.n));
  const auto bonds = static_cast<std::size_t>(config.n - 1);
  const auto sites = static_cast<std::size_t>(config.n);
  const auto g = detail::expand(config.g, bonds, "g");
  const auto phi = detail::expand(config.phi, bonds, "phi");
  const auto pairing = detail::expand(config.J, bonds, "J");
  const auto eta = detail::expand(config.eta, sites, "eta");

  std::vector<cplx> hopping(bonds);
  for (std::size_t j = 0; j < bonds; ++j) hopping[j] = std::polar(1.0, phi[j]) * g[j];
  std::vector<cplx> sms(eta.begin(), eta.end());
  return ChainSpec(config.n, std::move(hopping), pairing, std::move(sms));
}

/// Dynamical matrix M acting on Phi = [a_1..a_N, a_1^+..a_N^+].
class BdgMatrix {
 public:
  BdgMatrix(int n_modes, CMatrix data) : n_modes_(n_modes), data_(std::move(data)) {}

  int n_modes() const noexcept { return n_modes_; }
  Eigen::Index size() const noexcept { return data_.rows(); }
  const CMatrix& data() const noexcept { return data_; }

  auto a_block() const { return data_.topLeftCorner(n_modes_, n_modes_); }
  auto b_block() const { return data_.topRightCorner(n_modes_, n_modes_); }

 private:
  int n_modes_;
  CMatrix data_;
};

/// Real generator K with d/dt beta = K beta, beta = (X1, P1, ..., XN, PN).
class RealGenerator {
 public:
  RealGenerator(int n_modes, RMatrix data) : n_modes_(n_modes), data_(std::move(data)) {}

  int n_modes() const noexcept { return n_modes_; }
  Eigen::Index size() const noexcept { return data_.rows(); }
  const RMatrix& data() const noexcept { return data_; }

 private:
  int n_modes_;
  RMatrix data_;
};

inline BdgMatrix build_bdg_matrix(const ChainSpec& spec) {
  const int n = spec.n_modes();
  CMatrix a = CMatrix::Zero(n, n);
  CMatrix b = CMatrix::Zero(n, n);
  // i da_k/dt = [a_k, H]
  for (int j = 0; j + 1 < n; ++j) {
    const cplx g = spec.hopping()[static_cast<std::size_t>(j)];
    const double pair = spec.pairing()[static_cast<std::size_t>(j)];
    a(j, j + 1) = g;
    a(j + 1, j) = std::conj(g);
    b(j, j + 1) = pair;
    b(j + 1, j) = pair;
  }
  for (int j = 0; j < n; ++j) b(j, j) = std::conj(spec.sms()[static_cast<std::size_t>(j)]);

  CMatrix m(2 * n, 2 * n);
  m.topLeftCorner(n, n) = a;
  m.topRightCorner(n, n) = b;
  m.bottomLeftCorner(n, n) = -b.conjugate();
  m.bottomRightCorner(n, n) = -a.conjugate();
  return BdgMatrix(n, std::move(m));
}

/// Unitary T with Phi = T beta, for X = (a + a^+)/sqrt2, P = -i(a - a^+)/sqrt2.
inline CMatrix quadrature_transform(int n_modes) {
  const double r = 1.0 / std::sqrt(2.0);
  CMatrix t = CMatrix::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    t(k, 2 * k) = r;
    t(k, 2 * k + 1) = cplx(0.0, r);
    t(n_modes + k, 2 * k) = r;
    t(n_modes + k, 2 * k + 1) = cplx(0.0, -r);
  }
  return t;
}

/// K = -i T^+ M T. Eigenvalues of K are -i times those of M.
inline RealGenerator quadrature_generator(const BdgMatrix& m) {
  const int n = m.n_modes();
  const CMatrix t = quadrature_transform(n);
  const CMatrix k = cplx(0.0, -1.0) * (t.adjoint() * m.data() * t);
  const double scale = std::max(1.0, max_abs(k));
  const double residual = k.size() == 0 ? 0.0 : k.imag().cwiseAbs().maxCoeff();
  if (residual > 1e-12 * scale)
    throw Error(ErrorCode::ImaginaryResidual,
                "quadrature generator has imaginary part " + std::to_string(residual));
  return RealGenerator(n, k.real());
}

}  // namespace epchain
