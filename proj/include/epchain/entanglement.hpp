#pragma once

// PPT entanglement witnesses for Gaussian states: partial transpose, symplectic
// spectra, nu_minus and logarithmic negativity (natural log throughout), plus
// closed-form expressions for the two-mode chain, the EP_N chain and the
// nonuniform three-mode chain.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epchain/chain_model.hpp"
#include "epchain/error.hpp"
#include "epchain/gaussian_dynamics.hpp"
#include "epchain/linalg.hpp"

namespace epchain {

/// Two complementary, non-empty sets of 0-based mode indices. Side B has its
/// momenta flipped by the partial transpose.
class Bipartition {
 public:
  Bipartition(int n_modes, std::set<int> side_a, std::set<int> side_b)
      : n_modes_(n_modes), side_a_(std::move(side_a)), side_b_(std::move(side_b)) {
    if (side_a_.empty() || side_b_.empty())
      throw Error(ErrorCode::InvalidBipartition, "both sides must be non-empty");
    for (int m : side_a_)
      if (m < 0 || m >= n_modes_ || side_b_.count(m))
        throw Error(ErrorCode::InvalidBipartition, "mode index out of range or on both sides");
    for (int m : side_b_)
      if (m < 0 || m >= n_modes_)
        throw Error(ErrorCode::InvalidBipartition, "mode index out of range");
    if (static_cast<int>(side_a_.size() + side_b_.size()) != n_modes_)
      throw Error(ErrorCode::InvalidBipartition, "sides must cover every mode");
  }

  /// Mode 1 against the rest, (1|N-1).
  static Bipartition one_vs_rest(int n_modes) {
    std::set<int> rest;
    for (int m = 1; m < n_modes; ++m) rest.insert(m);
    return Bipartition(n_modes, {0}, std::move(rest));
  }

  /// Parses "13|2" (single-digit, 1-based) or "1,3|2" (comma separated).
  static Bipartition parse(std::string_view text, int n_modes) {
    const auto bar = text.find('|');
    if (bar == std::string_view::npos || text.find('|', bar + 1) != std::string_view::npos)
      throw Error(ErrorCode::InvalidBipartition, "expected exactly one '|' in '" +
                                                     std::string(text) + "'");
    return Bipartition(n_modes, parse_side(text.substr(0, bar)), parse_side(text.substr(bar + 1)));
  }

  int n_modes() const noexcept { return n_modes_; }
  const std::set<int>& side_a() const noexcept { return side_a_; }
  const std::set<int>& side_b() const noexcept { return side_b_; }

  std::string label() const {
    const bool compact = n_modes_ <= 9;
    auto side = [&](const std::set<int>& s) {
      std::string out;
      for (int m : s) {
        if (!compact && !out.empty()) out += ',';
        out += std::to_string(m + 1);
      }
      return out;
    };
    return side(side_a_) + "|" + side(side_b_);
  }

 private:
  static std::set<int> parse_side(std::string_view text) {
    std::set<int> out;
    const bool commas = text.find(',') != std::string_view::npos;
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      out.insert(std::stoi(token) - 1);
      token.clear();
    };
    for (char ch : text) {
      if (ch == ',') {
        flush();
      } else if (ch >= '0' && ch <= '9') {
        token += ch;
        if (!commas) flush();
      } else if (ch != ' ') {
        throw Error(ErrorCode::InvalidBipartition, "unexpected character in partition");
      }
    }
    flush();
    return out;
  }

  int n_modes_;
  std::set<int> side_a_;
  std::set<int> side_b_;
};

/// Diagonal of Theta: -1 on the P quadrature of every side-B mode.
inline RVector partial_transpose_signs(const Bipartition& part) {
  RVector theta = RVector::Ones(2 * part.n_modes());
  for (int m : part.side_b()) theta(2 * m + 1) = -1.0;
  return theta;
}

inline RMatrix partial_transpose(const RMatrix& cm, const Bipartition& part) {
  if (cm.rows() != 2 * part.n_modes())
    throw Error(ErrorCode::InvalidBipartition, "partition does not match state size");
  const RVector theta = partial_transpose_signs(part);
  return theta.asDiagonal() * cm * theta.asDiagonal();
}

inline RMatrix partial_transpose(const GaussianState& state, const Bipartition& part) {
  return partial_transpose(state.cm(), part);
}

/// The N moduli of the +- paired eigenvalues of i Omega sigma, ascending.
/// For positive-definite sigma = L L^T these are |eig(i L^T Omega L)|, a Hermitian problem.
inline std::vector<double> symplectic_eigenvalues(const RMatrix& cm) {
  if (cm.rows() != cm.cols() || cm.rows() % 2 != 0)
    throw Error(ErrorCode::DimensionMismatch, "covariance matrix must be 2N x 2N");
  const double scale = std::max(1.0, max_abs(cm));
  if (max_abs(RMatrix(cm - cm.transpose())) > 1e-12 * scale)
    throw Error(ErrorCode::AsymmetricInput, "symplectic spectrum needs a symmetric matrix");
  const int n = static_cast<int>(cm.rows() / 2);
  const RMatrix omega = symplectic_form(n);
  const RMatrix sym = 0.5 * (cm + cm.transpose());

  std::vector<double> moduli;
  Eigen::LLT<RMatrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    const RMatrix l = llt.matrixL();
    const CMatrix h = cplx(0.0, 1.0) * (l.transpose() * omega * l).cast<cplx>();
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
      throw Error(ErrorCode::EigensolverFailure, "symplectic spectrum did not converge");
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
      moduli.push_back(std::abs(solver.eigenvalues()(i)));
  } else {
    const CMatrix g = cplx(0.0, 1.0) * (omega * sym).cast<cplx>();
    Eigen::ComplexEigenSolver<CMatrix> solver(g, false);
    if (solver.info() != Eigen::Success)
      throw Error(ErrorCode::EigensolverFailure, "symplectic spectrum did not converge");
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
      moduli.push_back(std::abs(solver.eigenvalues()(i)));
  }
  // Each modulus appears twice (the +- pair); keep every other one.
  std::sort(moduli.begin(), moduli.end());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < moduli.size(); i += 2) out.push_back(0.5 * (moduli[i] + moduli[i + 1]));
  return out;
}

struct EntanglementResult {
  std::vector<double> symplectic_eigenvalues_pt;
  double nu_minus = 1.0;
  double log_negativity = 0.0;
};

inline double log_negativity_of(const std::vector<double>& pt_eigenvalues) {
  double sum = 0.0;
  for (double v : pt_eigenvalues)
    if (v < 1.0) sum -= std::log(v);
  return sum;
}

/// For a pure state the partially transposed spectrum is closed under v -> 1/v
/// (mode-wise two-mode-squeezed form). The small members are rebuilt from their
/// large partners, which carry relative error eps ||sigma|| / v_max instead of
/// eps ||sigma|| / v_min.
inline void pair_pure_spectrum(std::vector<double>& v) {
  for (std::size_t i = 0, j = v.size() - 1; i < j; ++i, --j) v[i] = 1.0 / v[j];
  if (v.size() % 2 == 1) v[v.size() / 2] = 1.0;
}

inline EntanglementResult entanglement(const GaussianState& state, const Bipartition& part) {
  EntanglementResult r;
  r.symplectic_eigenvalues_pt = symplectic_eigenvalues(partial_transpose(state, part));
  if (state.is_pure()) pair_pure_spectrum(r.symplectic_eigenvalues_pt);
  r.nu_minus = r.symplectic_eigenvalues_pt.front();
  r.log_negativity = log_negativity_of(r.symplectic_eigenvalues_pt);
  return r;
}

inline double nu_minus(const GaussianState& state, const Bipartition& part) {
  return entanglement(state, part).nu_minus;
}

inline double log_negativity(const GaussianState& state, const Bipartition& part) {
  return entanglement(state, part).log_negativity;
}

/// nu = sqrt(xi - sqrt(xi^2 - 1)), evaluated as 1/sqrt(xi + sqrt(xi^2 - 1)).
inline double nu_from_xi(double xi) {
  if (!(xi >= 1.0)) throw Error(ErrorCode::OutOfRange, "xi must be >= 1");
  return 1.0 / std::sqrt(xi + std::sqrt((xi - 1.0) * (xi + 1.0)));
}

inline double xi_from_nu(double nu) {
  if (!(nu > 0.0 && nu <= 1.0)) throw Error(ErrorCode::OutOfRange, "nu_minus must be in (0, 1]");
  return 0.5 * (nu * nu + 1.0 / (nu * nu));
}

/// Closed form for the two-mode chain without single-mode squeezing, vacuum input:
/// xi = (g^2 - J^2 cos(4ct)) / c^2 with c = sqrt(g^2 - J^2), written as
/// 1 + 2 J^2 sin^2(2ct)/c^2 (or sinh for imaginary c); power series near c = 0.
inline double xi_two_mode(double g, double J, double t) {
  const double u = g * g - J * J;
  const double j2 = J * J;
  if (std::abs(u) <= 1e-8 * j2) {
    // (1 - cos(4 sqrt(u) t)) / u = sum_k (-1)^(k+1) (4t)^(2k) u^(k-1) / (2k)!
    const double x2 = 16.0 * t * t;
    double term = x2 / 2.0;
    double sum = term;
    for (int k = 2; k < 40; ++k) {
      term *= -x2 * u / ((2.0 * k - 1.0) * (2.0 * k));
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return 1.0 + j2 * sum;
  }
  const double c = std::sqrt(std::abs(u));
  const double s = u > 0 ? std::sin(2.0 * c * t) : std::sinh(2.0 * c * t);
  return 1.0 + 2.0 * j2 * s * s / (c * c);
}

inline double nu_closed_form_two_mode(double g, double J, double t) {
  return nu_from_xi(xi_two_mode(g, J, t));
}

/// xi_N = 1 + sum_j c_j (J t)^(2j) sin^(2(j-1))(phi), j = 1..N-1, at g = J and eta = 0.
inline double xi_bkc_ep(int n_modes, double phi, double J, double t,
                        const std::vector<double>& coefficients) {
  if (n_modes < 1) throw Error(ErrorCode::NonPositiveN, "n_modes must be >= 1");
  if (coefficients.size() + 1 < static_cast<std::size_t>(n_modes))
    throw Error(ErrorCode::MissingCoefficients,
                "need " + std::to_string(n_modes - 1) + " coefficients, have " +
                    std::to_string(coefficients.size()));
  const double x2 = (J * t) * (J * t);
  const double s2 = std::sin(phi) * std::sin(phi);
  double xi = 1.0, power = 1.0, phase = 1.0;
  for (int j = 1; j < n_modes; ++j) {
    power *= x2;
    xi += coefficients[static_cast<std::size_t>(j - 1)] * power * phase;
    phase *= s2;
  }
  return xi;
}

inline double nu_closed_form_bkc_ep(int n_modes, double phi, double J, double t,
                                    const std::vector<double>& coefficients) {
  return nu_from_xi(xi_bkc_ep(n_modes, phi, J, t, coefficients));
}

/// Angle along g1^2 + g2^2 = 2 J^2 measured from the arc point g1 = g2.
inline double surface_angle(double g1, double g2) {
  return std::numbers::pi / 4.0 - std::atan2(g2, g1);
}

/// (g1, g2) on g1^2 + g2^2 = 2 J^2 at angle varphi.
inline std::pair<double, double> surface_point(double varphi, double J) {
  const double radius = std::sqrt(2.0) * J;
  const double theta = std::numbers::pi / 4.0 - varphi;
  return {radius * std::cos(theta), radius * std::sin(theta)};
}

/// (13|2) witness of the three-mode chain on the exceptional surface with J1 = J2 = J.
inline double xi_three_mode_nonuniform(double varphi, double J, double t) {
  const double x2 = (J * t) * (J * t);
  const double s = std::sin(varphi);
  return 32.0 * x2 * x2 * s * s + 16.0 * x2 + 1.0;
}

inline double nu_closed_form_three_mode_nonuniform(double varphi, double J, double t) {
  return nu_from_xi(xi_three_mode_nonuniform(varphi, J, t));
}

/// nu_minus of the vacuum evolved for time t under the chain.
inline double pipeline_nu_minus(const ChainSpec& spec, double t, const Bipartition& part) {
  const RealGenerator k = quadrature_generator(build_bdg_matrix(spec));
  return nu_minus(evolve(vacuum_state(spec.n_modes()), k, t), part);
}

/// nu_minus(N, phi, t) for the uniform chain at g = J, eta = 0, cut (1|N-1).
using EpPipeline = std::function<double(int, double, double)>;

inline EpPipeline numeric_ep_pipeline(double J = 1.0) {
  return [J](int n, double phi, double t) {
    return pipeline_nu_minus(ChainSpec::uniform(n, J, J, 0.0, phi), t, Bipartition::one_vs_rest(n));
  };
}

/// R(t) = log nu(pi/2, t) / log nu(0, t).
inline double enhancement_ratio(int n_modes, double t, const EpPipeline& pipeline) {
  const double denom = std::log(pipeline(n_modes, 0.0, t));
  if (std::abs(denom) <= 1e-14)
    throw Error(ErrorCode::DivisionByZeroLog, "nu_minus(0, t) = 1, ratio undefined");
  return std::log(pipeline(n_modes, std::numbers::pi / 2.0, t)) / denom;
}

inline double enhancement_ratio(int n_modes, double t) {
  return enhancement_ratio(n_modes, t, numeric_ep_pipeline());
}

}  // namespace epchain
