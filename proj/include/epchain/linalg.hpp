#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace epchain {

using cplx = std::complex<double>;
using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

/// Symplectic form for n modes in (X1, P1, ..., Xn, Pn) ordering: a direct sum of [[0, 1], [-1, 0]].
inline RMatrix symplectic_form(int n_modes) {
  RMatrix omega = RMatrix::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

inline double max_abs(const RMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }
inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

template <typename Derived>
double norm_1(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

template <typename Derived>
double spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(m);
  return svd.singularValues()(0);
}

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant
/// (Higham, SIAM J. Matrix Anal. Appl. 26, 2005). Accurate for defective matrices.
inline RMatrix expm(const RMatrix& a) {
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  constexpr double theta13 = 5.371920351148152;
  constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                          1187353796428800.0,  129060195264000.0,   10559470521600.0,
                          670442572800.0,      33522128640.0,       1323241920.0,
                          40840800.0,          960960.0,            16380.0,
                          182.0,               1.0};

  const double norm = norm_1(a);
  if (norm == 0.0) return RMatrix::Identity(n, n);
  int squarings = 0;
  if (norm > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
  const RMatrix s = a / std::ldexp(1.0, squarings);

  const RMatrix id = RMatrix::Identity(n, n);
  const RMatrix s2 = s * s;
  const RMatrix s4 = s2 * s2;
  const RMatrix s6 = s4 * s2;
  const RMatrix u_inner = s6 * (b[13] * s6 + b[11] * s4 + b[9] * s2) + b[7] * s6 + b[5] * s4 +
                          b[3] * s2 + b[1] * id;
  const RMatrix u = s * u_inner;
  const RMatrix v = s6 * (b[12] * s6 + b[10] * s4 + b[8] * s2) + b[6] * s6 + b[4] * s4 +
                    b[2] * s2 + b[0] * id;
  RMatrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

/// Greedy nearest-neighbour matching between two eigenvalue multisets.
/// Returns the largest matched distance, or infinity when sizes differ.
inline double multiset_distance(std::vector<cplx> a, std::vector<cplx> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  std::vector<bool> used(b.size(), false);
  for (const cplx& x : a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(x - b[j]);
      if (d < best) {
        best = d;
        best_idx = j;
      }
    }
    used[best_idx] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace epchain
