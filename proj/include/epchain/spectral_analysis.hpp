#pragma once

// Non-Hermitian spectrum of the BdG matrix: eigenvalues, I/II/III region
// labels, Jordan structure at a given eigenvalue, exceptional-point detection
// and location along one-parameter families.

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "epchain/chain_model.hpp"
#include "epchain/error.hpp"
#include "epchain/linalg.hpp"
#include "epchain/parallel.hpp"

namespace epchain {

inline constexpr double kDefaultRegionTol = 1e-9;
inline constexpr double kRegionAbsFloor = 1e-12;
inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kDefaultClusterTol = 1e-7;

enum class Region { PurelyImaginary, PurelyReal, Mixed };

constexpr std::string_view to_string(Region r) {
  switch (r) {
    case Region::PurelyImaginary: return "PurelyImaginary";
    case Region::PurelyReal: return "PurelyReal";
    case Region::Mixed: return "Mixed";
  }
  return "?";
}

/// Region numbering used in the figures: I imaginary, II real, III mixed.
constexpr std::string_view region_numeral(Region r) {
  switch (r) {
    case Region::PurelyImaginary: return "I";
    case Region::PurelyReal: return "II";
    case Region::Mixed: return "III";
  }
  return "?";
}

inline bool eigen_less(const cplx& a, const cplx& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

inline std::vector<cplx> eigenspectrum(const CMatrix& m) {
  if (m.rows() == 0) return {};
  if (!m.allFinite()) throw Error(ErrorCode::NonFiniteParameter, "matrix has non-finite entries");
  Eigen::ComplexEigenSolver<CMatrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::EigensolverFailure, "complex eigensolver did not converge");
  std::vector<cplx> values(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + solver.eigenvalues().size());
  // Real parts are compared after rounding to 1e-9 of the spectral scale so
  // roundoff does not decide the order of (near) imaginary eigenvalues.
  double scale = 1.0;
  for (const cplx& v : values) scale = std::max(scale, std::abs(v));
  const double q = 1e-9 * scale;
  std::sort(values.begin(), values.end(), [q](const cplx& a, const cplx& b) {
    const double ra = std::round(a.real() / q), rb = std::round(b.real() / q);
    if (ra != rb) return ra < rb;
    return eigen_less(a, b);
  });
  return values;
}

inline std::vector<cplx> eigenspectrum(const BdgMatrix& m) { return eigenspectrum(m.data()); }

/// Absolute threshold used for both region labels and eigenvalue-type counts.
/// `floor_scale` (typically ||M||) keeps the threshold above eigensolver noise
/// when the whole spectrum collapses towards an EP.
inline double region_threshold(const std::vector<cplx>& spectrum, double tol, double floor_scale = 0.0) {
  double scale = floor_scale;
  for (const cplx& v : spectrum) scale = std::max(scale, std::abs(v));
  return std::max(tol * scale, kRegionAbsFloor);
}

/// Counts of eigenvalue types. Zero eigenvalues are their own category.
struct SpectrumSignature {
  int zero = 0;
  int real = 0;
  int imaginary = 0;
  int complex = 0;

  bool operator==(const SpectrumSignature&) const = default;
};

inline SpectrumSignature spectrum_signature(const std::vector<cplx>& spectrum,
                                            double tol = kDefaultRegionTol, double floor_scale = 0.0) {
  const double thr = region_threshold(spectrum, tol, floor_scale);
  SpectrumSignature sig;
  for (const cplx& v : spectrum) {
    const bool re_zero = std::abs(v.real()) <= thr;
    const bool im_zero = std::abs(v.imag()) <= thr;
    if (re_zero && im_zero)
      ++sig.zero;
    else if (im_zero)
      ++sig.real;
    else if (re_zero)
      ++sig.imaginary;
    else
      ++sig.complex;
  }
  return sig;
}

inline Region region_of(const SpectrumSignature& sig) {
  if (sig.complex == 0 && sig.imaginary == 0) return Region::PurelyReal;
  if (sig.complex == 0 && sig.real == 0) return Region::PurelyImaginary;
  return Region::Mixed;
}

/// Zero eigenvalues count as both real and imaginary; an all-zero spectrum is
/// reported as PurelyReal.
inline Region classify_region(const std::vector<cplx>& spectrum, double tol = kDefaultRegionTol) {
  return region_of(spectrum_signature(spectrum, tol));
}

struct SpectrumReport {
  std::vector<cplx> eigenvalues;
  Region region = Region::Mixed;
  double tolerance = kDefaultRegionTol;
  SpectrumSignature signature;
  /// Label changes when tol is scaled by 10 in either direction.
  bool boundary = false;
};

inline SpectrumReport analyze_spectrum(const BdgMatrix& m, double tol = kDefaultRegionTol) {
  SpectrumReport report;
  report.eigenvalues = eigenspectrum(m);
  report.tolerance = tol;
  report.signature = spectrum_signature(report.eigenvalues, tol);
  report.region = region_of(report.signature);
  report.boundary = classify_region(report.eigenvalues, tol * 10.0) != report.region ||
                    classify_region(report.eigenvalues, tol / 10.0) != report.region;
  return report;
}

/// Jordan block sizes of eigenvalue `lambda`, ascending. Uses the rank-revealing
/// SVD staircase on X = M - lambda I: at each step the numerical nullity d_k
/// (singular values <= tol * ||X||_2) equals r_{k-1} - r_k, the number of blocks
/// of size >= k, and the problem deflates onto the range. Empty when lambda is
/// not an eigenvalue at this tolerance.
inline std::vector<int> jordan_structure(const CMatrix& m, cplx lambda, double tol = kDefaultRankTol) {
  const Eigen::Index n = m.rows();
  CMatrix x = m - lambda * CMatrix::Identity(n, n);
  const double scale = spectral_norm(x);
  std::vector<int> weyr;  // weyr[k] = number of blocks of size >= k+1
  if (scale == 0.0) {
    weyr.push_back(static_cast<int>(n));
  } else {
    const double thr = tol * scale;
    CMatrix current = x;
    while (current.rows() > 0) {
      Eigen::JacobiSVD<CMatrix> svd(current, Eigen::ComputeFullV);
      const auto& s = svd.singularValues();
      int rank = 0;
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > thr / 10.0 && s(i) < thr * 10.0)
          throw Error(ErrorCode::RankAmbiguity,
                      "singular value " + std::to_string(s(i)) + " within a decade of threshold " +
                          std::to_string(thr));
        if (s(i) > thr) ++rank;
      }
      const int nullity = static_cast<int>(current.rows()) - rank;
      if (nullity == 0) break;
      weyr.push_back(nullity);
      if (rank == 0) break;
      const CMatrix v1 = svd.matrixV().leftCols(rank);
      current = v1.adjoint() * current * v1;
    }
  }
  std::vector<int> blocks;
  for (std::size_t k = 0; k < weyr.size(); ++k) {
    const int at_least = weyr[k];
    const int longer = k + 1 < weyr.size() ? weyr[k + 1] : 0;
    for (int c = 0; c < at_least - longer; ++c) blocks.push_back(static_cast<int>(k + 1));
  }
  std::sort(blocks.begin(), blocks.end());
  return blocks;
}

inline std::vector<int> jordan_structure(const BdgMatrix& m, cplx lambda,
                                         double tol = kDefaultRankTol) {
  return jordan_structure(m.data(), lambda, tol);
}

struct EpCluster {
  cplx center;
  int algebraic_multiplicity = 0;
  std::vector<int> jordan_blocks;  // ascending
  int order = 0;
};

inline std::string format_blocks(const std::vector<int>& blocks) {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(blocks[i]);
  }
  return out;
}

namespace detail {

/// Single-linkage components of `idx` (indices into values) at distance <= radius.
inline std::vector<std::vector<std::size_t>> single_linkage(const std::vector<cplx>& values,
                                                            const std::vector<std::size_t>& idx,
                                                            double radius) {
  std::vector<int> label(idx.size(), -1);
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t seed = 0; seed < idx.size(); ++seed) {
    if (label[seed] >= 0) continue;
    const int id = static_cast<int>(groups.size());
    groups.emplace_back();
    std::vector<std::size_t> stack{seed};
    label[seed] = id;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      groups[id].push_back(idx[cur]);
      for (std::size_t other = 0; other < idx.size(); ++other) {
        if (label[other] >= 0) continue;
        if (std::abs(values[idx[cur]] - values[idx[other]]) <= radius) {
          label[other] = id;
          stack.push_back(other);
        }
      }
    }
  }
  return groups;
}

inline cplx mean_of(const std::vector<cplx>& values, const std::vector<std::size_t>& idx) {
  cplx sum = 0.0;
  for (std::size_t i : idx) sum += values[i];
  return sum / static_cast<double>(idx.size());
}

}  // namespace detail

/// Exceptional points of M: eigenvalues are grouped by single linkage on a
/// ladder of radii from 0.1*scale down to cluster_tol*scale (scale = max(1, ||M||_2)).
/// A coarse group is kept only if the staircase multiplicity at its mean equals
/// its size, which absorbs the eps^(1/k) scatter of an order-k EP. At the finest
/// radius the staircase result is taken as is.
inline std::vector<EpCluster> detect_eps(const CMatrix& m, double cluster_tol = kDefaultClusterTol,
                                         double rank_tol = kDefaultRankTol) {
  const std::vector<cplx> values = eigenspectrum(m);
  const double scale = std::max(1.0, spectral_norm(m));
  std::vector<double> radii;
  for (double r = 0.1; r > cluster_tol * 1.0000001; r /= 10.0) radii.push_back(r * scale);
  radii.push_back(cluster_tol * scale);

  std::vector<EpCluster> found;
  std::function<void(const std::vector<std::size_t>&, std::size_t)> visit =
      [&](const std::vector<std::size_t>& idx, std::size_t level) {
        for (const auto& group : detail::single_linkage(values, idx, radii[level])) {
          if (group.size() < 2) continue;
          const cplx center = detail::mean_of(values, group);
          const bool finest = level + 1 == radii.size();
          std::vector<int> blocks;
          if (finest) {
            blocks = jordan_structure(m, center, rank_tol);
          } else {
            try {
              blocks = jordan_structure(m, center, rank_tol);
            } catch (const Error& e) {
              if (e.code() != ErrorCode::RankAmbiguity) throw;
              blocks.clear();
            }
            const int mult = std::accumulate(blocks.begin(), blocks.end(), 0);
            if (mult != static_cast<int>(group.size())) {
              visit(group, level + 1);
              continue;
            }
          }
          if (blocks.empty()) continue;
          EpCluster cluster;
          cluster.center = center;
          cluster.jordan_blocks = blocks;
          cluster.algebraic_multiplicity = std::accumulate(blocks.begin(), blocks.end(), 0);
          cluster.order = *std::max_element(blocks.begin(), blocks.end());
          if (cluster.order >= 2) found.push_back(std::move(cluster));
        }
      };
  std::vector<std::size_t> all(values.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (!all.empty()) visit(all, 0);
  std::sort(found.begin(), found.end(),
            [](const EpCluster& a, const EpCluster& b) { return eigen_less(a.center, b.center); });
  return found;
}

inline std::vector<EpCluster> detect_eps(const BdgMatrix& m, double cluster_tol = kDefaultClusterTol,
                                         double rank_tol = kDefaultRankTol) {
  return detect_eps(m.data(), cluster_tol, rank_tol);
}

inline int max_ep_order(const std::vector<EpCluster>& clusters) {
  int order = 0;
  for (const auto& c : clusters) order = std::max(order, c.order);
  return order;
}

using ChainFamily = std::function<ChainSpec(double)>;

struct LocateOptions {
  double tol = 1e-9;            // bisection width
  int grid_steps = 200;         // scan cells before refinement
  double region_tol = kDefaultRegionTol;
};

/// Parameter values in [lo, hi] where the eigenvalue-type signature of M
/// changes (every region-label change is one of these). Each sign change on
/// the scan grid is refined by bisection to width <= tol.
inline std::vector<double> locate_ep_1d(const ChainFamily& family, double lo, double hi,
                                        const LocateOptions& opts = {}) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorCode::OutOfRange, "interval must satisfy lo < hi");
  const int steps = std::max(1, opts.grid_steps);
  auto signature_at = [&](double p) {
    const BdgMatrix m = build_bdg_matrix(family(p));
    return spectrum_signature(eigenspectrum(m), opts.region_tol, spectral_norm(m.data()));
  };

  std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
  std::vector<SpectrumSignature> sig(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / steps;
    sig[i] = signature_at(grid[i]);
  }

  std::vector<double> hits;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (sig[i] == sig[i + 1]) continue;
    double a = grid[i], b = grid[i + 1];
    const SpectrumSignature left = sig[i];
    while (b - a > opts.tol) {
      const double mid = 0.5 * (a + b);
      if (signature_at(mid) == left)
        a = mid;
      else
        b = mid;
    }
    const double point = 0.5 * (a + b);
    if (hits.empty() || point - hits.back() > 10.0 * opts.tol) hits.push_back(point);
  }
  if (hits.empty()) throw Error(ErrorCode::NoTransition, "no spectral transition in interval");
  return hits;
}

struct SurfaceGrid {
  std::vector<double> g1, g2, J1, J2;
};

enum class SurfaceKind { Off, Surface, Arc };

constexpr std::string_view to_string(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::Off: return "off";
    case SurfaceKind::Surface: return "ES";
    case SurfaceKind::Arc: return "EA";
  }
  return "?";
}

struct SurfacePoint {
  double g1 = 0, g2 = 0, J1 = 0, J2 = 0;
  double residual = 0;
  bool on_surface = false;
  int ep_order = 0;
  std::vector<int> block_sizes;  // blocks of the highest-order cluster
  SurfaceKind kind = SurfaceKind::Off;
};

/// Evaluates one three-mode point against g1^2 + g2^2 = J1^2 + J2^2.
inline SurfacePoint classify_surface_point(double g1, double g2, double J1, double J2, double tol,
                                           double rank_tol = kDefaultRankTol) {
  SurfacePoint p{g1, g2, J1, J2};
  p.residual = std::abs(g1 * g1 + g2 * g2 - J1 * J1 - J2 * J2);
  p.on_surface = p.residual <= tol;
  if (!p.on_surface) return p;
  const auto clusters = detect_eps(build_bdg_matrix(ChainSpec::three_mode(g1, g2, J1, J2)),
                                   kDefaultClusterTol, rank_tol);
  for (const auto& c : clusters) {
    if (c.order > p.ep_order) {
      p.ep_order = c.order;
      p.block_sizes = c.jordan_blocks;
    }
  }
  const bool arc = std::abs(g1 - J1) <= tol && std::abs(g2 - J2) <= tol;
  if (arc)
    p.kind = SurfaceKind::Arc;
  else if (p.ep_order > 0)
    p.kind = SurfaceKind::Surface;
  return p;
}

/// Cartesian scan in (g1, g2, J1, J2) order, results keyed by grid index.
inline std::vector<SurfacePoint> scan_exceptional_surface(const SurfaceGrid& grid, double tol,
                                                          unsigned threads = 1) {
  const std::size_t n1 = grid.g1.size(), n2 = grid.g2.size(), n3 = grid.J1.size(),
                    n4 = grid.J2.size();
  std::vector<SurfacePoint> out(n1 * n2 * n3 * n4);
  parallel_for(out.size(), threads, [&](std::size_t idx) {
    std::size_t r = idx;
    const std::size_t i4 = r % n4;
    r /= n4;
    const std::size_t i3 = r % n3;
    r /= n3;
    const std::size_t i2 = r % n2;
    const std::size_t i1 = r / n2;
    out[idx] = classify_surface_point(grid.g1[i1], grid.g2[i2], grid.J1[i3], grid.J2[i4], tol);
  });
  return out;
}

}  // namespace epchain
