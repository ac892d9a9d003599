#pragma once

// Invariant suite run by `epchain selftest`: structural properties of the BdG
// matrix, symplectic transport and the entanglement pipeline at pinned seeds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "epchain/entanglement.hpp"
#include "epchain/gaussian_dynamics.hpp"
#include "epchain/spectral_analysis.hpp"
#include "epchain/testing/covariance_ode.hpp"
#include "epchain/testing/random_chain.hpp"

namespace epchain {

struct SelftestOptions {
  double tol_scale = 1.0;  // multiplies every threshold
  std::uint64_t seed = 20240611;
  int draws = 200;
  int ode_draws = 24;
  bool perturb_omega = false;  // fault injection for the symplecticity check
};

struct CheckResult {
  std::string name;
  double worst = 0.0;  // largest observed violation measure
  double threshold = 0.0;
  bool passed = false;
};

namespace detail {

inline double rel_max_diff(const RMatrix& a, const RMatrix& b) {
  return max_abs(RMatrix(a - b)) / std::max(1.0, max_abs(b));
}

inline CheckResult finish(std::string name, double worst, double threshold) {
  return {std::move(name), worst, threshold, std::isfinite(worst) && worst <= threshold};
}

}  // namespace detail

inline std::vector<CheckResult> run_selftest(const SelftestOptions& opts = {}) {
  std::vector<CheckResult> out;
  const double s = opts.tol_scale;
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  double ph = 0.0, sympl = 0.0, purity = 0.0, bona = 0.0, pt_count = 0.0;
  for (int draw = 0; draw < opts.draws; ++draw) {
    const int n = 1 + draw % 6;
    const ChainSpec spec = testing::random_chain(rng, n);
    const BdgMatrix m = build_bdg_matrix(spec);
    CMatrix swap = CMatrix::Zero(2 * n, 2 * n);
    swap.topRightCorner(n, n).setIdentity();
    swap.bottomLeftCorner(n, n).setIdentity();
    ph = std::max(ph, max_abs(CMatrix(swap * m.data() * swap + m.data().conjugate())));

    const RealGenerator k = quadrature_generator(m);
    const double t = 5.0 * unit(rng);
    const SymplecticPropagator p = propagator(k, t);
    RMatrix omega = symplectic_form(n);
    if (opts.perturb_omega) {
      omega(0, 0) += 1e-3;
      omega(1, 0) -= 1e-3;
    }
    sympl = std::max(sympl, symplectic_defect(p.s, omega));

    const GaussianState state = transport(vacuum_state(n), p);
    purity = std::max(purity, std::abs(state.cm().determinant() - 1.0));
    bona = std::max(bona, -bona_fide_margin(state.cm()));

    if (n >= 2) {
      std::set<int> a, b;
      for (int mode = 0; mode < n; ++mode) (mode == 0 || unit(rng) < 0.5 ? a : b).insert(mode);
      if (b.empty()) b.insert(*std::prev(a.end())), a.erase(std::prev(a.end()));
      const auto r = entanglement(state, Bipartition(n, a, b));
      const auto below = std::count_if(r.symplectic_eigenvalues_pt.begin(), r.symplectic_eigenvalues_pt.end(),
                                       [](double v) { return v < 1.0 - 1e-12; });
      pt_count = std::max(pt_count, static_cast<double>(below) - std::min(a.size(), b.size()));
    }
  }
  out.push_back(detail::finish("particle_hole_symmetry", ph, 1e-14 * s));
  out.push_back(detail::finish("symplecticity", sympl, 1e-10 * s));
  out.push_back(detail::finish("purity", purity, 1e-8 * s));
  out.push_back(detail::finish("bona_fide", bona, 1e-8 * s));
  out.push_back(detail::finish("pt_eigenvalues_below_one", pt_count, 0.0));

  double ode = 0.0;
  for (int draw = 0; draw < opts.ode_draws; ++draw) {
    const int n = 1 + draw % 6;
    const RealGenerator k = quadrature_generator(build_bdg_matrix(testing::random_chain(rng, n)));
    const GaussianState vac = vacuum_state(n);
    ode = std::max(ode, detail::rel_max_diff(evolve(vac, k, 5.0).cm(),
                                             testing::integrate_covariance(k.data(), vac.cm(), 5.0)));
  }
  out.push_back(detail::finish("expm_vs_ode", ode, 1e-7 * s));

  double spec_err = 0.0;
  for (double g : {0.3, 0.5, 0.9, 1.1, 1.5, 2.0}) {
    const auto ev = eigenspectrum(build_bdg_matrix(ChainSpec::uniform(2, g, 1.0)));
    const cplx lam = std::sqrt(cplx(g * g - 1.0, 0.0));
    const std::vector<cplx> expected{lam, lam, -lam, -lam};
    spec_err = std::max(spec_err, multiset_distance(ev, expected) / std::max(g, 1.0));
  }
  out.push_back(detail::finish("two_mode_spectrum", spec_err, 1e-9 * s));

  double cf = 0.0;
  const Bipartition one_two = Bipartition::parse("1|2", 2);
  for (double g : {0.5, 0.99, 1.0, 1.01, 1.5}) {
    const RealGenerator k = quadrature_generator(build_bdg_matrix(ChainSpec::uniform(2, g, 1.0)));
    for (int i = 0; i < 50; ++i) {
      const double t = 5.0 * i / 49;
      cf = std::max(cf, std::abs(nu_minus(evolve(vacuum_state(2), k, t), one_two) -
                                 nu_closed_form_two_mode(g, 1.0, t)));
    }
  }
  out.push_back(detail::finish("two_mode_closed_form", cf, 1e-8 * s));

  double squeezer = 0.0;
  for (double t : {0.5, 1.0, 2.0})
    squeezer = std::max(squeezer, std::abs(pipeline_nu_minus(ChainSpec::uniform(2, 0.0, 1.0), t, one_two) -
                                           std::exp(-2.0 * t)));
  out.push_back(detail::finish("two_mode_squeezer_limit", squeezer, 1e-9 * s));

  struct JordanCase {
    int n;
    double phi;
    std::vector<int> blocks;
  };
  double jordan_mismatch = 0.0;
  for (const auto& c : {JordanCase{2, 0.0, {2, 2}}, JordanCase{4, 0.0, {2, 2, 2, 2}},
                        JordanCase{4, M_PI / 2, {4, 4}}, JordanCase{3, M_PI / 2, {3, 3}}}) {
    const BdgMatrix m = build_bdg_matrix(ChainSpec::uniform(c.n, 1.0, 1.0, 0.0, c.phi));
    if (jordan_structure(m, cplx(0.0, 0.0)) != c.blocks) jordan_mismatch += 1.0;
  }
  out.push_back(detail::finish("jordan_structure", jordan_mismatch, 0.0));

  double split = 0.0;
  const auto points = locate_ep_1d([](double g) { return ChainSpec::uniform(2, g, 1.0, 0.2); }, 0.5, 1.5);
  if (points.size() != 2)
    split = 1.0;
  else
    split = std::max(std::abs(points[0] - 0.8), std::abs(points[1] - 1.2));
  out.push_back(detail::finish("ep_splitting", split, 1e-6 * s));

  double three = 0.0;
  const Bipartition cut = Bipartition::parse("13|2", 3);
  for (double vp : {0.0, M_PI / 8, M_PI / 4}) {
    const auto [g1, g2] = surface_point(vp, 1.0);
    const RealGenerator k = quadrature_generator(build_bdg_matrix(ChainSpec::three_mode(g1, g2, 1.0, 1.0)));
    for (int i = 0; i <= 20; ++i) {
      const double t = 0.25 * i;
      three = std::max(three, std::abs(nu_minus(evolve(vacuum_state(3), k, t), cut) -
                                       nu_closed_form_three_mode_nonuniform(vp, 1.0, t)));
    }
  }
  out.push_back(detail::finish("three_mode_closed_form", three, 1e-6 * s));
  return out;
}

}  // namespace epchain
