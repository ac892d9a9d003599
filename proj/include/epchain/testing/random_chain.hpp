#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "epchain/chain_model.hpp"

namespace epchain::testing {

/// Random chain with rates g in [0, g_max], J in [0, j_max], eta in [-eta_max, eta_max]
/// and uniform random hopping phases.
inline ChainSpec random_chain(std::mt19937_64& rng, int n_modes, double g_max = 1.0,
                              double j_max = 0.5, double eta_max = 0.25) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<cplx> hopping;
  std::vector<double> pairing;
  std::vector<cplx> sms;
  for (int j = 0; j + 1 < n_modes; ++j) {
    hopping.push_back(std::polar(g_max * unit(rng), 2.0 * M_PI * unit(rng)));
    pairing.push_back(j_max * unit(rng));
  }
  for (int j = 0; j < n_modes; ++j) sms.emplace_back(eta_max * (2.0 * unit(rng) - 1.0), 0.0);
  return ChainSpec(n_modes, hopping, pairing, sms);
}

}  // namespace epchain::testing
