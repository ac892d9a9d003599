#pragma once

#include <vector>

#include "epchain/chain_model.hpp"
#include "epchain/testing/random_chain.hpp"

namespace epchain::test {

using epchain::testing::random_chain;

inline std::vector<cplx> times_minus_i(const std::vector<cplx>& values) {
  std::vector<cplx> out;
  for (const auto& v : values) out.push_back(cplx(0.0, -1.0) * v);
  return out;
}

}  // namespace epchain::test
