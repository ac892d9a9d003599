// Library walkthrough: a two-mode chain with single-mode squeezing.
// Locates the split EPs, labels the three regions and prints nu_-(t) in each.

#include <cstdio>

#include "epchain/entanglement.hpp"
#include "epchain/spectral_analysis.hpp"

int main() {
  using namespace epchain;
  const double J = 1.0, eta = 0.2;
  auto chain = [&](double g) { return ChainSpec::uniform(2, g, J, eta); };

  const auto eps = locate_ep_1d(chain, 0.0, 2.0);
  std::printf("spectral transitions in g/J:");
  for (double g : eps) std::printf(" %.9f", g);
  std::printf("\n");

  const auto at_ep = detect_eps(build_bdg_matrix(ChainSpec::uniform(2, J, J)));
  for (const auto& c : at_ep)
    std::printf("g = J, eta = 0: EP at %.2g%+.2gi, Jordan blocks [%s]\n", c.center.real(), c.center.imag(),
                format_blocks(c.jordan_blocks).c_str());

  const Bipartition part = Bipartition::parse("1|2", 2);
  std::printf("\n%6s", "Jt");
  for (double g : {0.79, 1.19, 1.59})
    std::printf("  g=%.2f (%s)", g, std::string(to_string(classify_region(eigenspectrum(build_bdg_matrix(chain(g)))))).c_str());
  std::printf("\n");
  for (int i = 0; i <= 10; ++i) {
    const double t = 0.5 * i;
    std::printf("%6.2f", t);
    for (double g : {0.79, 1.19, 1.59}) std::printf("  %22.6f", pipeline_nu_minus(chain(g), t, part));
    std::printf("\n");
  }
}
