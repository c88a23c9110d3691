// Writes the stochastic block model fixture used by the end-to-end tests.
//   gen_sbm OUT_DIR [seed]

#include <cstdlib>
#include <iostream>

#include "support/sbm.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: gen_sbm OUT_DIR [seed]\n";
    return 1;
  }
  ccgl::testing::SbmOptions opts;
  if (argc > 2) opts.seed = std::strtoull(argv[2], nullptr, 10);
  auto g = ccgl::testing::make_sbm(opts);
  g.name = "sbm200";
  ccgl::save_bundle(g, argv[1], ccgl::FeatureFormat::tsv);
  std::cout << g.n << " " << g.edges.size() << " " << g.d << " " << g.k << "\n";
  return 0;
}
