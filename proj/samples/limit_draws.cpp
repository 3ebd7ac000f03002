// Draws from the limit objects: theta, the mixture G and the subordinator
// functional F, for a tail index below one.
#include <cstdio>

#include "rwsre/rwsre.hpp"

using namespace rwsre;

int main() {
  const double beta = 0.8;
  Stream rng(31);
  Moments theta, g, f;
  for (int i = 0; i < 2000; ++i) {
    theta.add(sample_theta(rng));
    const auto pp = sample_poisson_pp(1.0, beta / 2.0, 1e-4, rng);
    g.add(sample_G(pp, rng));
    const auto path = sample_subordinator_covering(beta, 1.0, 1e-4, rng);
    f.add(sample_F(path, rng));
  }
  std::printf("theta: mean %.4f (1/2), var %.4f (1/6)\n", theta.mean(), theta.variance());
  std::printf("G:     mean %.4f, sd %.4f\n", g.mean(), std::sqrt(g.variance()));
  std::printf("F:     mean %.4f, sd %.4f\n", f.mean(), std::sqrt(f.variance()));
}
