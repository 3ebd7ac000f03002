// Centered passage times to level n at the three simulation tiers.
#include <cstdio>

#include "rwsre/rwsre.hpp"

using namespace rwsre;

int main() {
  const auto spec = parse_spec(read_json(RWSRE_CONFIG_DIR "/spec_canonical.json"));
  const std::int64_t n = 300;
  const auto env = sample_environment(spec, n + 1, 1e-10, 21);
  const auto pot = compute_potentials(env);
  const double mean = mean_passage_time(pot, n);
  std::printf("E T_%lld = %.1f\n", static_cast<long long>(n), mean);
  for (Tier tier : {Tier::direct, Tier::block, Tier::reduced}) {
    Moments m;
    for (std::uint64_t i = 0; i < 2000; ++i) {
      Stream rng(22, static_cast<std::uint64_t>(tier), i, Purpose::walk);
      m.add(sample_passage(env, mean, n, tier, rng).centered);
    }
    std::printf("%-8s mean %9.2f  sd %9.2f\n", std::string(to_string(tier)).c_str(), m.mean(), std::sqrt(m.variance()));
  }
}
