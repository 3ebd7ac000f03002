// Samples one environment and prints the exact crossing-time moments of its
// first few blocks next to a quick Monte Carlo check.
#include <cstdio>

#include "rwsre/rwsre.hpp"

using namespace rwsre;

int main() {
  const auto spec = parse_spec(json::parse(R"({
    "gap_law": {"kind": "pareto_ceiling", "beta": 1.5, "scale": 1.0},
    "drift_law": {"atoms": [{"lambda": 0.75, "p": 0.6666666666666666},
                            {"lambda": 0.3333333333333333, "p": 0.3333333333333333}]}})"));
  const auto regime = validate_regime(spec);
  std::printf("E log rho = %.4f, speed = %.4f, regime: %s\n", regime.e_log_rho, regime.speed_v,
              regime.summary.c_str());

  const auto env = sample_environment(spec, 200, 1e-10, 7);
  const auto pot = compute_potentials(env);
  std::printf("%4s %6s %12s %12s %14s\n", "k", "gap", "E T_k", "MC mean", "Var left");
  for (std::int64_t k = 1; k <= 6; ++k) {
    Stream rng(11, static_cast<std::uint64_t>(k), 0, Purpose::walk);
    Moments mc;
    for (int i = 0; i < 20000; ++i) mc.add(static_cast<double>(direct_crossing_detail(env, k, rng, 0).sample.total()));
    std::printf("%4lld %6lld %12.2f %12.2f %14.2f\n", static_cast<long long>(k),
                static_cast<long long>(env.xi(k)), crossing_mean(pot, k).total, mc.mean(),
                left_crossing_variance(pot, k));
  }
}
