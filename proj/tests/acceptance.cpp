// Acceptance run: one PASS/FAIL line per criterion. Pipelines go through the
// CLI entry point so their data files can be compared across worker counts.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chain_oracle.hpp"
#include "helpers.hpp"
#include "rwsre/cli.hpp"

using namespace rwsre;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Context {
  unsigned workers = 4;
  fs::path out;
  fs::path configs;
};

int run_cli(std::vector<std::string> args) {
  std::vector<const char*> argv{"rwsre_cli"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream log, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), log, err);
  if (!err.str().empty()) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

json run_pipeline(const Context& ctx, const std::string& sub, const std::string& config,
                  const fs::path& dir, unsigned workers) {
  const int code = run_cli({sub, "--config", (ctx.configs / config).string(), "--out",
                            dir.string(), "--workers", std::to_string(workers)});
  if (code == cli::validation) throw std::runtime_error(config + ": validation error");
  return read_json(dir / "report.json");
}

std::string failed_checks(const json& rep) {
  std::string s;
  for (const auto& c : rep.at("checks")) {
    if (!c.at("pass").get<bool>() && !c.at("diagnostic").get<bool>()) {
      s += "; failed '" + c.at("name").get<std::string>() + "' (" +
           fmt("%.4g", c.at("statistic").get<double>()) + ")";
    }
  }
  if (!rep.at("certificates_ok").get<bool>()) s += "; certificate over limit";
  return s;
}

bool check_passed(const json& rep, const std::string& prefix) {
  for (const auto& c : rep.at("checks")) {
    if (c.at("name").get<std::string>().rfind(prefix, 0) == 0) return c.at("pass").get<bool>();
  }
  return false;
}

// ---- 1 ----------------------------------------------------------------------------

Outcome reflected_moments(const Context&) {
  Outcome o{true, ""};
  for (std::int64_t n : {1, 5, 20}) {
    Stream rng(101, static_cast<std::uint64_t>(n), 0, Purpose::generic);
    Moments m;
    for (int i = 0; i < 1'000'000; ++i) m.add(static_cast<double>(sample_reflected_passage(n, rng)));
    const double nn = static_cast<double>(n);
    const double mean = nn * nn;
    const double var = (2.0 / 3.0) * (nn * nn * nn * nn - nn * nn);
    const bool mean_ok = n == 1 ? m.mean() == 1.0 : std::abs(m.mean() - mean) <= 3.0 * m.se_mean();
    const bool var_ok = n == 1 ? m.variance() == 0.0 : std::abs(m.variance() / var - 1.0) <= 0.05;
    o.pass = o.pass && mean_ok && var_ok;
    o.detail += "n=" + std::to_string(n) + ": mean " + fmt("%.4f", m.mean()) + " var " +
                fmt("%.2f", m.variance()) + " (target " + fmt("%.2f", var) + ")  ";
  }
  return o;
}

// ---- 2 ----------------------------------------------------------------------------

// Walks from x until it hits lo or hi; true on hi.
bool exits_right(const Environment& env, std::int64_t x, std::int64_t lo, std::int64_t hi,
                 Stream& rng) {
  while (x != lo && x != hi) {
    const auto idx = env.index_at_or_below(x);
    const double p = env.S(idx) == x ? env.lambda(idx) : 0.5;
    x += rng.bernoulli(p) ? 1 : -1;
  }
  return x == hi;
}

Outcome exit_probabilities_check(const Context&) {
  Stream envs(202);
  double worst = 0.0;
  std::vector<Environment> kept;
  for (int rep = 0; rep < 50; ++rep) {
    const auto env = testutil::small_random(envs, 3, 10, 12, 0.05, 0.95);
    const auto pot = compute_potentials(env);
    const std::int64_t i = -2, j = 9;
    const auto v = oracle::exit_right(env, env.S(i), env.S(j));
    for (std::int64_t k = i + 1; k < j; ++k) {
      const auto p = exit_probabilities(pot, i, k, j);
      worst = std::max(worst, std::abs(p.right - v[static_cast<std::size_t>(env.S(k) - env.S(i))]));
    }
    if (rep < 5) kept.push_back(env);
  }
  // Monte Carlo frequencies, simultaneous 99% Clopper-Pearson intervals.
  const double conf = std::pow(0.99, 1.0 / static_cast<double>(kept.size()));
  bool mc_ok = true;
  double worst_z = 0.0;
  for (std::size_t e = 0; e < kept.size(); ++e) {
    const auto& env = kept[e];
    const auto pot = compute_potentials(env);
    const std::int64_t i = -2, k = 3, j = 9;
    Stream rng(203, e, 0, Purpose::walk);
    std::uint64_t right = 0;
    const std::uint64_t trials = 100000;
    for (std::uint64_t t = 0; t < trials; ++t) right += exits_right(env, env.S(k), env.S(i), env.S(j), rng);
    const double pr = exit_probabilities(pot, i, k, j).right;
    mc_ok = mc_ok && binomial_ci(right, trials, conf).contains(pr);
    const double f = static_cast<double>(right) / static_cast<double>(trials);
    worst_z = std::max(worst_z, std::abs(f - pr) / std::sqrt(pr * (1.0 - pr) / static_cast<double>(trials)));
  }
  return {worst <= 1e-10 && mc_ok, "max |formula - linear solve| = " + fmt("%.2e", worst) +
                                       " over 50 envs; MC (5 envs x 1e5) max |z| = " + fmt("%.2f", worst_z)};
}

// ---- 3 ----------------------------------------------------------------------------

Outcome quenched_formulas(const Context&) {
  constexpr int kEnvs = 5;
  constexpr int kDraws = 100000;
  constexpr int kQuantities = 12;
  const double z = sidak_z(0.99, kEnvs * kQuantities);
  Stream envs(303);
  bool ok = true;
  double worst = 0.0;
  std::string worst_name;
  for (int e = 0; e < kEnvs; ++e) {
    // 8 marked sites S_{-3}..S_4, gaps <= 10, wall at S_{-3}.
    const auto env = testutil::small_random(envs, 3, 4, 10, 0.35, 0.85);
    const auto pot = compute_potentials(env);
    const std::int64_t k = 3, p = 0;
    Moments tl, tr, tot, arrivals, below, exc;
    Stream rng(304, static_cast<std::uint64_t>(e), 0, Purpose::walk);
    for (int i = 0; i < kDraws; ++i) {
      const auto d = direct_crossing_detail(env, k, rng, p);
      tl.add(static_cast<double>(d.sample.t_left));
      tr.add(static_cast<double>(d.sample.t_right));
      tot.add(static_cast<double>(d.sample.total()));
      arrivals.add(static_cast<double>(d.barrier_arrivals));
      below.add(static_cast<double>(d.time_below));
      const auto s = env.S(k - 1);
      exc.add(1.0 + static_cast<double>(detail::run_until(env, s - 1, s, rng, detail::NoVisit{})));
    }
    const auto m = crossing_mean(pot, k);
    const auto f = excursion_moments(pot, k - 1);
    const auto bv = barrier_visit_moments(pot, p, k);
    const auto ce = censored_excess_moments(pot, p, k);
    struct Item {
      const char* name;
      double est, se, value;
    };
    const Item items[kQuantities] = {
        {"E T_k", tot.mean(), tot.se_mean(), m.total},
        {"E T^l_k", tl.mean(), tl.se_mean(), m.left},
        {"E T^r_k", tr.mean(), tr.se_mean(), m.right},
        {"Var T^l_k", tl.variance(), tl.se_variance(), left_crossing_variance(pot, k)},
        {"Var T^r_k", tr.variance(), tr.se_variance(), right_crossing_variance(env, k)},
        {"E F", exc.mean(), exc.se_mean(), f.mean},
        {"Var F", exc.variance(), exc.se_variance(), f.var},
        {"E M", arrivals.mean(), arrivals.se_mean(), bv.mean},
        {"Var M", arrivals.variance(), arrivals.se_variance(), bv.var},
        {"E excess", below.mean(), below.se_mean(), ce.mean},
        {"Var excess", below.variance(), below.se_variance(), ce.var},
        {"E T^l+T^r", tl.mean() + tr.mean(), tot.se_mean(), m.left + m.right},
    };
    for (const auto& it : items) {
      // A zero-variance quantity must match exactly.
      const double r = it.se > 0.0 ? std::abs(it.est - it.value) / it.se
                                   : (std::abs(it.est - it.value) < 1e-9 ? 0.0 : 1e9);
      if (r > worst) {
        worst = r;
        worst_name = it.name;
      }
      ok = ok && r <= z;
    }
  }
  return {ok, "5 envs x 12 formulas, 1e5 direct walks each; max |z| = " + fmt("%.2f", worst) +
                  " (" + worst_name + "), Sidak 99% bound " + fmt("%.2f", z)};
}

// ---- 4 ----------------------------------------------------------------------------

Outcome theta_sampler(const Context&) {
  Stream rng(404);
  Moments m;
  for (int i = 0; i < 1'000'000; ++i) m.add(2.0 * sample_theta(rng));
  const bool mean_ok = std::abs(m.mean() - 1.0) <= 3.0 * m.se_mean();
  const bool var_ok = std::abs(m.variance() / (2.0 / 3.0) - 1.0) <= 0.02;
  std::vector<double> a(10000), b(10000);
  const ThetaSampler inv{ThetaMethod::series_inversion};
  const ThetaSampler walk{ThetaMethod::reflected_walk};
  Stream ra(405), rb(406);
  for (auto& x : a) x = inv(ra);
  for (auto& x : b) x = walk(rb);
  const double ks = ks_two_sample(a, b).statistic;
  double lt_err = 0.0;
  for (double s : {0.5, 1.0, 2.0}) {
    const double lt = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [s](double t) { return std::exp(-s * t / 2.0) * theta_pdf(t); }, 0.0,
        std::numeric_limits<double>::infinity(), 15, 1e-12);
    lt_err = std::max(lt_err, std::abs(lt - 1.0 / std::cosh(std::sqrt(s))));
  }
  return {mean_ok && var_ok && ks <= 0.02 && lt_err <= 1e-3,
          "mean(2theta) " + fmt("%.5f", m.mean()) + " var " + fmt("%.5f", m.variance()) +
              "; KS(inversion, walk) " + fmt("%.4f", ks) + "; Laplace err " + fmt("%.1e", lt_err)};
}

// ---- 5 ----------------------------------------------------------------------------

Outcome tier_equivalence(const Context& ctx) {
  const auto cfg = config_from_json(read_json(ctx.configs / "thm_m1.json"));
  const auto& spec = cfg.spec;
  constexpr std::size_t kDraws = 10000;
  bool ok = true;
  double min_p = 1.0, max_d = 0.0;
  for (std::uint64_t e = 0; e < 3; ++e) {
    const auto env = sample_environment(spec, 1001, 1e-10, 505, e);
    const auto pot = compute_potentials(env);
    for (std::int64_t n : {20, 100}) {
      std::vector<double> a(kDraws), b(kDraws);
      parallel_for(kDraws, ctx.workers, [&](std::size_t i) {
        Stream r1(506, e * 1000 + static_cast<std::uint64_t>(n), i, Purpose::walk);
        Stream r2(507, e * 1000 + static_cast<std::uint64_t>(n), i, Purpose::walk);
        a[i] = static_cast<double>(direct_passage(env, n, r1).T);
        b[i] = static_cast<double>(block_passage(env, n, r2).T);
      });
      const auto t = ks_two_sample(a, b, 0.01);
      min_p = std::min(min_p, t.p_value);
      ok = ok && t.p_value >= 0.01;
    }
    const std::int64_t n = 1000;
    const double mean = mean_passage_time(pot, n);
    std::vector<double> a(kDraws), b(kDraws);
    parallel_for(kDraws, ctx.workers, [&](std::size_t i) {
      Stream r1(508, e, i, Purpose::walk);
      Stream r2(509, e, i, Purpose::walk);
      a[i] = sample_passage(env, mean, n, Tier::block, r1).centered;
      b[i] = sample_passage(env, 0.0, n, Tier::reduced, r2).centered;
    });
    const double d = ks_two_sample(a, b).statistic;
    max_d = std::max(max_d, d);
    ok = ok && d <= 0.05;
  }
  return {ok, "direct vs block (n=20,100; 3 envs): min p " + fmt("%.3f", min_p) +
                  "; block vs reduced (n=1000): max KS " + fmt("%.4f", max_d)};
}

// ---- 6-12 -------------------------------------------------------------------------

Outcome weak_convergence(const Context& ctx, const std::string& config, bool ablation) {
  const auto rep = run_pipeline(ctx, "verify", config, ctx.out / "w" / config, ctx.workers);
  const bool control = check_passed(rep, "negative control");
  bool ok = rep.at("pass").get<bool>() && control;
  std::string d = std::string("report ") + (rep.at("pass").get<bool>() ? "pass" : "FAIL") +
                  "; negative control " + (control ? "rejected" : "NOT rejected");
  if (ablation) {
    const bool abl = check_passed(rep, "final-block ablation");
    ok = ok && abl;
    d += std::string("; ablation ") + (abl ? "rejected" : "NOT rejected");
  }
  return {ok, d + failed_checks(rep)};
}

Outcome pipeline(const Context& ctx, const std::string& sub, const std::string& config) {
  const auto rep = run_pipeline(ctx, sub, config, ctx.out / "w" / config, ctx.workers);
  std::string d = std::string("report ") + (rep.at("pass").get<bool>() ? "pass" : "FAIL");
  for (const auto& [k, v] : rep.at("metrics").items()) {
    if (k.rfind("median", 0) == 0 || k == "heavy_fraction" || k.rfind("ks_", 0) == 0) {
      d += "; " + k + " " + fmt("%.4g", v.get<double>());
    }
  }
  for (const auto& c : rep.at("checks")) {
    if (c.at("kind") == "ks_distance" || c.at("kind") == "ks_two_sample") {
      d += "; " + c.at("name").get<std::string>() + " " + fmt("%.4f", c.at("statistic").get<double>());
    }
  }
  return {rep.at("pass").get<bool>(), d + failed_checks(rep)};
}

// ---- 13 ---------------------------------------------------------------------------

std::map<std::string, std::string> data_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    out[fs::relative(e.path(), dir).generic_string()] = fnv1a_hex(read_text(e.path()));
  }
  return out;
}

Outcome determinism(const Context& ctx) {
  const auto a = ctx.out / "det_a", b = ctx.out / "det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const std::string spec = (ctx.configs / "spec_canonical.json").string();
  for (const auto& [dir, w] : {std::pair{a, ctx.workers}, std::pair{b, 1u}}) {
    const auto W = std::to_string(w);
    run_cli({"env", "--config", spec, "--n", "300", "--seed", "9", "--out", (dir / "env").string()});
    run_cli({"moments", "--env", (dir / "env" / "environment.json").string(), "--out",
             (dir / "moments").string(), "--workers", W});
    run_cli({"simulate", "--env", (dir / "env" / "environment.json").string(), "--n", "50", "--n",
             "200", "--tier", "block", "--replicas", "2000", "--out", (dir / "sim").string(),
             "--workers", W});
    for (const char* kind : {"theta", "pp", "subordinator", "G", "F"}) {
      run_cli({"limits", "--kind", kind, "--beta", "0.8", "--count", "300", "--seed", "5",
               "--out", (dir / "limits" / kind).string(), "--workers", W});
    }
    for (const char* c : {"thm_m1.json", "thm_m2.json", "thm_m3.json", "joint.json",
                          "leftvar.json", "stable.json", "gss.json"}) {
      run_pipeline(ctx, "verify", c, dir / c, w);
    }
    run_pipeline(ctx, "probe", "probe.json", dir / "probe", w);
  }
  const auto fa = data_files(a), fb = data_files(b);
  std::size_t differing = 0;
  std::string first;
  for (const auto& [name, h] : fa) {
    const auto it = fb.find(name);
    if (it == fb.end() || it->second != h) {
      if (!differing++) first = name;
    }
  }
  const bool ok = !fa.empty() && fa.size() == fb.size() && differing == 0;
  return {ok, std::to_string(fa.size()) + " data files compared, workers " +
                  std::to_string(ctx.workers) + " vs 1; " + std::to_string(differing) +
                  " differ" + (differing ? " (first: " + first + ")" : "")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  Context ctx;
  std::string out = "acceptance_runs";
  std::string configs = RWSRE_CONFIG_DIR;
  std::vector<int> only;
  app.add_option("--workers", ctx.workers, "worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--out", out, "scratch directory for pipeline outputs");
  app.add_option("--configs", configs, "directory with the experiment configs");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  ctx.out = out;
  ctx.configs = configs;
  fs::create_directories(ctx.out);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, [&] { return reflected_moments(ctx); }},
      {2, [&] { return exit_probabilities_check(ctx); }},
      {3, [&] { return quenched_formulas(ctx); }},
      {4, [&] { return theta_sampler(ctx); }},
      {5, [&] { return tier_equivalence(ctx); }},
      {6, [&] { return weak_convergence(ctx, "thm_m1.json", false); }},
      {7, [&] { return weak_convergence(ctx, "thm_m2.json", false); }},
      {8, [&] { return weak_convergence(ctx, "thm_m3.json", true); }},
      {9, [&] { return pipeline(ctx, "verify", "joint.json"); }},
      {10, [&] { return pipeline(ctx, "verify", "leftvar.json"); }},
      {11, [&] { return pipeline(ctx, "verify", "gss.json"); }},
      {12, [&] { return pipeline(ctx, "probe", "probe.json"); }},
      {13, [&] { return determinism(ctx); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("CRITERION %2d %s  %s  [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), dt);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
