#pragma once

// Command-line front end. Every subcommand writes its data files plus a
// manifest.json; data files depend only on inputs and seeds, never on the
// worker count or the clock.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rwsre/rwsre.hpp"

namespace rwsre::cli {

inline constexpr const char* kVersion = "1.0.0";

enum Exit : int { ok = 0, validation = 1, failure = 2 };

/// Versions of the modules whose behaviour determines output bytes.
inline json module_versions() {
  return {{"env", "1.0"},      {"quenched", "1.1"}, {"walk", "1.0"}, {"theta", "1.0"},
          {"limits", "1.0"},   {"verify", "1.0"},   {"io", "1.0"},   {"cli", kVersion}};
}

namespace fs = std::filesystem;

/// Output directory plus the bookkeeping that ends up in the manifest.
class Run {
 public:
  Run(std::string subcommand, fs::path out, std::vector<std::string> argv)
      : sub_(std::move(subcommand)), out_(std::move(out)), argv_(std::move(argv)),
        start_(std::chrono::steady_clock::now()), started_(std::time(nullptr)) {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec || !fs::is_directory(out_)) {
      throw ValidationError("--out: cannot create directory " + out_.string());
    }
  }

  void write(const std::string& name, const std::string& content) {
    write_text(out_ / name, content);
    outputs_[name] = {{"fnv1a64", fnv1a_hex(content)}, {"bytes", content.size()}};
  }

  void input(const fs::path& p) {
    inputs_[p.string()] = {{"fnv1a64", fnv1a_hex(read_text(p))}};
  }

  json options = json::object();
  json config = nullptr;
  std::uint64_t master_seed = 0;

  void finish(int exit_code) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started_));
    json m = {{"tool", "rwsre_cli"},
              {"version", kVersion},
              {"subcommand", sub_},
              {"argv", argv_},
              {"options", options},
              {"config", config},
              {"master_seed", master_seed},
              {"substream_scheme", kSubstreamScheme},
              {"module_versions", module_versions()},
              {"inputs", inputs_},
              {"outputs", outputs_},
              {"exit_code", exit_code},
              {"wall_clock", {{"started_utc", stamp}, {"elapsed_s", elapsed}}}};
    write_text(out_ / "manifest.json", m.dump(2) + "\n");
  }

  [[nodiscard]] const fs::path& dir() const { return out_; }

 private:
  std::string sub_;
  fs::path out_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
  std::time_t started_;
  json inputs_ = json::object();
  json outputs_ = json::object();
};

inline std::string jsonl(const std::vector<json>& records) {
  std::string s;
  for (const auto& r : records) s += r.dump() + "\n";
  return s;
}

/// A bare spec document or an experiment config carrying one under "spec".
inline EnvironmentSpec spec_from_file(const fs::path& p) {
  const json j = read_json(p);
  if (j.is_object() && j.contains("spec")) return parse_spec(j.at("spec"));
  return parse_spec(j);
}

struct EnvSource {
  std::string env_file;
  std::string config;
  std::int64_t n = 1000;
  std::uint64_t seed = 1;
  std::uint64_t env_index = 0;
  double w_tol = 1e-10;

  void add(CLI::App& app, bool n_is_target) {
    app.add_option("--env", env_file, "environment.json written by `env`");
    app.add_option("--config", config, "spec or experiment config to sample from");
    if (!n_is_target) app.add_option("--n", n, "number of marked sites to the right");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--env-index", env_index, "environment index within the master seed");
    app.add_option("--w-tol", w_tol, "left truncation tolerance");
  }

  Environment load(Run& run, std::int64_t n_right) const {
    if (env_file.empty() == config.empty()) {
      throw ValidationError("exactly one of --env or --config is required");
    }
    if (!env_file.empty()) {
      run.input(env_file);
      run.options["env"] = env_file;
      const auto env = environment_from_json(read_json(env_file));
      run.master_seed = env.seed_meta().master;
      return env;
    }
    run.input(config);
    const auto spec = spec_from_file(config);
    run.config = spec_to_json(spec);
    run.master_seed = seed;
    run.options["n_right"] = n_right;
    run.options["env_index"] = env_index;
    run.options["w_tol"] = w_tol;
    return sample_environment(spec, n_right, w_tol, seed, env_index);
  }
};

// ---- subcommands ----------------------------------------------------------------

inline int cmd_env(Run& run, const EnvSource& src) {
  if (src.config.empty() || !src.env_file.empty()) {
    throw ValidationError("env: --config is required");
  }
  const auto env = src.load(run, src.n);
  const auto spec = spec_from_file(src.config);
  const auto regime = validate_regime(spec);
  json r = {{"e_log_rho", regime.e_log_rho},
            {"transient_right", regime.transient_right},
            {"admissible", regime.admissible()},
            {"speed_v", regime.speed_v},
            {"summary", regime.summary}};
  r["gamma_star"] = regime.gamma_star ? json(*regime.gamma_star) : json(nullptr);
  r["kesten_alpha"] = regime.kesten_alpha ? json(*regime.kesten_alpha) : json(nullptr);
  run.write("environment.json", environment_to_json(env).dump() + "\n");
  run.write("environment.csv", environment_to_csv(env));
  run.write("regime.json", r.dump(2) + "\n");
  return ok;
}

inline int cmd_moments(Run& run, const EnvSource& src, std::int64_t upto) {
  const auto env = src.load(run, src.n);
  const auto pot = compute_potentials(env);
  const std::int64_t n = upto > 0 ? upto : env.max_index() - 1;
  run.options["upto"] = n;
  run.write("moments.csv", table_to_csv(moments_table(cumulative_moments(pot, n))));
  return ok;
}

struct SimulateOptions {
  std::vector<std::int64_t> targets;
  std::string tier = "block";
  std::size_t replicas = 1000;
  unsigned workers = 1;
};

inline int cmd_simulate(Run& run, const EnvSource& src, const SimulateOptions& o) {
  if (o.targets.empty()) throw ValidationError("simulate: --n needs at least one target");
  if (o.replicas < 1) throw ValidationError("simulate: --replicas must be >= 1");
  const Tier tier = tier_from_string(o.tier);
  const auto max_target = *std::max_element(o.targets.begin(), o.targets.end());
  if (max_target < 1) throw ValidationError("simulate: targets must be >= 1");
  // Sites to the right sufficient to cover the largest target.
  const auto env = src.load(run, max_target + 1);
  if (env.S(env.max_index()) <= max_target) {
    throw ValidationError("simulate: target beyond the environment's right extent");
  }
  const auto pot = compute_potentials(env);
  run.options["targets"] = o.targets;
  run.options["tier"] = o.tier;
  run.options["replicas"] = o.replicas;
  run.options["workers"] = o.workers;
  std::vector<json> records;
  for (std::size_t j = 0; j < o.targets.size(); ++j) {
    const auto n = o.targets[j];
    const double mean = tier == Tier::reduced ? 0.0 : mean_passage_time(pot, n);
    std::vector<PassageRecord> recs(o.replicas);
    parallel_for(o.replicas, o.workers, [&](std::size_t i) {
      Stream rng(run.master_seed, j, i, Purpose::walk);
      recs[i] = sample_passage(env, mean, n, tier, rng);
    });
    for (std::size_t i = 0; i < o.replicas; ++i) {
      const auto& r = recs[i];
      SeedMeta s{run.master_seed, j, i, static_cast<std::uint64_t>(Purpose::walk)};
      json rec = {{"n", n}};
      rec["T"] = tier == Tier::reduced ? json(nullptr) : json(r.T);
      rec["centered"] = r.centered;
      rec["nu"] = r.nu;
      rec["S_last"] = r.S_last;
      rec["tier"] = std::string(to_string(tier));
      rec["stream"] = seed_to_json(s);
      records.push_back(std::move(rec));
    }
  }
  run.write("samples.jsonl", jsonl(records));
  return ok;
}

struct LimitsOptions {
  std::string kind;
  double beta = 0.8;
  double c = 1.0;
  double q = 0.0;  // 0: beta / 2
  double cutoff = 1e-4;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

inline int cmd_limits(Run& run, const LimitsOptions& o) {
  const std::vector<std::string> kinds{"theta", "pp", "subordinator", "G", "F"};
  if (std::find(kinds.begin(), kinds.end(), o.kind) == kinds.end()) {
    throw ValidationError("limits: --kind must be one of theta, pp, subordinator, G, F");
  }
  if (o.count < 1) throw ValidationError("limits: --count must be >= 1");
  const double q = o.q > 0.0 ? o.q : o.beta / 2.0;
  const bool subordinated = o.kind == "subordinator" || o.kind == "F";
  if (subordinated && !(o.beta > 0.0 && o.beta < 1.0)) {
    throw ValidationError("limits: --beta must lie in (0,1) for " + o.kind);
  }
  if (!(o.cutoff > 0.0)) throw ValidationError("limits: --cutoff must be > 0");
  if (!(o.c > 0.0) || !(q > 0.0)) throw ValidationError("limits: --c and --q must be > 0");
  run.master_seed = o.seed;
  run.options = {{"kind", o.kind}, {"beta", o.beta},     {"c", o.c},         {"q", q},
                 {"cutoff", o.cutoff}, {"count", o.count}, {"workers", o.workers}};
  std::vector<json> records(o.count);
  parallel_for(o.count, o.workers, [&](std::size_t i) {
    json r = {{"i", i}};
    if (o.kind == "theta") {
      Stream rng(o.seed, i, 0, Purpose::theta);
      r["theta"] = sample_theta(rng);
    } else if (o.kind == "pp" || o.kind == "G") {
      Stream rng(o.seed, i, 0, Purpose::point_process);
      const auto pp = sample_poisson_pp(o.c, q, o.cutoff, rng);
      if (o.kind == "pp") {
        json pts = json::array();
        for (const auto& a : pp.atoms) pts.push_back(a.x);
        r["points"] = pts;
        r["omitted_x2"] = pp.omitted_x2;
      } else {
        Stream inner(o.seed, i, 1, Purpose::theta);
        r["value"] = sample_G(pp, inner);
      }
    } else {
      Stream rng(o.seed, i, 0, Purpose::subordinator);
      const auto path = sample_subordinator_covering(o.beta, 1.0, o.cutoff, rng);
      if (o.kind == "subordinator") {
        json jumps = json::array();
        for (const auto& j : path.jumps) jumps.push_back({j.t, j.x});
        r["horizon"] = path.horizon;
        r["drift"] = path.drift;
        r["jumps"] = jumps;
        r["upsilon"] = upsilon(path);
        r["inverse_time"] = inverse_subordinator_time(path, 1.0).time;
      } else {
        Stream inner(o.seed, i, 1, Purpose::theta);
        r["value"] = sample_F(path, inner);
      }
    }
    records[i] = std::move(r);
  });
  run.write("samples.jsonl", jsonl(records));
  return ok;
}

struct VerifyOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> tier;
  unsigned workers = 1;
};

inline ExperimentConfig load_config(Run& run, const VerifyOptions& o) {
  if (o.config.empty()) throw ValidationError("--config is required");
  run.input(o.config);
  auto cfg = config_from_json(read_json(o.config));
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.tier) cfg.tier = tier_from_string(*o.tier);
  cfg.workers = std::max(1u, o.workers);
  run.config = config_to_json(cfg);
  run.master_seed = cfg.master_seed;
  run.options["workers"] = cfg.workers;
  return cfg;
}

/// report.json, one CSV per raw table, and a one-line verdict on stdout.
inline int write_report(Run& run, const VerificationReport& rep, std::ostream& log) {
  run.write("report.json", report_to_json(rep).dump(2) + "\n");
  for (const auto& [name, table] : rep.tables) run.write(name + ".csv", table_to_csv(table));
  for (const auto& c : rep.checks) {
    if (!c.pass) {
      log << (c.diagnostic ? "  (diagnostic) " : "  FAILED ") << c.name << ": statistic "
          << c.statistic << " threshold " << c.threshold << "\n";
    }
  }
  log << rep.experiment << ": " << (rep.passed() ? "pass" : "FAIL") << "\n";
  return rep.passed() ? ok : failure;
}

inline int cmd_verify(Run& run, const VerifyOptions& o, std::ostream& log) {
  const auto cfg = load_config(run, o);
  return write_report(run, run_experiment(cfg), log);
}

inline int cmd_probe(Run& run, const VerifyOptions& o, std::ostream& log) {
  const auto cfg = load_config(run, o);
  if (cfg.theorem != Experiment::probe) {
    throw ValidationError("theorem: probe subcommand needs \"theorem\": \"probe\"");
  }
  return write_report(run, strong_limit_probe(cfg), log);
}

// ---- report -----------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      t.columns = split(line);
      header = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : split(line)) row.push_back(std::strtod(c.c_str(), nullptr));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// ECDF pairs for every sample column, split by the side column when present.
inline std::string ecdf_series(const std::string& table, const CsvTable& t) {
  std::string out;
  const auto side_it = std::find(t.columns.begin(), t.columns.end(), "side");
  const bool sided = side_it != t.columns.end();
  const auto side_col = static_cast<std::size_t>(side_it - t.columns.begin());
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    const auto& name = t.columns[c];
    if (name == "side" || name == "index" || name == "env" || name == "seed" ||
        name == "schedule_index" || name == "kind" || name == "n") {
      continue;
    }
    std::map<double, std::vector<double>> by_side;
    for (const auto& r : t.rows) by_side[sided ? r[side_col] : 0.0].push_back(r[c]);
    for (auto& [side, v] : by_side) {
      std::sort(v.begin(), v.end());
      for (std::size_t i = 0; i < v.size(); ++i) {
        out += table + "," + name + "," + format_number(side) + "," + format_number(v[i]) + "," +
               format_number(static_cast<double>(i + 1) / static_cast<double>(v.size())) + "\n";
      }
    }
  }
  return out;
}

inline int cmd_report(Run& run, const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw ValidationError("report: no such run directory " + run_dir.string());
  std::vector<fs::path> reports;
  for (const auto& e : fs::recursive_directory_iterator(run_dir)) {
    if (e.is_regular_file() && e.path().filename() == "report.json") reports.push_back(e.path());
  }
  std::sort(reports.begin(), reports.end());
  if (reports.empty()) throw ValidationError("report: no report.json under " + run_dir.string());
  run.options["run_dir"] = run_dir.string();
  std::string summary = "experiment,dir,pass,certificates_ok,checks,failed_checks,failed_diagnostics\n";
  std::string ecdf = "table,column,side,x,ecdf\n";
  std::string distances = "dir,seed,kind,schedule_index,distance\n";
  bool any_distance = false;
  for (const auto& p : reports) {
    run.input(p);
    const json r = read_json(p);
    const auto dir = fs::relative(p.parent_path(), run_dir).generic_string();
    int failed = 0, failed_diag = 0, n = 0;
    for (const auto& c : r.at("checks")) {
      ++n;
      if (!c.at("pass").get<bool>()) ++(c.at("diagnostic").get<bool>() ? failed_diag : failed);
    }
    summary += r.at("experiment").get<std::string>() + "," + dir + "," +
               (r.at("pass").get<bool>() ? "1" : "0") + "," +
               (r.at("certificates_ok").get<bool>() ? "1" : "0") + "," + std::to_string(n) + "," +
               std::to_string(failed) + "," + std::to_string(failed_diag) + "\n";
    for (const auto& e : fs::directory_iterator(p.parent_path())) {
      if (e.path().extension() != ".csv") continue;
      const auto stem = e.path().stem().string();
      const auto t = parse_csv(read_text(e.path()));
      if (stem == "probe") {
        any_distance = true;
        for (const auto& row : t.rows) {
          distances += dir + "," + format_number(row[0]) + "," + format_number(row[1]) + "," +
                       format_number(row[2]) + "," + format_number(row[3]) + "\n";
        }
      } else {
        ecdf += ecdf_series(dir.empty() || dir == "." ? stem : dir + "/" + stem, t);
      }
    }
  }
  run.write("summary.csv", summary);
  run.write("ecdf.csv", ecdf);
  if (any_distance) run.write("distances.csv", distances);
  return ok;
}

// ---- entry point ------------------------------------------------------------------

inline int main(int argc, const char* const* argv, std::ostream& log = std::cout,
                std::ostream& err = std::cerr) {
  CLI::App app{"Random walks in sparse random environments: sampling and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::string out;
  unsigned workers = 1;
  auto out_opt = [&](CLI::App* s) {
    s->add_option("--out", out, "output directory")->required();
    s->add_option("--workers", workers, "worker threads (does not change outputs)")
        ->check(CLI::Range(1u, 1024u));
  };

  EnvSource src;
  auto* env_cmd = app.add_subcommand("env", "sample an environment and report its regime");
  src.add(*env_cmd, false);
  out_opt(env_cmd);

  EnvSource msrc;
  std::int64_t upto = 0;
  auto* mom_cmd = app.add_subcommand("moments", "quenched moment tables");
  msrc.add(*mom_cmd, false);
  mom_cmd->add_option("--upto", upto, "last crossing index (default: all)");
  out_opt(mom_cmd);

  EnvSource ssrc;
  SimulateOptions so;
  auto* sim_cmd = app.add_subcommand("simulate", "passage times under a frozen environment");
  ssrc.add(*sim_cmd, true);
  sim_cmd->add_option("--n", so.targets, "target level(s)")->required();
  sim_cmd->add_option("--tier", so.tier, "direct, block or reduced");
  sim_cmd->add_option("--replicas", so.replicas, "replicas per target");
  out_opt(sim_cmd);

  LimitsOptions lo;
  auto* lim_cmd = app.add_subcommand("limits", "draws from the limit objects");
  lim_cmd->add_option("--kind", lo.kind, "theta, pp, subordinator, G or F")->required();
  lim_cmd->add_option("--beta", lo.beta, "tail index");
  lim_cmd->add_option("--c", lo.c, "point process intensity coefficient");
  lim_cmd->add_option("--q", lo.q, "point process exponent (default beta/2)");
  lim_cmd->add_option("--cutoff", lo.cutoff, "smallest point or jump kept");
  lim_cmd->add_option("--count", lo.count, "number of draws");
  lim_cmd->add_option("--seed", lo.seed, "master seed");
  out_opt(lim_cmd);

  VerifyOptions vo;
  std::uint64_t seed_override = 0;
  std::string tier_override;
  auto verify_opts = [&](CLI::App* s) {
    s->add_option("--config", vo.config, "experiment config")->required();
    s->add_option("--seed", seed_override, "overrides master_seed");
    s->add_option("--tier", tier_override, "overrides tier");
    out_opt(s);
  };
  auto* ver_cmd = app.add_subcommand("verify", "run one verification pipeline");
  verify_opts(ver_cmd);
  auto* probe_cmd = app.add_subcommand("probe", "run the strong-limit probe");
  verify_opts(probe_cmd);

  std::string run_dir;
  auto* rep_cmd = app.add_subcommand("report", "summaries and plot-ready series of a run dir");
  rep_cmd->add_option("--run", run_dir, "directory holding report.json files")->required();
  rep_cmd->add_option("--out", out, "output directory (default: the run dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, err);
    return code == 0 ? ok : validation;
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  CLI::App* sub = app.get_subcommands().front();
  if (sub == rep_cmd && out.empty()) out = run_dir;
  std::optional<Run> run;
  try {
    run.emplace(sub->get_name(), out, args);
    int code = ok;
    if (sub == env_cmd) {
      code = cmd_env(*run, src);
    } else if (sub == mom_cmd) {
      code = cmd_moments(*run, msrc, upto);
    } else if (sub == sim_cmd) {
      so.workers = workers;
      code = cmd_simulate(*run, ssrc, so);
    } else if (sub == lim_cmd) {
      lo.workers = workers;
      code = cmd_limits(*run, lo);
    } else if (sub == ver_cmd || sub == probe_cmd) {
      vo.workers = workers;
      if (sub->count("--seed")) vo.seed = seed_override;
      if (sub->count("--tier")) vo.tier = tier_override;
      code = sub == ver_cmd ? cmd_verify(*run, vo, log) : cmd_probe(*run, vo, log);
    } else {
      code = cmd_report(*run, run_dir);
    }
    run->finish(code);
    return code;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    if (run) run->finish(validation);
    return validation;
  } catch (const RegimeError& e) {
    err << "regime error: " << e.what() << "\n";
    if (run) run->finish(validation);
    return validation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    if (run) run->finish(failure);
    return failure;
  }
}

}  // namespace rwsre::cli
