#pragma once

// JSON / CSV persistence of specs, environments, configs and reports.
// Config parsing collects every problem before failing, and each message
// names the offending field.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rwsre/env.hpp"
#include "rwsre/errors.hpp"
#include "rwsre/verify.hpp"

namespace rwsre {

using json = nlohmann::ordered_json;

/// Collects field diagnostics while reading a JSON document.
class FieldReader {
 public:
  FieldReader(const json& j, std::string path, std::vector<std::string>& diag)
      : j_(j), path_(std::move(path)), diag_(diag) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[nodiscard]] bool ok_object() const { return j_.is_object(); }
  [[nodiscard]] bool has(const char* key) const { return j_.is_object() && j_.contains(key); }
  [[nodiscard]] const json& at(const char* key) const { return j_.at(key); }
  [[nodiscard]] std::string field(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  void fail(const char* key, const std::string& msg) const {
    std::string f = key[0] ? field(key) : (path_.empty() ? "<root>" : path_);
    diag_.push_back(f + ": " + msg);
  }

  template <class T>
  void read(const char* key, T& out, bool required = false) const {
    if (!has(key)) {
      if (required) fail(key, "missing required field");
      return;
    }
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return fail(key, "expected a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return fail(key, "expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return fail(key, "expected a number");
      out = v.get<T>();
      if (!std::isfinite(out)) fail(key, "expected a finite number");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                     v.get<std::int64_t>() < 0)) {
        return fail(key, "expected a non-negative integer");
      }
      out = static_cast<T>(v.get<std::uint64_t>());
    } else {
      if (!v.is_number_integer()) return fail(key, "expected an integer");
      out = static_cast<T>(v.get<std::int64_t>());
    }
  }

  /// Flags keys that are not in `known`.
  void reject_unknown(std::initializer_list<const char*> known) const {
    if (!j_.is_object()) return;
    for (const auto& [k, _] : j_.items()) {
      bool found = false;
      for (const char* n : known) found = found || k == n;
      if (!found) diag_.push_back(field(k.c_str()) + ": unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& diag_;
};

inline void throw_if(const std::vector<std::string>& diag, const std::string& what) {
  if (diag.empty()) return;
  std::string msg = what + ":";
  for (const auto& d : diag) msg += "\n  " + d;
  throw ValidationError(msg);
}

// ---- EnvironmentSpec -------------------------------------------------------

inline json spec_to_json(const EnvironmentSpec& s) {
  json atoms = json::array();
  for (const auto& a : s.drift_law.atoms()) atoms.push_back({{"lambda", a.lambda}, {"p", a.p}});
  json j = {{"gap_law",
             {{"kind", GapLaw::kKind}, {"beta", s.gap_law.beta()}, {"scale", s.gap_law.scale()}}},
            {"drift_law", {{"atoms", atoms}}}};
  if (!s.independent) j["independent"] = false;
  return j;
}

inline EnvironmentSpec spec_from_json(const json& j, const std::string& path,
                                      std::vector<std::string>& diag) {
  EnvironmentSpec s;
  FieldReader r(j, path, diag);
  if (!r.ok_object()) return s;
  r.reject_unknown({"gap_law", "drift_law", "independent"});
  r.read("independent", s.independent);
  if (!s.independent) r.fail("independent", "only independent (xi, lambda) pairs are supported");
  if (!r.has("gap_law")) {
    r.fail("gap_law", "missing required field");
  } else {
    FieldReader g(r.at("gap_law"), r.field("gap_law"), diag);
    if (g.ok_object()) {
      g.reject_unknown({"kind", "beta", "scale"});
      std::string kind = GapLaw::kKind;
      double beta = 0.0, scale = 1.0;
      g.read("kind", kind);
      if (kind != GapLaw::kKind) g.fail("kind", "unsupported gap law '" + kind + "'");
      const auto before = diag.size();
      g.read("beta", beta, true);
      g.read("scale", scale);
      if (diag.size() == before) {
        try {
          s.gap_law = GapLaw(beta, scale);
        } catch (const ValidationError& e) {
          diag.push_back(g.field("beta") + ": " + e.what());
        }
      }
    }
  }
  if (!r.has("drift_law")) {
    r.fail("drift_law", "missing required field");
  } else {
    FieldReader d(r.at("drift_law"), r.field("drift_law"), diag);
    if (d.ok_object()) {
      d.reject_unknown({"atoms"});
      if (!d.has("atoms") || !d.at("atoms").is_array()) {
        d.fail("atoms", "expected an array of {lambda, p}");
      } else {
        std::vector<DriftAtom> atoms;
        const auto before = diag.size();
        const auto& arr = d.at("atoms");
        for (std::size_t i = 0; i < arr.size(); ++i) {
          FieldReader a(arr[i], d.field("atoms") + "[" + std::to_string(i) + "]", diag);
          DriftAtom at;
          a.reject_unknown({"lambda", "p"});
          a.read("lambda", at.lambda, true);
          a.read("p", at.p, true);
          atoms.push_back(at);
        }
        if (diag.size() == before) {
          try {
            s.drift_law = DriftLaw(std::move(atoms));
          } catch (const ValidationError& e) {
            diag.push_back(d.field("atoms") + ": " + e.what());
          }
        }
      }
    }
  }
  return s;
}

inline EnvironmentSpec parse_spec(const json& j) {
  std::vector<std::string> diag;
  auto s = spec_from_json(j, "", diag);
  throw_if(diag, "invalid environment spec");
  return s;
}

// ---- Environment -------------------------------------------------------------

inline json seed_to_json(const SeedMeta& m) {
  return {{"master", m.master},
          {"env_index", m.env_index},
          {"replica", m.replica},
          {"purpose", m.purpose},
          {"scheme", m.scheme}};
}

inline SeedMeta seed_from_json(const json& j) {
  SeedMeta m;
  m.master = j.at("master").get<std::uint64_t>();
  m.env_index = j.at("env_index").get<std::uint64_t>();
  m.replica = j.at("replica").get<std::uint64_t>();
  m.purpose = j.at("purpose").get<std::uint64_t>();
  m.scheme = j.at("scheme").get<std::string>();
  return m;
}

/// Columnar JSON: k, S, xi, lambda, plus seed metadata.
inline json environment_to_json(const Environment& env) {
  json k = json::array(), S = json::array(), xi = json::array(), lam = json::array();
  for (std::int64_t i = env.min_index(); i <= env.max_index(); ++i) {
    k.push_back(i);
    S.push_back(env.S(i));
    xi.push_back(env.xi(i));
    lam.push_back(env.lambda(i));
  }
  return {{"seed", seed_to_json(env.seed_meta())},
          {"min_index", env.min_index()},
          {"columns", {{"k", k}, {"S", S}, {"xi", xi}, {"lambda", lam}}}};
}

inline Environment environment_from_json(const json& j) {
  try {
    const auto& c = j.at("columns");
    const auto min_index = j.at("min_index").get<std::int64_t>();
    auto xi = c.at("xi").get<std::vector<std::int64_t>>();
    auto lam = c.at("lambda").get<std::vector<double>>();
    Environment env(min_index, std::move(xi), std::move(lam), seed_from_json(j.at("seed")));
    const auto S = c.at("S").get<std::vector<std::int64_t>>();
    for (std::size_t i = 0; i < S.size(); ++i) {
      if (S[i] != env.S(min_index + static_cast<std::int64_t>(i))) {
        throw ValidationError("environment: column S inconsistent with xi at row " +
                              std::to_string(i));
      }
    }
    return env;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("environment file: ") + e.what());
  }
}

// ---- formatting ------------------------------------------------------------

/// Shortest text that reads back to the same double; integers print plainly.
inline std::string format_number(double v) {
  char buf[40];
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) {
    std::snprintf(buf, sizeof buf, "%" PRId64, static_cast<std::int64_t>(v));
    return buf;
  }
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw ValidationError("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline json read_json(const std::filesystem::path& p) {
  const auto text = read_text(p);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(p.string() + ": malformed JSON: " + e.what());
  }
}

inline std::string table_to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += t.columns[i];
  }
  out += '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += format_number(r[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::string environment_to_csv(const Environment& env) {
  const auto& m = env.seed_meta();
  std::string out = "# master=" + std::to_string(m.master) +
                    " env_index=" + std::to_string(m.env_index) + " scheme=" + m.scheme + "\n";
  out += "k,S,xi,lambda\n";
  for (std::int64_t i = env.min_index(); i <= env.max_index(); ++i) {
    out += std::to_string(i) + "," + std::to_string(env.S(i)) + "," +
           std::to_string(env.xi(i)) + "," + format_number(env.lambda(i)) + "\n";
  }
  return out;
}

inline Table moments_table(const QuenchedMoments& q) {
  Table t;
  t.columns = {"k",      "xi",     "lambda",   "W",         "mean_l",    "mean_r",
               "var_l",  "var_r",  "cum_mean", "cum_var_r", "cum_var_l", "trunc_err"};
  for (const auto& r : q.rows) {
    t.rows.push_back({static_cast<double>(r.k), static_cast<double>(r.xi), r.lambda, r.W,
                      r.mean_left, r.mean_right, r.var_left, r.var_right, r.cum_mean,
                      r.cum_var_r, r.cum_var_l, r.trunc_err});
  }
  return t;
}

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

// ---- ExperimentConfig -------------------------------------------------------

inline json test_function_to_json(const TestFunction& f) {
  if (f.kind == TestFunction::Kind::cosine) return {{"kind", "cos"}, {"t", f.param}};
  return {{"kind", "clamp"}, {"c", f.param}};
}

inline json probe_to_json(const ProbeConfig& p) {
  return {{"seeds", p.seeds},
          {"sites", p.sites},
          {"n0", p.n0},
          {"points", p.points},
          {"inner", p.inner},
          {"floor", p.floor},
          {"fraction", p.fraction},
          {"light_cap", p.light_cap},
          {"control_seeds", p.control_seeds},
          {"keep", p.keep},
          {"exceptional_ratio", p.exceptional_ratio},
          {"exceptional_min", p.exceptional_min},
          {"exceptional_max", p.exceptional_max},
          {"exceptional_draws", p.exceptional_draws},
          {"exceptional_tol", p.exceptional_tol},
          {"exceptional_left", p.exceptional_left}};
}

/// Workers are a run-time choice and are not part of the config.
inline json config_to_json(const ExperimentConfig& c) {
  json tf = json::array();
  for (const auto& f : c.test_functions) tf.push_back(test_function_to_json(f));
  json j = {{"theorem", to_string(c.theorem)},
            {"spec", spec_to_json(c.spec)},
            {"n_list", c.n_list},
            {"n_envs", c.n_envs},
            {"inner_replicas", c.inner_replicas},
            {"limit_samples", c.limit_samples},
            {"tier", to_string(c.tier)},
            {"test_functions", tf},
            {"alpha_level", c.alpha_level},
            {"master_seed", c.master_seed},
            {"w_tol", c.w_tol},
            {"cutoff", c.cutoff},
            {"keep", c.keep},
            {"control_shift", c.control_shift},
            {"ablation", c.ablation},
            {"ks_tolerance", c.ks_tolerance},
            {"bound", c.bound},
            {"theta", c.theta},
            {"scale_factor", c.scale_factor}};
  if (c.theorem == Experiment::probe) j["probe"] = probe_to_json(c.probe);
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  std::vector<std::string> diag;
  ExperimentConfig c;
  FieldReader r(j, "", diag);
  if (!r.ok_object()) throw_if(diag, "invalid config");
  r.reject_unknown({"theorem", "spec", "n_list", "n_envs", "inner_replicas", "limit_samples",
                    "tier", "test_functions", "alpha_level", "master_seed", "w_tol", "cutoff",
                    "keep", "control_shift", "ablation", "ks_tolerance", "bound", "theta",
                    "scale_factor", "probe"});
  std::string theorem;
  r.read("theorem", theorem, true);
  if (r.has("theorem") && r.at("theorem").is_string()) {
    try {
      c.theorem = experiment_from_string(theorem);
    } catch (const ValidationError& e) {
      diag.push_back(e.what());
    }
  }
  if (!r.has("spec")) {
    r.fail("spec", "missing required field");
  } else {
    c.spec = spec_from_json(r.at("spec"), "spec", diag);
  }
  r.read("master_seed", c.master_seed, true);
  if (r.has("n_list")) {
    const auto& v = r.at("n_list");
    if (!v.is_array() || v.empty()) {
      r.fail("n_list", "expected a non-empty array of positive integers");
    } else {
      c.n_list.clear();
      for (const auto& x : v) {
        if (!x.is_number_integer() || x.get<std::int64_t>() < 1) {
          r.fail("n_list", "expected a non-empty array of positive integers");
          break;
        }
        c.n_list.push_back(x.get<std::int64_t>());
      }
    }
  }
  r.read("n_envs", c.n_envs);
  r.read("inner_replicas", c.inner_replicas);
  r.read("limit_samples", c.limit_samples);
  std::string tier = std::string(to_string(c.tier));
  r.read("tier", tier);
  try {
    c.tier = tier_from_string(tier);
  } catch (const ValidationError& e) {
    r.fail("tier", e.what());
  }
  if (r.has("test_functions")) {
    const auto& v = r.at("test_functions");
    if (!v.is_array() || v.empty()) {
      r.fail("test_functions", "expected a non-empty array");
    } else {
      c.test_functions.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        FieldReader f(v[i], "test_functions[" + std::to_string(i) + "]", diag);
        std::string kind;
        f.read("kind", kind, true);
        TestFunction tf;
        if (kind == "cos") {
          f.reject_unknown({"kind", "t"});
          tf.kind = TestFunction::Kind::cosine;
          f.read("t", tf.param, true);
        } else if (kind == "clamp") {
          f.reject_unknown({"kind", "c"});
          tf.kind = TestFunction::Kind::clamp;
          f.read("c", tf.param, true);
          if (!(tf.param > 0.0)) f.fail("c", "must be > 0");
        } else if (!kind.empty()) {
          f.fail("kind", "expected 'cos' or 'clamp'");
        }
        c.test_functions.push_back(tf);
      }
    }
  }
  r.read("alpha_level", c.alpha_level);
  r.read("w_tol", c.w_tol);
  r.read("cutoff", c.cutoff);
  r.read("keep", c.keep);
  r.read("control_shift", c.control_shift);
  r.read("ablation", c.ablation);
  r.read("ks_tolerance", c.ks_tolerance);
  r.read("bound", c.bound);
  r.read("theta", c.theta);
  r.read("scale_factor", c.scale_factor);
  if (!(c.alpha_level > 0.0 && c.alpha_level < 1.0)) r.fail("alpha_level", "must lie in (0,1)");
  if (!(c.w_tol > 0.0)) r.fail("w_tol", "must be > 0");
  if (!(c.cutoff > 0.0)) r.fail("cutoff", "must be > 0");
  if (!(c.keep >= 0.0)) r.fail("keep", "must be >= 0");
  if (c.n_envs < 2) r.fail("n_envs", "must be >= 2");
  if (c.inner_replicas < 1) r.fail("inner_replicas", "must be >= 1");
  if (c.limit_samples < 2) r.fail("limit_samples", "must be >= 2");
  if (c.scale_factor < 2) r.fail("scale_factor", "must be >= 2");
  if (r.has("probe")) {
    FieldReader p(r.at("probe"), "probe", diag);
    p.reject_unknown({"seeds", "sites", "n0", "points", "inner", "floor", "fraction", "light_cap",
                      "control_seeds", "keep", "exceptional_ratio", "exceptional_min",
                      "exceptional_max", "exceptional_draws", "exceptional_tol", "exceptional_left"});
    auto& q = c.probe;
    p.read("seeds", q.seeds);
    p.read("sites", q.sites);
    p.read("n0", q.n0);
    p.read("points", q.points);
    p.read("inner", q.inner);
    p.read("floor", q.floor);
    p.read("fraction", q.fraction);
    p.read("light_cap", q.light_cap);
    p.read("control_seeds", q.control_seeds);
    p.read("keep", q.keep);
    p.read("exceptional_ratio", q.exceptional_ratio);
    p.read("exceptional_min", q.exceptional_min);
    p.read("exceptional_max", q.exceptional_max);
    p.read("exceptional_draws", q.exceptional_draws);
    p.read("exceptional_tol", q.exceptional_tol);
    p.read("exceptional_left", q.exceptional_left);
    if (!(q.exceptional_left > 0.0)) p.fail("exceptional_left", "must be > 0");
    if (q.points < 4) p.fail("points", "must be >= 4");
    if (q.seeds < 1) p.fail("seeds", "must be >= 1");
    if (q.n0 < 1) p.fail("n0", "must be >= 1");
    if (q.light_cap < 1) p.fail("light_cap", "must be >= 1");
  }
  throw_if(diag, "invalid config");
  return c;
}

// ---- reports -------------------------------------------------------------------

inline json report_to_json(const VerificationReport& r, bool with_runtime = false) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"kind", c.kind},
                      {"statistic", c.statistic},
                      {"p_value", c.p_value},
                      {"threshold", c.threshold},
                      {"n1", c.n1},
                      {"n2", c.n2},
                      {"pass", c.pass},
                      {"diagnostic", c.diagnostic}});
  }
  json certs = json::object();
  for (const auto& [k, v] : r.certificates) {
    json e = {{"value", v}};
    if (auto it = r.certificate_limits.find(k); it != r.certificate_limits.end()) {
      e["limit"] = it->second;
    }
    certs[k] = e;
  }
  json j = {{"experiment", r.experiment},
            {"pass", r.passed()},
            {"certificates_ok", r.certificates_ok()},
            {"checks", checks},
            {"metrics", r.metrics},
            {"certificates", certs},
            {"notes", r.notes}};
  if (with_runtime) j["runtime_s"] = r.runtime_s;
  return j;
}

}  // namespace rwsre
