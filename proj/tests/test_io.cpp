#include <gtest/gtest.h>

#include "rwsre/io.hpp"

using namespace rwsre;

namespace {

ExperimentConfig sample_config() {
  ExperimentConfig c;
  c.theorem = Experiment::probe;
  c.spec = {GapLaw(1.2, 2.0), DriftLaw({{0.75, 2.0 / 3.0}, {1.0 / 3.0, 1.0 / 3.0}})};
  c.n_list = {100, 1000};
  c.test_functions = {{TestFunction::Kind::cosine, 0.1}, {TestFunction::Kind::clamp, 0.3}};
  c.master_seed = 0xdeadbeefcafeull;
  c.cutoff = 1.0 / 3.0;
  c.probe.floor = 0.07;
  return c;
}

}  // namespace

TEST(Io, ConfigRoundTrip) {
  const auto c = sample_config();
  const auto text = config_to_json(c).dump(2);
  EXPECT_TRUE(config_from_json(json::parse(text)) == c);
  ExperimentConfig d;
  d.spec = c.spec;
  EXPECT_TRUE(config_from_json(config_to_json(d)) == d);
}

TEST(Io, EmptyConfigNamesMissingFields) {
  try {
    config_from_json(json::object());
    FAIL() << "no exception";
  } catch (const ValidationError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("theorem: missing required field"), std::string::npos) << m;
    EXPECT_NE(m.find("spec: missing required field"), std::string::npos) << m;
    EXPECT_NE(m.find("master_seed: missing required field"), std::string::npos) << m;
  }
}

TEST(Io, BadFieldsAreReportedByPath) {
  auto j = config_to_json(sample_config());
  j["spec"]["gap_law"]["beta"] = "x";
  j["spec"]["drift_law"]["atoms"][1]["p"] = -1;
  j["n_envs"] = 1;
  j["bogus"] = true;
  try {
    config_from_json(j);
    FAIL() << "no exception";
  } catch (const ValidationError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("spec.gap_law.beta: expected a number"), std::string::npos) << m;
    EXPECT_NE(m.find("spec.drift_law.atoms"), std::string::npos) << m;
    EXPECT_NE(m.find("n_envs: must be >= 2"), std::string::npos) << m;
    EXPECT_NE(m.find("bogus: unknown field"), std::string::npos) << m;
  }
}

TEST(Io, SpecRoundTrip) {
  const EnvironmentSpec s{GapLaw(0.8), DriftLaw({{0.75, 0.75}, {1.0 / 3.0, 0.25}})};
  EXPECT_TRUE(parse_spec(json::parse(spec_to_json(s).dump())) == s);
  EXPECT_THROW(parse_spec(json::parse(R"({"gap_law":{"kind":"zipf","beta":1}})")),
               ValidationError);
}

TEST(Io, EnvironmentRoundTrip) {
  const EnvironmentSpec s{GapLaw(1.5), DriftLaw({{0.75, 2.0 / 3.0}, {1.0 / 3.0, 1.0 / 3.0}})};
  const auto env = sample_environment(s, 200, 1e-10, 12, 4);
  const auto back = environment_from_json(json::parse(environment_to_json(env).dump()));
  EXPECT_TRUE(back == env);
  auto j = environment_to_json(env);
  j["columns"]["S"][3] = 12345678;
  EXPECT_THROW(environment_from_json(j), ValidationError);
  const auto csv = environment_to_csv(env);
  EXPECT_NE(csv.find("k,S,xi,lambda\n"), std::string::npos);
}

TEST(Io, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 2.0, -7.0, 1e-300, 6.02214076e23, 0.30000000000000004}) {
    EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_number(42.0), "42");
}

TEST(Io, TableCsv) {
  Table t;
  t.columns = {"a", "b"};
  t.rows = {{1.0, 0.5}, {2.0, 0.25}};
  EXPECT_EQ(table_to_csv(t), "a,b\n1,0.5\n2,0.25\n");
}

TEST(Io, DigestIsStable) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}
