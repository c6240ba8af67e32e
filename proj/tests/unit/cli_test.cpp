#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "commands.hpp"
#include "mshift/error.hpp"
#include "scenario.hpp"

namespace {

using mshift::cli::Json;
using mshift::cli::Overrides;
using mshift::cli::SchemaError;

const char* kCoin = R"({
  "schema_version": 1,
  "chain": {"generator": "iid", "law": [0.5, 0.5], "horizon": 120},
  "observable": {"generator": "coordinate", "values": [0, 1]},
  "analysis": {"checks": ["validate", "moments"], "n_grid": [30, 60, 120]}
})";

std::string with(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

std::string error_of(const std::string& text) {
  try {
    mshift::cli::parse_scenario(text, "case.json");
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "";
}

TEST(Scenario, ParsesTheCoin) {
  const auto s = mshift::cli::parse_scenario(kCoin, "case.json");
  EXPECT_EQ(s.chain.kernels.size(), 120u);
  EXPECT_EQ(s.observable.generator, "coordinate");
}

TEST(Scenario, SyntaxErrorReportsTheLine) {
  const auto msg = error_of(with(kCoin, "\"horizon\": 120", "\"horizon\": 120,,"));
  EXPECT_NE(msg.find("case.json:3"), std::string::npos) << msg;
}

TEST(Scenario, UnknownKeyIsNamed) {
  const auto msg = error_of(with(kCoin, "\"horizon\": 120", "\"horizon\": 120, \"horzion\": 3"));
  EXPECT_NE(msg.find("/chain"), std::string::npos) << msg;
  EXPECT_NE(msg.find("horzion"), std::string::npos) << msg;
}

TEST(Scenario, WrongSchemaVersion) {
  const auto msg = error_of(with(kCoin, "\"schema_version\": 1", "\"schema_version\": 2"));
  EXPECT_NE(msg.find("schema_version"), std::string::npos) << msg;
}

TEST(Scenario, BadLawIsASchemaError) {
  const auto msg = error_of(with(kCoin, "[0.5, 0.5]", "[0.5, 0.6]"));
  EXPECT_FALSE(msg.empty());
}

TEST(Scenario, UnknownCheckIsRejected) {
  const auto msg = error_of(with(kCoin, "\"moments\"]", "\"moments\", \"fourier\"]"));
  EXPECT_NE(msg.find("fourier"), std::string::npos) << msg;
}

TEST(Commands, ValidateReportsContractionAndEllipticity) {
  const auto s = mshift::cli::parse_scenario(kCoin, "case.json");
  const auto r = mshift::cli::run_command("validate", s, {});
  EXPECT_TRUE(r.pass());
  EXPECT_DOUBLE_EQ(r.doc.at("delta").get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(r.doc.at("zeta").get<double>(), 0.5);
}

TEST(Commands, DegenerateStepFailsWithItsIndex) {
  const char* text = R"({
    "schema_version": 1,
    "chain": {"generator": "explicit", "initial": [0.5, 0.5],
              "kernels": [[[0.5, 0.5], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]], [[0, 1], [1, 0]],
                          [[0.5, 0.5], [0.5, 0.5]]]},
    "observable": {"generator": "coordinate", "values": [0, 1]},
    "analysis": {"checks": ["validate"]}
  })";
  const auto s = mshift::cli::parse_scenario(text, "step.json");
  const auto v = mshift::cli::run_command("validate", s, {});
  EXPECT_FALSE(v.pass());
  EXPECT_EQ(v.doc.at("first_ellipticity_failure").get<std::size_t>(), 2u);
  try {
    mshift::cli::run_command("llt", s, {});
    FAIL() << "expected an assumption failure";
  } catch (const mshift::AssumptionError& e) {
    EXPECT_EQ(e.step(), std::optional<std::size_t>(2));
  }
}

TEST(Commands, CorangeShapeForTheCoin) {
  const auto s = mshift::cli::parse_scenario(
      with(kCoin, "\"n_grid\"", "\"corange\": {\"t_max\": 6.8, \"resolution\": 0.001, \"n_max\": 100}, \"n_grid\""),
      "case.json");
  const auto r = mshift::cli::run_command("corange", s, {});
  EXPECT_NEAR(r.doc.at("t0").get<double>(), 2 * M_PI, 1e-6);
  EXPECT_NEAR(r.doc.at("h0").get<double>(), 1.0, 1e-6);
  EXPECT_FALSE(r.curves.empty());
}

TEST(Commands, SeedLeavesExactFieldsAlone) {
  const auto s = mshift::cli::parse_scenario(kCoin, "case.json");
  Overrides a, b;
  a.seed = 1;
  b.seed = 2;
  b.threads = 4;
  EXPECT_EQ(mshift::cli::run_command("moments", s, a).doc, mshift::cli::run_command("moments", s, b).doc);
}

TEST(Commands, EmitWritesJsonAndCurves) {
  const auto dir = std::filesystem::temp_directory_path() / "mshift_cli_test";
  std::filesystem::remove_all(dir);
  const auto s = mshift::cli::parse_scenario(kCoin, "case.json");
  Overrides o;
  o.out_dir = dir;
  const auto r = mshift::cli::run_command("validate", s, o);
  EXPECT_EQ(mshift::cli::emit_result(r, s, o), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "validate.json"));
  std::size_t csv = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) csv += e.path().extension() == ".csv";
  EXPECT_EQ(csv, r.curves.size());
  std::filesystem::remove_all(dir);
}

}  // namespace
