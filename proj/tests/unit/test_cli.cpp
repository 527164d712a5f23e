#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isokam/cli.hpp"
#include "isokam/errors.hpp"
#include "isokam/system_io.hpp"

using namespace isokam;
using nlohmann::json;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "isokam");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) { return ::testing::TempDir() + "/" + name; }

}  // namespace

TEST(Cli, MomentsDeterministic) {
  const json cfg = {{"command", "moments"}, {"dim", 3}, {"samples", 20000}, {"seed", 4}};
  const json a = run_command(cfg);
  const json b = run_command(cfg);
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a["version"], kVersion);
  EXPECT_EQ(a["config"]["samples"], 20000);
  EXPECT_NEAR(a["result"]["m2"]["value"].get<double>(), 1.0 / 3.0, 5 * a["result"]["m2"]["se"].get<double>());
}

TEST(Cli, ConfigErrors) {
  EXPECT_THROW(run_command({{"command", "moments"}, {"dim", 1}}), ConfigInvalid);
  EXPECT_THROW(run_command({{"command", "moments"}, {"bogus", 1}}), ConfigInvalid);
  EXPECT_THROW(run_command({{"command", "nope"}}), ConfigInvalid);
  EXPECT_THROW(normalize_config(json::array()), ConfigInvalid);
  try {
    run_command({{"command", "lyapunov"}});
    FAIL();
  } catch (const ConfigInvalid& e) {
    EXPECT_EQ(e.field(), "system");
  }
}

TEST(Cli, ExitCodes) {
  auto r = run({"moments", "--dim", "3", "--samples", "1000"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(json::parse(r.out)["command"], "moments");
  r = run({"moments", "--dim", "1"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_EQ(json::parse(r.err)["error"], "ConfigInvalid");
  r = run({"moments", "--no-such-flag"});
  EXPECT_EQ(r.code, kExitConfig);
  // Identity generators are resonant in every degree.
  const std::string sys = temp_path("resonant.json");
  std::ofstream(sys) << json({{"generators", {{{"rot_z", 0.0}}, {{"rot_x", 0.0}}}}}).dump();
  r = run({"kam-step", "--system", sys, "--lmax", "4", "--derivative-panel", "100", "--strain-quad", "100"});
  EXPECT_EQ(r.code, kExitDomain);
  EXPECT_EQ(json::parse(r.err)["error"], "NotDiophantineAtDegree");
}

TEST(Cli, ReplayReproducesOutput) {
  const std::string first = temp_path("first.json");
  auto r = run({"--out", first, "lyapunov", "--system", "{\"generators\":\"reference\"}", "--steps", "2000"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::ifstream in(first);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  r = run({"replay", first});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, text);
}

TEST(SystemIo, GeneratorForms) {
  const auto ref = parse_generators("reference");
  EXPECT_EQ(ref.size(), 2);
  const auto g = parse_generators(json::parse(R"([{"rot_z": 0.5}, {"haar": {"dim": 3, "seed": 2}},
                                                 [[1,0,0],[0,0,-1],[0,1,0]]])"));
  ASSERT_EQ(g.size(), 3);
  EXPECT_LT((g[0].mat() - rot_z(0.5).mat()).norm(), 1e-15);
  EXPECT_LT((g[1].mat() - haar_sample(3, 2).mat()).norm(), 1e-15);
  EXPECT_LT((g[2].mat() - rot_x(M_PI / 2).mat()).norm(), 1e-15);
  const auto p = parse_generators(json::parse(R"([{"plane": {"dim": 5, "i": 0, "j": 4, "theta": 0.3}}])"));
  EXPECT_LT((p[0].mat() - plane_rotation(5, 0, 4, 0.3).mat()).norm(), 1e-15);
  EXPECT_THROW(parse_generators(json::parse(R"([[[1,0],[0,2]]])")), ConfigInvalid);
}

TEST(SystemIo, FieldsRoundTrip) {
  const auto s = parse_system(json::parse(R"({"generators": "reference", "epsilon": 0.1,
      "fields": [{"random": {"degree": 3, "c0": 1.0, "seed": 3}}, {"copy_of": 0, "scale": -1}]})"));
  ASSERT_EQ(s.fields.size(), 2u);
  PVec x(3);
  x << 0.0, 0.6, 0.8;
  EXPECT_LT((s.fields[0].value(x) + s.fields[1].value(x)).norm(), 1e-15);
  const auto back = parse_field(field_to_json(s.fields[0]), 3, {});
  EXPECT_LT((back.value(x) - s.fields[0].value(x)).norm(), 1e-15);
  EXPECT_EQ(s.maps().size(), 2u);
}
