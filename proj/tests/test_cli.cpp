#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ivc/cli.hpp"

namespace {

using namespace ivc;
namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out, err;
};

Outcome ivc_run(std::vector<std::string> args) {
  args.insert(args.begin(), "ivc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ivc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("IVC_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    unsetenv("IVC_SEED");
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const Json& j) const { std::ofstream(dir_ / name) << j.dump(); }

  fs::path dir_;
};

TEST_F(CliTest, CoinsCodeCountsNearLogN) {
  const auto r = ivc_run({"coins", "--n", "100", "--samples", "2000", "--seed", "7", "--out", path("c")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = report::read_csv(dir_ / "c" / "coins.csv");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_LE(report::cell_double(t, 0, t.column("invariant_bits")), 4.6);
  EXPECT_GE(report::cell_double(t, 0, t.column("gain_factor")), 20.0);
  EXPECT_EQ(t.rows[0][t.column("roundtrip")], "1");
  EXPECT_TRUE(fs::exists(dir_ / "c" / "coins.ivcz"));
  EXPECT_NE(r.out.find("invariant_bits"), std::string::npos);
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  for (const char* d : {"a", "b"}) {
    ASSERT_EQ(ivc_run({"coins", "--samples", "300", "--seed", "3", "--out", path(d)}).code, 0);
    ASSERT_EQ(ivc_run({"graphs", "--nodes", "4", "--samples", "200", "--out", path(std::string(d) + "g")}).code, 0);
  }
  EXPECT_EQ(slurp(dir_ / "a" / "coins.ivcz"), slurp(dir_ / "b" / "coins.ivcz"));
  EXPECT_EQ(slurp(dir_ / "a" / "coins.csv"), slurp(dir_ / "b" / "coins.csv"));
  EXPECT_EQ(slurp(dir_ / "ag" / "graph_classes.csv"), slurp(dir_ / "bg" / "graph_classes.csv"));
}

TEST_F(CliTest, SeedEnvironmentOverride) {
  ASSERT_EQ(ivc_run({"coins", "--samples", "300", "--seed", "3", "--out", path("a")}).code, 0);
  setenv("IVC_SEED", "3", 1);
  ASSERT_EQ(ivc_run({"coins", "--samples", "300", "--seed", "99", "--out", path("b")}).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "coins.ivcz"), slurp(dir_ / "b" / "coins.ivcz"));
  setenv("IVC_SEED", "x1", 1);
  const auto bad = ivc_run({"coins", "--samples", "300", "--out", path("c")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("IVC_SEED"), std::string::npos);
}

TEST_F(CliTest, NeverOverwritesWithoutForce) {
  ASSERT_EQ(ivc_run({"coins", "--samples", "100", "--out", path("c")}).code, 0);
  const auto again = ivc_run({"coins", "--samples", "100", "--out", path("c")});
  EXPECT_EQ(again.code, 1);
  EXPECT_NE(again.err.find("--force"), std::string::npos);
  EXPECT_EQ(ivc_run({"coins", "--samples", "100", "--out", path("c"), "--force"}).code, 0);
}

TEST_F(CliTest, UsageAndConfigErrors) {
  EXPECT_EQ(ivc_run({}).code, 2);
  EXPECT_EQ(ivc_run({"coins"}).code, 2);
  EXPECT_EQ(ivc_run({"coins", "--p", "1.5", "--out", path("c")}).code, 2);
  EXPECT_EQ(ivc_run({"frobnicate"}).code, 2);
  write("bad.json", Json{{"source", {{"variant", "Categorical"}, {"pmf", {0.5, 0.5}}}},
                         {"equivalence", {{"variant", "Preimage"}, {"class_of", {0, "one"}}}}});
  const auto r = ivc_run({"ri-curve", "--config", path("bad.json"), "--out", path("r")});
  EXPECT_EQ(r.code, 2);
  const auto err = Json::parse(r.err);
  EXPECT_EQ(err["error"], "config");
  EXPECT_EQ(err["path"], "$.equivalence.class_of[1]");
  std::ofstream(dir_ / "broken.json") << "{ not json";
  EXPECT_EQ(ivc_run({"ri-curve", "--config", path("broken.json"), "--out", path("r2")}).code, 2);
}

TEST_F(CliTest, RiCurveErasureMatchesTheory) {
  write("ri.json", Json{{"source", {{"variant", "IidSequence"}, {"base_pmf", {0.5, 0.5}}, {"length", 3}}},
                        {"equivalence", {{"variant", "Counts"}}},
                        {"betas", {0.5, 2.0}},
                        {"restarts", 2}});
  const auto r = ivc_run({"ri-curve", "--config", path("ri.json"), "--out", path("r")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = report::read_csv(dir_ / "r" / "ri_curve.csv");
  ASSERT_EQ(t.rows.size(), 11u);
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    EXPECT_NEAR(report::cell_double(t, i, t.column("rate_erasure")), report::cell_double(t, i, t.column("rate_theory")), 1e-9);
  // H(Binomial(3, 1/2)) = 3 - (3/4) log2 3.
  EXPECT_NEAR(report::cell_double(t, 0, t.column("rate_theory")), 3.0 - 0.75 * std::log2(3.0), 1e-9);
  EXPECT_EQ(report::read_csv(dir_ / "r" / "oracle.csv").rows.size(), 2u);
  EXPECT_TRUE(fs::exists(dir_ / "r" / "config.json"));
}

TEST_F(CliTest, GraphsAndMultiset) {
  ASSERT_EQ(ivc_run({"graphs", "--nodes", "4", "--samples", "500", "--out", path("g")}).code, 0);
  EXPECT_EQ(report::read_csv(dir_ / "g" / "graph_classes.csv").rows.size(), 11u);
  ASSERT_EQ(ivc_run({"multiset", "--alphabet", "3", "--length", "6", "--samples", "2000", "--out", path("m")}).code, 0);
  const auto t = report::read_csv(dir_ / "m" / "multiset.csv");
  EXPECT_EQ(t.rows[0][t.column("roundtrip")], "1");
  EXPECT_EQ(ivc_run({"graphs", "--nodes", "9", "--out", path("g9")}).code, 2);
}

TEST_F(CliTest, CodecRoundTrip) {
  write("equiv.json", Json{{"variant", "Counts"}});
  write("model.json", Json{{"source", {{"variant", "IidSequence"}, {"base_pmf", {0.5, 0.5}}, {"length", 4}}},
                           {"precision_bits", 14}});
  write("examples.json", Json{{"examples", {{0, 1, 1, 0}, {1, 1, 1, 1}, {1, 0, 0, 1}}}});
  const auto enc = ivc_run({"codec", "encode", "--equiv", path("equiv.json"), "--model", path("model.json"), "--input",
                            path("examples.json"), "--output", path("s.ivcz")});
  ASSERT_EQ(enc.code, 0) << enc.err;
  EXPECT_EQ(slurp(dir_ / "s.ivcz").substr(0, 4), "IVCZ");
  const auto dec = ivc_run({"codec", "decode", "--equiv", path("equiv.json"), "--model", path("model.json"), "--input",
                            path("s.ivcz"), "--output", path("d.json")});
  ASSERT_EQ(dec.code, 0) << dec.err;
  const auto j = Json::parse(slurp(dir_ / "d.json"));
  ASSERT_EQ(j["invariants"].size(), 3u);
  EXPECT_EQ(j["invariants"][0], j["invariants"][2]);
  EXPECT_NE(j["invariants"][0], j["invariants"][1]);
  EXPECT_EQ(j["representatives"][j["invariants"][0].get<std::string>()], Json({0, 0, 1, 1}));
  EXPECT_EQ(ivc_run({"codec", "decode", "--equiv", path("equiv.json"), "--model", path("model.json"), "--input",
                     path("s.ivcz"), "--output", path("d.json")})
                .code,
            1);
  std::ofstream(dir_ / "junk.ivcz") << "IVCZ\x07junk";
  EXPECT_EQ(ivc_run({"codec", "decode", "--equiv", path("equiv.json"), "--model", path("model.json"), "--input",
                     path("junk.ivcz"), "--output", path("j.json")})
                .code,
            1);
}

TEST_F(CliTest, GradcheckPasses) {
  const auto r = ivc_run({"gradcheck", "--out", path("gc")});
  ASSERT_EQ(r.code, 0) << r.out;
  const auto t = report::read_csv(dir_ / "gc" / "gradcheck.csv");
  EXPECT_GT(t.rows.size(), 20u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_EQ(t.rows[i][t.column("pass")], "1");
}

TEST_F(CliTest, TinyBananaSweepAndReport) {
  const auto r = ivc_run({"banana", "--objective", "vc,vic", "--lambda-sweep", "0.1,1", "--seeds", "1", "--epochs", "2",
                          "--steps", "10", "--batch", "16", "--out", path("b")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto sweep = report::read_csv(dir_ / "b" / "sweep.csv");
  EXPECT_EQ(sweep.rows.size(), 4u);
  EXPECT_EQ(report::read_csv(dir_ / "b" / "aurd.csv").rows.size(), 2u);
  EXPECT_TRUE(fs::exists(dir_ / "b" / "runs" / "vic_lam0.1_seed1" / "metrics.json"));
  EXPECT_TRUE(fs::exists(dir_ / "b" / "partition.csv"));
  const auto svg = slurp(dir_ / "b" / "ri_curves.svg");
  fs::remove(dir_ / "b" / "ri_curves.svg");
  ASSERT_EQ(ivc_run({"report", "--run", path("b")}).code, 0);
  EXPECT_EQ(slurp(dir_ / "b" / "ri_curves.svg"), svg);
  EXPECT_EQ(ivc_run({"report", "--run", path("missing")}).code, 1);
  EXPECT_EQ(ivc_run({"banana", "--aug", "shear", "--out", path("b2")}).code, 2);
}

}  // namespace
