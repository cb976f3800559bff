#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ivc/config.hpp"
#include "ivc/report.hpp"

namespace {

using namespace ivc;
namespace fs = std::filesystem;

std::string error_path(const Json& j, auto&& reader) {
  try {
    (void)reader(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<none>";
}

TEST(Config, SourceErrorsNameThePath) {
  auto read = [](const Json& j) { return source_from_json(j); };
  EXPECT_EQ(error_path(Json{{"variant", "Gauss"}}, read), "$.variant");
  EXPECT_EQ(error_path(Json{{"pmf", {0.5, 0.5}}}, read), "$.variant");
  EXPECT_EQ(error_path(Json{{"variant", "Categorical"}, {"pmf", {0.5, "x"}}}, read), "$.pmf[1]");
  EXPECT_EQ(error_path(Json{{"variant", "Categorical"}, {"pmf", {0.5, 0.5}}, {"extra", 1}}, read), "$.extra");
  EXPECT_EQ(error_path(Json{{"variant", "Categorical"}, {"pmf", {0.5, 0.4}}}, read), "$");
  EXPECT_EQ(error_path(Json{{"variant", "Banana"}, {"cov_diag", {1.0}}}, read), "$.cov_diag");
  EXPECT_EQ(error_path(Json::array(), read), "$");
}

TEST(Config, NestedPathsInExperimentConfigs) {
  auto banana = [](const Json& j) { return banana_config_from_json(j); };
  EXPECT_EQ(error_path(Json{{"train", {{"hidden", {256, -1}}}}}, banana), "$.train.hidden[1]");
  EXPECT_EQ(error_path(Json{{"train", {{"lambda", 0.0}}}}, banana), "$.train");
  EXPECT_EQ(error_path(Json{{"lambdas", {0.1, -0.1}}}, banana), "$.lambdas[1]");
  EXPECT_EQ(error_path(Json{{"objectives", {"vc", "ae"}}}, banana), "$.objectives[1]");
  EXPECT_EQ(error_path(Json{{"augmentation", {{"variant", "Compose"}, {"list", {{{"variant", "Spin"}}}}}}}, banana),
            "$.augmentation.list[0].variant");
  EXPECT_EQ(error_path(Json{{"source", {{"variant", "Categorical"}, {"pmf", {1.0}}}}}, banana), "$.source");
  EXPECT_EQ(error_path(Json{{"partition", {{"lo", 1.0}, {"hi", 0.0}}}}, banana), "$.partition");
  auto ri = [](const Json& j) { return ri_curve_config_from_json(j); };
  EXPECT_EQ(error_path(Json{{"source", {{"variant", "Banana"}}}, {"equivalence", {{"variant", "Norm"}}}}, ri), "$.source");
  EXPECT_EQ(error_path(Json{{"source", {{"variant", "Categorical"}, {"pmf", {1.0}}}}}, ri), "$.equivalence");
  auto features = [](const Json& j) { return feature_config_from_json(j); };
  EXPECT_EQ(error_path(Json{{"dims", 5000}}, features), "$.dims");
  EXPECT_EQ(error_path(Json{{"precision_bits", 17}}, features), "$.precision_bits");
}

TEST(Config, RoundTrips) {
  nn::BananaConfig b;
  b.augmentation = Compose{{Rotation{-30.0, 30.0}, TranslateX{-1.0, 1.0}}};
  b.equivalence = Norm{16, std::array<double, 2>{0.0, 20.0}};
  b.objectives = {nn::Objective::BINCE};
  b.partition_lambda.reset();
  b.train.hidden = {32, 16};
  const Json j = to_json(b);
  EXPECT_EQ(to_json(banana_config_from_json(j)), j);

  RiCurveConfig r;
  r.source = IidSequence{{0.3, 0.7}, 3};
  r.equivalence = Counts{};
  r.z_size = 5;
  EXPECT_EQ(to_json(ri_curve_config_from_json(to_json(r))), to_json(r));

  for (const EquivalenceSpec& e :
       {EquivalenceSpec{GraphCanonical{4}}, EquivalenceSpec{Preimage{{0, 1, 1}}}, EquivalenceSpec{UnitVector{8}},
        EquivalenceSpec{Equality{}}})
    EXPECT_EQ(to_json(equivalence_from_json(to_json(e))), to_json(e));
  const AugmentationSpec a = LabelResample{{0, 0, 1}};
  EXPECT_EQ(to_json(augmentation_from_json(to_json(a))), to_json(a));
  nn::FeatureCompressConfig f;
  f.lambdas = {2.0};
  EXPECT_EQ(to_json(feature_config_from_json(to_json(f))), to_json(f));
}

TEST(Config, DefaultsSurviveAPartialTrainBlock) {
  const auto c = banana_config_from_json(Json{{"train", {{"epochs", 7}}}});
  EXPECT_EQ(c.train.epochs, 7u);
  EXPECT_EQ(c.train.batch_size, 32u);
  EXPECT_EQ(c.train.hidden, (std::vector<std::size_t>{256, 256}));
}

TEST(Report, CsvRoundTrip) {
  report::CsvTable t{{"a", "b"}, {{"1", "x"}, {"2.5", "y"}}};
  std::stringstream ss;
  report::write_csv(ss, t);
  EXPECT_EQ(ss.str(), "a,b\n1,x\n2.5,y\n");
  const auto back = report::parse_csv(ss);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_THROW((void)back.column("c"), ValidationError);
  EXPECT_EQ(report::num(0.1), "0.1");
}

TEST(Report, CurveSvgIsDeterministic) {
  std::vector<report::Series> s{{"VIC", {{0.1, 3.0}, {0.5, 1.0}, {1.0, 0.2}}, nn::MeanSe{0.7, 0.05}},
                                {"VC <raw>", {{0.3, 4.0}, {0.9, 2.0}}, std::nullopt}};
  const auto a = report::ri_curve_svg(s);
  EXPECT_EQ(a, report::ri_curve_svg(s));
  EXPECT_NE(a.find("<polyline"), std::string::npos);
  EXPECT_NE(a.find("&lt;raw&gt;"), std::string::npos);
  const auto empty = report::ri_curve_svg({});
  EXPECT_NE(empty.find("<line"), std::string::npos);
  EXPECT_EQ(empty.find("<polyline"), std::string::npos);
}

TEST(Report, SweepSeriesAveragesSeeds) {
  report::CsvTable t{{"objective", "lambda", "seed", "rate_bits", "distortion"},
                     {{"VIC", "0.1", "1", "2", "0"},
                      {"VIC", "0.1", "2", "4", "0"},
                      {"VIC", "1", "1", "0", "2"},
                      {"VIC", "1", "2", "0", "2"}}};
  const auto s = report::series_from_sweep(t);
  ASSERT_EQ(s.size(), 1u);
  ASSERT_EQ(s[0].points.size(), 2u);
  EXPECT_DOUBLE_EQ(s[0].points[0].rate, 3.0);
  ASSERT_TRUE(s[0].aurd);
  EXPECT_DOUBLE_EQ(s[0].aurd->mean, 3.0);  // seeds give 2 and 4
  EXPECT_DOUBLE_EQ(s[0].aurd->se, 1.0);
}

nn::PartitionMap rings(std::size_t res) {
  nn::PartitionMap m;
  m.grid = nn::GridSpec{-5.0, 5.0, res};
  m.class_id.resize(res * res);
  for (std::size_t i = 0; i < m.class_id.size(); ++i)
    m.class_id[i] = static_cast<std::uint32_t>(std::hypot(m.x(i), m.y(i)) / 1.5);
  const std::uint32_t k = *std::max_element(m.class_id.begin(), m.class_id.end()) + 1;
  m.codes.resize(k);
  m.prob_mass.assign(k, 1.0 / k);
  return m;
}

TEST(Report, PartitionTableRoundTripAndSvgSize) {
  const auto m = rings(40);
  const auto back = report::partition_from_table(report::partition_table(m));
  EXPECT_EQ(back.class_id, m.class_id);
  EXPECT_EQ(back.grid.resolution, 40u);
  EXPECT_DOUBLE_EQ(back.grid.hi, 5.0);
  const auto big = report::partition_svg(rings(500));
  EXPECT_LE(big.size(), 5u << 20);
  EXPECT_EQ(big, report::partition_svg(rings(500)));
}

TEST(Report, RenderReportFromArtifacts) {
  const fs::path dir = fs::temp_directory_path() / "ivc_report_test";
  fs::remove_all(dir);
  EXPECT_THROW((void)report::render_report(dir), ValidationError);
  fs::create_directories(dir);
  EXPECT_THROW((void)report::render_report(dir), ValidationError);
  {
    std::ofstream os(dir / "sweep.csv");
    os << "objective,lambda,seed,rate_bits,distortion\nVC,0.1,1,2,0.5\nVC,1,1,0.5,1\n";
    std::ofstream ps(dir / "partition.csv");
    report::write_csv(ps, report::partition_table(rings(20)));
  }
  const auto written = report::render_report(dir);
  ASSERT_EQ(written.size(), 2u);
  for (const auto& p : written) EXPECT_GT(fs::file_size(p), 100u);
  std::ifstream a(dir / "ri_curves.svg");
  std::stringstream first;
  first << a.rdbuf();
  (void)report::render_report(dir);
  std::ifstream b(dir / "ri_curves.svg");
  std::stringstream second;
  second << b.rdbuf();
  EXPECT_EQ(first.str(), second.str());
  fs::remove_all(dir);
}

}  // namespace
