#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "confound/harness.hpp"
#include "confound/presets.hpp"
#include "confound/report_io.hpp"

using namespace confound;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c = preset("1d-nu0.7-d0");
  c.scenario = "small";
  c.sizes = {50, 80, 120, 200};
  c.n_replicates = 45;
  c.estimators = {EstimatorSpec{"ols", 0, 0, {}}, EstimatorSpec{"ols_diff", 1, 0, {}},
                  EstimatorSpec{"ols_diff", 2, 0, {}}};
  return c;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("confound_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string s;
  std::getline(in, s);
  return s;
}

}  // namespace

TEST(Summarize, Examples) {
  auto s = summarize({2.0, 2.0, 2.0}, 2.0);
  EXPECT_EQ(s.rmse, 0.0);
  EXPECT_EQ(s.bias, 0.0);
  EXPECT_EQ(s.sd, 0.0);
  s = summarize({1.0, 3.0}, 2.0);
  EXPECT_DOUBLE_EQ(s.bias, 0.0);
  EXPECT_DOUBLE_EQ(s.sd, 1.0);
  EXPECT_DOUBLE_EQ(s.rmse, 1.0);
  EXPECT_DOUBLE_EQ(s.median, 2.0);
}

TEST(Summarize, RmseDecomposition) {
  std::mt19937_64 g(4);
  std::normal_distribution<double> nd(0.3, 1.7);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(5 + t * 7);
    for (auto& e : v) e = nd(g);
    const auto s = summarize(v, 2.0);
    EXPECT_NEAR(s.rmse * s.rmse, s.bias * s.bias + s.sd * s.sd, 1e-12 * (1.0 + s.rmse * s.rmse));
  }
}

TEST(Summarize, FailuresAreExcluded) {
  const auto s = summarize({1.0, NAN, 3.0, NAN}, 2.0);
  EXPECT_EQ(s.n_ok, 2);
  EXPECT_EQ(s.n_failed, 2);
  EXPECT_DOUBLE_EQ(s.sd, 1.0);
  const auto e = summarize({NAN}, 2.0);
  EXPECT_EQ(e.n_ok, 0);
  EXPECT_TRUE(std::isnan(e.rmse));
}

TEST(Quantile, Type7) {
  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
}

TEST(Experiment, ByteIdenticalAcrossThreadCounts) {
  const ExperimentConfig c = small_config();
  const auto a = run_experiment(c, 1);
  const auto b = run_experiment(c, 3);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    ASSERT_EQ(a.cells[i].replicates.size(), b.cells[i].replicates.size());
    EXPECT_EQ(std::memcmp(a.cells[i].replicates.data(), b.cells[i].replicates.data(),
                          a.cells[i].replicates.size() * sizeof(double)),
              0);
  }
  const auto d1 = temp_dir("t1"), d3 = temp_dir("t3");
  write_reports({a}, d1);
  write_reports({b}, d3);
  for (const char* f : {"results.csv", "replicates.csv", "quantiles.csv", "rate.csv", "metadata.json"}) {
    std::ifstream x(d1 / f), y(d3 / f);
    const std::string sx((std::istreambuf_iterator<char>(x)), {}), sy((std::istreambuf_iterator<char>(y)), {});
    EXPECT_EQ(sx, sy) << f;
  }
}

TEST(Experiment, BatchSizeDoesNotChangeResults) {
  ExperimentConfig c = small_config();
  c.sizes = {100};
  const auto a = run_experiment(c, 1);
  c.batch = 7;
  const auto b = run_experiment(c, 2);
  for (std::size_t i = 0; i < a.cells.size(); ++i)
    for (std::size_t r = 0; r < a.cells[i].replicates.size(); ++r)
      EXPECT_NEAR(a.cells[i].replicates[r], b.cells[i].replicates[r], 1e-9);
}

TEST(Reports, HeadersAndMetadataFixpoint) {
  const ExperimentConfig c = small_config();
  const auto r = run_experiment(c, 1);
  const auto dir = temp_dir("reports");
  write_reports({r}, dir);
  EXPECT_EQ(first_line(dir / "results.csv"), kResultsHeader);
  EXPECT_EQ(first_line(dir / "rate.csv"), kRateHeader);

  const auto meta = read_json_file(dir / "metadata.json");
  const auto configs = json_io::experiments_from_json(meta.at("config"));
  ASSERT_EQ(configs.size(), 1u);
  EXPECT_EQ(json_io::to_json(configs[0]), json_io::to_json(c));
  const auto again = run_experiment(configs[0], 2);
  for (std::size_t i = 0; i < r.cells.size(); ++i) EXPECT_EQ(again.cells[i].replicates, r.cells[i].replicates);

  const auto fits = rate_fits_from_dir(dir);
  ASSERT_EQ(fits.size(), 1u);
  const auto direct = rate_check(r, "ols_diff", 1);
  EXPECT_EQ(fits[0].estimator, "ols_diff");
  EXPECT_NEAR(fits[0].gamma_hat, direct.gamma_hat, 1e-12);
}

TEST(RateFit, SlopeOfExactPowerLaw) {
  std::vector<double> n = {100, 400, 900, 1600}, sd;
  for (double v : n) sd.push_back(3.0 * std::pow(v, -0.35));
  const auto f = fit_rate(n, sd, 2.0, 0.8, 2);
  EXPECT_NEAR(f.gamma_hat, -0.35, 1e-12);
  EXPECT_DOUBLE_EQ(f.gamma, -0.2);
  EXPECT_NEAR(f.gap, -0.15, 1e-12);
  EXPECT_THROW(fit_rate({1, 2, 3}, {1, 1, 1}, 1, 1, 1), ConfigError);
}

TEST(RateColumn, PrefersLaplacian) {
  ExperimentConfig c = small_config();
  EXPECT_EQ(rate_column(c)->first, "ols_diff");
  EXPECT_EQ(rate_column(c)->second, 1);
  c = preset("2d-row1");
  EXPECT_EQ(rate_column(c)->first, "ols_lap");
  c.estimators = {EstimatorSpec{"ols", 0, 0, {}}};
  EXPECT_FALSE(rate_column(c).has_value());
}

TEST(Presets, TableValues) {
  const auto c = preset("2d-row1");
  const auto& p = c.model.at("params");
  EXPECT_DOUBLE_EQ(p.at("x").at("nu").get<double>(), 1.0);
  EXPECT_NEAR(p.at("w").at("nu").get<double>(), 0.4, 1e-12);
  EXPECT_DOUBLE_EQ(p.at("nu_xw").get<double>(), 1.25);
  EXPECT_DOUBLE_EQ(p.at("rho_xw").get<double>(), 0.204);
  EXPECT_EQ(c.design.kind, DesignKind::grid2d);

  for (const auto& m : preset_suite("1d-main")) EXPECT_EQ(m.sizes, (std::vector<int>{100, 500, 1000, 2000}));
  EXPECT_EQ(preset_suite("1d-main").size(), 8u);

  const auto irr = preset("irregular");
  const auto& q = irr.model.at("params");
  EXPECT_DOUBLE_EQ(q.at("x").at("nu").get<double>(), 1.5);
  EXPECT_DOUBLE_EQ(q.at("w").at("nu").get<double>(), 2.0);
  EXPECT_DOUBLE_EQ(q.at("nu_xw").get<double>(), 1.75);
  EXPECT_DOUBLE_EQ(q.at("x").at("rho").get<double>(), 0.2);
  EXPECT_EQ(irr.beta, std::vector<double>{2.0});
  EXPECT_EQ(irr.design.kind, DesignKind::irregular1d);
}

TEST(Presets, EveryNameParsesAndRoundTrips) {
  for (const auto& name : preset_names())
    for (const auto& c : preset_suite(name)) {
      const auto j = json_io::to_json(c);
      EXPECT_EQ(json_io::to_json(json_io::experiment_from_json(j)), j) << name;
      EXPECT_NO_THROW(output_columns(c)) << name;
    }
  EXPECT_THROW(preset("no-such-preset"), ConfigError);
}

TEST(Presets, DistinctSeedsPerScenario) {
  std::set<std::uint64_t> seeds;
  std::size_t n = 0;
  for (const auto& c : preset_suite("1d-main")) {
    seeds.insert(c.base_seed);
    ++n;
  }
  EXPECT_EQ(seeds.size(), n);
}
