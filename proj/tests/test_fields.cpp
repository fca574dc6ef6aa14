#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "confound/design.hpp"
#include "confound/fields.hpp"
#include "confound/model_json.hpp"
#include "confound/presets.hpp"

using namespace confound;

namespace {

CovarianceModel biv(double nu_x, double nu_w, double nu_xw, double rho, double range = 0.5) {
  return CovarianceModel(bivariate_matern({1.0, range, nu_x}, {1.0, range, nu_w}, nu_xw, rho));
}

Design grid(int n) {
  DesignSpec s;
  s.n = n;
  return make_design(s);
}

bool same_bytes(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(Design, Grid1d) {
  const Design d = grid(4);
  ASSERT_EQ(d.size(), 5u);
  const double want[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(d.sites[i].x, want[i]);
  EXPECT_DOUBLE_EQ(d.h, 0.25);
}

TEST(Design, Grid2d) {
  DesignSpec s;
  s.kind = DesignKind::grid2d;
  s.n = 2;
  const Design d = make_design(s);
  EXPECT_EQ(d.size(), 9u);
  EXPECT_EQ(d.side, 3);
  EXPECT_DOUBLE_EQ(d.sites[5].x, 0.5);  // row-major: (i = 1, j = 2)
  EXPECT_DOUBLE_EQ(d.sites[5].y, 1.0);
}

TEST(Design, NestedCounts) {
  DesignSpec s;
  s.kind = DesignKind::nested1d;
  s.n = 50;
  s.rho = 0.3;
  const Design d = make_design(s);
  const int k = static_cast<int>(std::ceil(std::pow(50.0, 0.3)));
  EXPECT_EQ(d.size(), static_cast<std::size_t>(51 * (2 * k + 1)));
  for (int n : {50, 100, 200})
    for (double rho : {0.2, 0.3, 0.4, 0.5}) {
      s.n = n;
      s.rho = rho;
      EXPECT_EQ(make_design(s).size(), nested_site_count(n, rho)) << n << " " << rho;
    }
  // ceil of an exact power must not round up.
  EXPECT_EQ(nested_half_width(100, 0.5), 10);
}

TEST(Design, NestedSitesAreOrderedClusters) {
  DesignSpec s;
  s.kind = DesignKind::nested1d;
  s.n = 20;
  s.rho = 0.5;
  const Design d = make_design(s);
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_LT(d.sites[i - 1].x, d.sites[i].x);
  const std::size_t w = static_cast<std::size_t>(2 * d.half_width + 1);
  EXPECT_DOUBLE_EQ(d.sites[3 * w + d.half_width].x, 3.0 / 20.0);
}

TEST(Design, IrregularSpacingBounds) {
  DesignSpec s;
  s.kind = DesignKind::irregular1d;
  s.n = 500;
  s.seed = 99;
  const Design d = make_design(s);
  ASSERT_EQ(d.size(), 500u);
  ASSERT_EQ(d.spacings.size(), 499u);
  ASSERT_EQ(d.midpoints.size(), 498u);
  for (double h : d.spacings) {
    EXPECT_GE(h * s.n, d.m_lo - 1e-12);
    EXPECT_LE(h * s.n, d.m_hi + 1e-12);
    EXPECT_GT(h, 0.0);
  }
  const Design again = make_design(s);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d.sites[i].x, again.sites[i].x);
  s.seed = 100;
  const Design other = make_design(s);
  bool differs = false;
  for (std::size_t i = 0; i < d.size(); ++i) differs = differs || d.sites[i].x != other.sites[i].x;
  EXPECT_TRUE(differs);
}

TEST(Design, RejectsDegenerateSizes) {
  DesignSpec s;
  s.n = 3;
  EXPECT_THROW(make_design(s), ConfigError);
  s.kind = DesignKind::nested1d;
  s.n = 50;
  s.rho = 1.2;
  EXPECT_THROW(make_design(s), ConfigError);
}

TEST(Joint, MatchesDirectEvaluationOnEveryDesignKind) {
  std::vector<std::pair<CovarianceModel, DesignSpec>> cases;
  DesignSpec g1;
  g1.n = 9;
  DesignSpec g2;
  g2.kind = DesignKind::grid2d;
  g2.n = 3;
  DesignSpec ir;
  ir.kind = DesignKind::irregular1d;
  ir.n = 12;
  ir.seed = 5;
  DesignSpec ne;
  ne.kind = DesignKind::nested1d;
  ne.n = 4;
  ne.rho = 0.5;
  for (const auto& spec : {g1, g2, ir, ne}) cases.push_back({biv(0.7, 1.1, 1.0, 0.4), spec});
  for (const auto& p : model_presets())
    if (p.dim == 1) cases.push_back({json_io::model_from_json(p.model), g1});
  for (const auto& [m, spec] : cases) {
    const Design d = make_design(spec);
    const JointCovariance j = assemble_joint(m, d);
    const Eigen::MatrixXd a = j.matrix();
    const std::size_t N = d.size();
    for (int k = 0; k < m.num_vars(); ++k)
      for (int l = 0; l < m.num_vars(); ++l)
        for (std::size_t i = 0; i < N; ++i)
          for (std::size_t t = 0; t < N; ++t)
            ASSERT_NEAR(a(k * N + i, l * N + t), m(k, l, d.sites[i], d.sites[t]), 1e-14)
                << m.family() << " " << to_string(d.kind);
  }
}

TEST(Joint, DiagonalBlocksAtLagZeroAndZeroCross) {
  const CovarianceModel m(bivariate_matern({2.0, 0.5, 0.7}, {0.5, 0.5, 1.0}, 0.95, 0.0));
  const Design d = grid(10);
  const Eigen::MatrixXd a = assemble_joint(m, d).matrix();
  const Eigen::Index N = static_cast<Eigen::Index>(d.size());
  for (Eigen::Index i = 0; i < N; ++i) {
    EXPECT_EQ(a(i, i), 2.0);
    EXPECT_EQ(a(N + i, N + i), 0.5);
  }
  EXPECT_EQ(a.topRightCorner(N, N).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Joint, FactorReproducesMatrix) {
  const CovarianceModel m = biv(0.7, 1.0, 0.95, 0.5);
  const Design d = grid(40);
  const JointCovariance j = assemble_joint(m, d);
  const Eigen::MatrixXd l = j.factor_dense();
  const Eigen::MatrixXd a = j.matrix();
  const double dmax = a.diagonal().maxCoeff();
  EXPECT_LE(j.jitter_used(), 1e-8 * dmax);
  const Eigen::MatrixXd r = l * l.transpose() - a -
                            j.jitter_used() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Joint, ExponentialBlockInverseIsTridiagonal) {
  // Three sites, correlation r^{|i-j|}: inverse is Q / (1 - r^2).
  const double rho = 0.5;
  const CovarianceModel m(bivariate_matern({1.0, rho, 0.5}, {1.0, rho, 0.5}, 0.5, 0.0));
  DesignSpec s;
  s.n = 4;
  s.L = 1.0;
  const Design d5 = make_design(s);
  Design d = d5;
  d.sites.resize(3);
  d.keys.resize(3);
  const Eigen::MatrixXd a = assemble_joint(m, d).matrix().topLeftCorner(3, 3);
  const double r = std::exp(-d.h / rho);
  Eigen::Matrix3d q;
  q << 1.0, -r, 0.0, -r, 1.0 + r * r, -r, 0.0, -r, 1.0;
  q /= (1.0 - r * r);
  EXPECT_LT((a.inverse() - q).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Joint, InvalidCrossParameterisationIsRejected) {
  // Cross smoothness below both marginals with full correlation is not a valid model.
  const CovarianceModel m = biv(1.5, 1.5, 0.3, 1.0, 0.3);
  EXPECT_THROW(assemble_joint(m, grid(60)), NumericalError);
}

TEST(Sample, StructuralIdentityAndChannels) {
  const CovarianceModel m = biv(0.7, 1.0, 0.95, 0.5);
  const Design d = grid(200);
  const FieldSample s = sample_fields(m, d, {2.0}, 17);
  double ymax = 0.0, err = 0.0;
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    ymax = std::max(ymax, std::abs(s.y[i]));
    err = std::max(err, std::abs(s.y[i] - (2.0 * s.x[i] + s.w[i])));
  }
  EXPECT_LE(err, 1e-12 * ymax);
  EXPECT_TRUE(s.x_noisy.empty());
  EXPECT_EQ(s.seed, 17u);

  const FieldSample z = sample_fields(m, d, {0.0}, 17);
  EXPECT_TRUE(same_bytes(z.y, z.w));
}

TEST(Sample, ZeroNoiseEqualsCleanChannels) {
  const CovarianceModel m = biv(0.7, 1.0, 0.95, 0.5);
  SampleOptions o;
  o.noise.tau2_x = 0.0;
  o.noise.tau2_y = 0.0;
  const FieldSample s = sample_fields(m, grid(50), {2.0}, 3, o);
  EXPECT_TRUE(same_bytes(s.x_noisy, s.x));
  EXPECT_TRUE(same_bytes(s.y_noisy, s.y));
}

TEST(Sample, NoiseDoesNotPerturbTheFieldStream) {
  const CovarianceModel m = biv(0.7, 1.0, 0.95, 0.5);
  SampleOptions o;
  o.noise.tau2_y = 1.0;
  const FieldSample clean = sample_fields(m, grid(50), {2.0}, 3);
  const FieldSample noisy = sample_fields(m, grid(50), {2.0}, 3, o);
  EXPECT_TRUE(same_bytes(clean.x, noisy.x));
  EXPECT_TRUE(same_bytes(clean.y, noisy.y));
  EXPECT_FALSE(same_bytes(noisy.y_noisy, noisy.y));
}

TEST(Sample, SeedDeterminism) {
  const CovarianceModel m = biv(0.7, 1.0, 0.95, 0.5);
  const auto d = std::make_shared<const Design>(grid(100));
  const Sampler a(m, d), b(m, d);
  const auto s1 = a.draw({2.0}, {5, 6, 7});
  const auto s2 = b.draw({2.0}, {7});
  EXPECT_TRUE(same_bytes(s1[2].x, s2[0].x));
  EXPECT_TRUE(same_bytes(s1[2].w, s2[0].w));
  EXPECT_FALSE(same_bytes(s1[0].x, s1[1].x));
}

TEST(Sample, TwoExposures) {
  const CovarianceModel m = json_io::model_from_json(presets_detail::trivariate_model_json());
  const FieldSample s = sample_fields(m, grid(100), {1.5, -0.5}, 9);
  ASSERT_TRUE(s.has_x2());
  for (std::size_t i = 0; i < s.y.size(); ++i)
    EXPECT_NEAR(s.y[i], 1.5 * s.x[i] - 0.5 * s.x2[i] + s.w[i], 1e-12);
  EXPECT_THROW(sample_fields(m, grid(100), {1.5}, 9), ConfigError);
}

TEST(Sample, HeavyTailScalesArePositiveAndStructuralIdentityHolds) {
  const CovarianceModel m = biv(0.7, 1.0, 0.95, 0.5);
  SampleOptions o;
  o.heavy_tail.enabled = true;
  const FieldSample s = sample_fields(m, grid(300), {2.0}, 4, o);
  const FieldSample g = sample_fields(m, grid(300), {2.0}, 4);
  bool differs = false;
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    EXPECT_NEAR(s.y[i], 2.0 * s.x[i] + s.w[i], 1e-12 * (1.0 + std::abs(s.y[i])));
    // Same Gaussian draw, positive multiplicative scale: signs agree.
    EXPECT_EQ(std::signbit(s.x[i]), std::signbit(g.x[i]));
    differs = differs || s.x[i] != g.x[i];
  }
  EXPECT_TRUE(differs);
}

TEST(Sample, HeavyTailMarginalIsHeavierThanGaussian) {
  // Pooled kurtosis of X across replicates exceeds the Gaussian value 3.
  const CovarianceModel m = biv(0.7, 1.0, 0.95, 0.5);
  SampleOptions o;
  o.heavy_tail.enabled = true;
  const auto d = std::make_shared<const Design>(grid(50));
  const Sampler sm(m, d, o);
  std::vector<std::uint64_t> seeds(400);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = 1000 + i;
  double m2 = 0.0, m4 = 0.0;
  std::size_t n = 0;
  for (const auto& s : sm.draw({2.0}, seeds)) {
    const double v = s.x[25];
    m2 += v * v;
    m4 += v * v * v * v;
    ++n;
  }
  m2 /= n;
  m4 /= n;
  EXPECT_GT(m4 / (m2 * m2), 3.5);
}

TEST(CovCheck, BivariateMaternWithinFourStandardErrors) {
  const CovarianceModel m = biv(0.7, 1.0, 0.95, 0.5);
  const CovCheckResult r = empirical_cov_check(m, grid(15), 200000, 2024);
  EXPECT_EQ(r.entries, 32u * 33u / 2u);
  EXPECT_LE(r.max_z, 4.0);
  EXPECT_LT(r.max_abs_dev, 0.02);
}

TEST(CovCheck, ZeroCrossCorrelationCentred) {
  const CovarianceModel m = biv(0.7, 1.0, 0.95, 0.0);
  const CovCheckResult r = empirical_cov_check(m, grid(15), 50000, 11);
  EXPECT_LE(r.max_z, 4.5);
  EXPECT_LT(r.max_cross_abs, 5.0 / std::sqrt(50000.0));
}

TEST(CovCheck, RejectsLargeDesigns) {
  EXPECT_THROW(empirical_cov_check(biv(0.7, 1.0, 0.95, 0.5), grid(80), 10, 1), ConfigError);
}
