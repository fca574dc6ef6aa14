#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "confound/design.hpp"
#include "confound/operators.hpp"

using namespace confound;

namespace {

std::vector<double> sample_fn(int n, double h, double (*f)(double)) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = f(i * h);
  return v;
}

std::vector<double> random_sites(int n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.2, 1.8);
  std::vector<double> s(static_cast<std::size_t>(n));
  double x = 0.0;
  for (auto& v : s) {
    v = x;
    x += u(g) / n;
  }
  return s;
}

}  // namespace

TEST(Diff, AnnihilatesPolynomials) {
  for (double h : {1.0, 0.1, 1.0 / 64.0}) {
    for (double v : diff(std::vector<double>(20, 3.7), {1, h})) EXPECT_EQ(v, 0.0);
    for (double v : diff(sample_fn(20, h, [](double s) { return s; }), {1, h})) EXPECT_NEAR(v, 1.0, 1e-12);
    for (double v : diff(sample_fn(20, h, [](double s) { return s * s; }), {2, h})) EXPECT_NEAR(v, 2.0, 1e-9);
    for (double v : diff(sample_fn(20, h, [](double s) { return 1.0 - 4.0 * s + s * s; }), {3, h}))
      EXPECT_NEAR(v, 0.0, 1e-6);
  }
}

TEST(Diff, ShapesAndErrors) {
  const std::vector<double> v = {1.0, 4.0, 9.0, 16.0};
  EXPECT_EQ(diff(v, {0, 1.0}), v);
  EXPECT_EQ(diff(v, {1, 1.0}), (std::vector<double>{3.0, 5.0, 7.0}));
  EXPECT_EQ(diff(v, {3, 1.0}).size(), 1u);
  EXPECT_THROW(diff(v, {4, 1.0}), ConfigError);
  EXPECT_THROW(diff(v, {-1, 1.0}), ConfigError);
  EXPECT_THROW(diff(v, {1, 0.0}), ConfigError);
}

TEST(Laplacian1d, EqualsSecondDifference) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> nd;
  std::vector<double> v(57);
  for (auto& x : v) x = nd(g);
  for (int m : {1, 2, 3}) {
    const auto a = laplacian_1d(v, m, 0.05);
    const auto b = diff(v, {2 * m, 0.05});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  }
}

TEST(Laplacian2d, QuadraticAndAffineFields) {
  const int side = 9;
  const double h = 0.125;
  std::vector<double> quad, aff;
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      const double x = i * h, y = j * h;
      quad.push_back(x * x + y * y);
      aff.push_back(2.0 - 3.0 * x + 0.5 * y);
    }
  const auto lq = laplacian_2d(quad, side, 1, h);
  ASSERT_EQ(lq.size(), 49u);
  for (double v : lq) EXPECT_NEAR(v, 4.0, 1e-12);
  for (double v : laplacian_2d(aff, side, 1, h)) EXPECT_NEAR(v, 0.0, 1e-12);
  // Second order: the Laplacian of a constant 4 is 0, and (side - 4)^2 values remain.
  const auto l2 = laplacian_2d(quad, side, 2, h);
  ASSERT_EQ(l2.size(), 25u);
  for (double v : l2) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Laplacian2d, Errors) {
  std::vector<double> v(9, 1.0);
  EXPECT_THROW(laplacian_2d(v, 3, 2, 1.0), ConfigError);
  EXPECT_THROW(laplacian_2d(v, 4, 1, 1.0), ConfigError);
  EXPECT_THROW(laplacian(v, LapSpec{1, 1.0, 3}, 3), ConfigError);
}

TEST(SpacingWeighted, AnnihilatesLinearAndRecoversCurvature) {
  const auto s = random_sites(200, 8);
  std::vector<double> lin, quad;
  for (double x : s) {
    lin.push_back(0.7 - 2.5 * x);
    quad.push_back(x * x);
  }
  for (double v : spacing_weighted_second_op(lin, s)) EXPECT_NEAR(v, 0.0, 1e-8);
  for (double v : spacing_weighted_second_op(quad, s)) EXPECT_NEAR(v, 2.0, 1e-8);
  for (double v : spacing_weighted_first_op(lin, s)) EXPECT_NEAR(v, -2.5, 1e-10);
}

TEST(SpacingWeighted, EqualSpacingMatchesDiff) {
  const double h = 0.01;
  std::vector<double> s, v;
  std::mt19937_64 g(1);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 40; ++i) {
    s.push_back(i * h);
    v.push_back(nd(g));
  }
  const auto a = spacing_weighted_second_op(v, s);
  const auto b = diff(v, {2, h});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9 * std::abs(b[i]) + 1e-9);
}

TEST(ClusterMeans, AveragesEachCluster) {
  DesignSpec sp;
  sp.kind = DesignKind::nested1d;
  sp.n = 6;
  sp.half_width = 2;
  const Design d = make_design(sp);
  std::vector<double> v(d.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto m = cluster_means(v, d);
  ASSERT_EQ(m.size(), 7u);
  for (std::size_t c = 0; c < m.size(); ++c) EXPECT_DOUBLE_EQ(m[c], 5.0 * c + 2.0);
  EXPECT_THROW(cluster_means(std::vector<double>(5, 0.0), d), ConfigError);
}
