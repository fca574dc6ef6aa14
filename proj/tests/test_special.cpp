#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include "confound/covmodels.hpp"
#include "confound/special.hpp"

using namespace confound;

namespace {

// Half-integer Matern closed forms in t = sqrt(2 nu) h / rho.
double matern_half_integer(double nu, double t) {
  if (nu == 0.5) return std::exp(-t);
  if (nu == 1.5) return (1.0 + t) * std::exp(-t);
  if (nu == 2.5) return (1.0 + t + t * t / 3.0) * std::exp(-t);
  if (nu == 3.5) return (1.0 + t + 0.4 * t * t + t * t * t / 15.0) * std::exp(-t);
  return NAN;
}

}  // namespace

TEST(BesselK, MatchesBoostOverOrdersAndArguments) {
  for (double nu : {0.0, 0.1, 0.25, 0.5, 0.7, 0.95, 1.0, 1.2, 1.5, 2.0, 2.6, 3.75, 5.3}) {
    for (double x : {1e-6, 1e-3, 0.05, 0.5, 1.0, 1.9, 2.0, 2.1, 5.0, 12.0, 40.0, 300.0}) {
      const double ref = boost::math::cyl_bessel_k(nu, x);
      const double got = special::bessel_k(nu, x);
      EXPECT_NEAR(got / ref, 1.0, 1e-12) << "nu=" << nu << " x=" << x;
    }
  }
}

TEST(BesselK, ScaledVariantDoesNotUnderflow) {
  const double v = special::bessel_k_scaled(1.3, 900.0);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, std::sqrt(std::numbers::pi / (2.0 * 900.0)), 1e-3 * v);
}

TEST(MaternCov, HalfIntegerClosedForms) {
  for (double nu : {0.5, 1.5, 2.5, 3.5}) {
    for (double rho : {0.2, 1.0, 3.0}) {
      for (double h : {0.0, 1e-8, 1e-4, 0.01, 0.1, 0.5, 1.0, 2.0, 7.5, 30.0}) {
        const MaternParams p{1.7, rho, nu};
        const double t = std::sqrt(2.0 * nu) * h / rho;
        EXPECT_NEAR(matern_cov(h, p), 1.7 * matern_half_integer(nu, t), 1e-10)
            << "nu=" << nu << " rho=" << rho << " h=" << h;
      }
    }
  }
}

TEST(MaternCov, Examples) {
  EXPECT_DOUBLE_EQ(matern_cov(0.0, {1.0, 1.0, 0.5}), 1.0);
  EXPECT_NEAR(matern_cov(1.0, {1.0, 1.0, 0.5}), std::exp(-1.0), 1e-12);
  const double s3 = std::sqrt(3.0);
  EXPECT_NEAR(matern_cov(1.0, {1.0, 1.0, 1.5}), (1.0 + s3) * std::exp(-s3), 1e-10);
  EXPECT_NEAR(matern_cov(1.0, {1.0, 1.0, 1.5}), 0.4833577245965, 1e-12);
}

TEST(MaternCov, RejectsBadLag) {
  EXPECT_THROW(matern_cov(-1.0, {1.0, 1.0, 0.5}), ConfigError);
  EXPECT_THROW(matern_cov(NAN, {1.0, 1.0, 0.5}), ConfigError);
}

TEST(MaternSpectral, TailOrder) {
  for (int d : {1, 2}) {
    for (double nu : {0.5, 1.2, 2.0}) {
      const MaternParams p{1.0, 0.4, nu};
      const double w = 1e3 / p.rho;
      const double ratio = matern_spectral(2.0 * w, p, d) / matern_spectral(w, p, d);
      EXPECT_NEAR(ratio / std::pow(2.0, -2.0 * nu - d), 1.0, 0.01);
    }
  }
}

TEST(MaternSpectral, ExponentialMatchesFourierTransform) {
  // f(w) = (1 / pi) int_0^inf C(h) cos(w h) dh for d = 1.
  const MaternParams p{1.3, 0.6, 0.5};
  for (double w : {0.0, 0.5, 2.0, 7.0}) {
    auto f = [&](double h) { return matern_cov(h, p) * std::cos(w * h); };
    const double num =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 60.0 * p.rho, 20, 1e-13) /
        std::numbers::pi;
    EXPECT_NEAR(matern_spectral(w, p, 1), num, 1e-8) << "w=" << w;
  }
}

TEST(MaternSpectral, IntegratesToVariance) {
  boost::math::quadrature::exp_sinh<double> q;
  for (int d : {1, 2}) {
    for (double nu : {0.5, 0.8, 1.5}) {
      const MaternParams p{2.2, 0.7, nu};
      const double surface = d == 1 ? 2.0 : 2.0 * std::numbers::pi;
      auto f = [&](double r) { return surface * std::pow(r, d - 1) * matern_spectral(r, p, d); };
      const double total = q.integrate(f, 0.0, std::numeric_limits<double>::infinity());
      EXPECT_NEAR(total, p.sigma2, 1e-6) << "d=" << d << " nu=" << nu;
    }
  }
}

TEST(Quantiles, InverseGammaAndExponential) {
  // P(V <= q) recovered through the gamma CDF of 1/V.
  const double q = special::inverse_gamma_quantile(2.5, 2.5, 0.3);
  EXPECT_NEAR(boost::math::gamma_q(2.5, 2.5 / q), 0.3, 1e-12);
  EXPECT_NEAR(special::exponential_quantile(2.0, 1.0 - std::exp(-1.0)), 0.5, 1e-14);
  EXPECT_THROW(special::exponential_quantile(1.0, 1.0), ConfigError);
}
