#ifndef CONFOUND_SPECIAL_HPP
#define CONFOUND_SPECIAL_HPP

// Special functions used by the covariance families.
//
// The modified Bessel function of the second kind K_nu(x) is evaluated for
// arbitrary real order nu >= 0 by Temme's method: the order is split as
// nu = mu + n with |mu| <= 1/2, K_mu and K_{mu+1} are obtained from a power
// series (x <= 2) or Steed's continued fraction (x > 2), and the result is
// carried to order nu by forward recurrence, which is stable for K.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include <boost/math/special_functions/gamma.hpp>

#include "confound/error.hpp"

namespace confound::special {

namespace detail {

// Taylor coefficients of 1/Gamma(1+x) about 0, odd powers only.
inline constexpr std::array<double, 11> kRecipGammaOdd = {
    0.57721566490153286061,    -0.042002635034095235529,  -0.042197734555544336748,
    0.0072189432466630995424,  -0.00021524167411495097282, -0.000020134854780788238656,
    1.1330272319816958824e-6,  6.1160951044814158179e-9,  -1.1812745704870201446e-9,
    7.782263439905071254e-12,  5.100370287454475979e-13};

// gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2,
// plus the two reciprocals themselves.
struct TemmeGammas {
  double gam1;
  double gam2;
  double gampl;  // 1/Gamma(1+mu)
  double gammi;  // 1/Gamma(1-mu)
};

inline TemmeGammas temme_gammas(double mu) {
  TemmeGammas g{};
  g.gampl = 1.0 / std::tgamma(1.0 + mu);
  g.gammi = 1.0 / std::tgamma(1.0 - mu);
  const double mu2 = mu * mu;
  double sum = 0.0;
  double pw = 1.0;
  for (double c : kRecipGammaOdd) {
    sum += c * pw;
    pw *= mu2;
  }
  g.gam1 = -sum;
  g.gam2 = 0.5 * (g.gammi + g.gampl);
  return g;
}

// K_mu(x) and K_{mu+1}(x) for |mu| <= 1/2. When `scaled` the pair is
// multiplied by exp(x).
inline std::pair<double, double> bessel_k_pair(double mu, double x, bool scaled) {
  constexpr double eps = 1e-17;
  constexpr int max_iter = 100000;
  const double pi = std::numbers::pi;
  const double mu2 = mu * mu;
  const double xi = 1.0 / x;

  if (x <= 2.0) {
    const double x2 = 0.5 * x;
    const double pimu = pi * mu;
    const double fact = (std::abs(pimu) < 1e-300) ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = (std::abs(e) < 1e-300) ? 1.0 : std::sinh(e) / e;
    const TemmeGammas g = temme_gammas(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    int i = 1;
    for (; i <= max_iter; ++i) {
      const double di = static_cast<double>(i);
      ff = (di * ff + p + q) / (di * di - mu2);
      c *= d / di;
      p /= (di - mu);
      q /= (di + mu);
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - di * ff);
      if (std::abs(del) < std::abs(sum) * eps) break;
    }
    if (i > max_iter) throw NumericalError("bessel_k: series did not converge");
    double kmu = sum;
    double k1 = sum1 * 2.0 * xi;
    if (scaled) {
      const double ex = std::exp(x);
      kmu *= ex;
      k1 *= ex;
    }
    return {kmu, k1};
  }

  // Steed's continued fraction (CF2) with Temme's normalisation.
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu2;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  int i = 1;
  for (; i <= max_iter; ++i) {
    const double di = static_cast<double>(i);
    a -= 2.0 * di;
    c = -a * c / (di + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < eps) break;
  }
  if (i > max_iter) throw NumericalError("bessel_k: continued fraction did not converge");
  h = a1 * h;
  double kmu = std::sqrt(pi / (2.0 * x)) / s;
  if (!scaled) kmu *= std::exp(-x);
  const double k1 = kmu * (mu + x + 0.5 - h) * xi;
  return {kmu, k1};
}

inline double bessel_k_impl(double nu, double x, bool scaled) {
  if (!std::isfinite(nu) || !std::isfinite(x)) throw ConfigError("bessel_k: nonfinite input");
  if (x <= 0.0) throw ConfigError("bessel_k: argument must be positive");
  nu = std::abs(nu);  // K_{-nu} = K_nu
  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;
  auto [kmu, k1] = bessel_k_pair(mu, x, scaled);
  const double xi2 = 2.0 / x;
  for (int i = 1; i <= nl; ++i) {
    const double next = (mu + i) * xi2 * k1 + kmu;
    kmu = k1;
    k1 = next;
  }
  return kmu;
}

}  // namespace detail

/// Modified Bessel function of the second kind, K_nu(x), x > 0.
inline double bessel_k(double nu, double x) { return detail::bessel_k_impl(nu, x, false); }

/// exp(x) * K_nu(x); finite for large x where K_nu underflows.
inline double bessel_k_scaled(double nu, double x) { return detail::bessel_k_impl(nu, x, true); }

/// Unit-variance Matern correlation in terms of the scaled lag t = sqrt(2 nu) h / rho:
///   2^{1-nu} / Gamma(nu) * t^nu * K_nu(t).
inline double matern_correlation_scaled(double t, double nu) {
  if (t == 0.0) return 1.0;
  if (t <= 2.0) {
    return std::exp((1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) + nu * std::log(t)) *
           bessel_k(nu, t);
  }
  const double lk = std::log(bessel_k_scaled(nu, t));
  return std::exp((1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) + nu * std::log(t) + lk - t);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Quantile of Inv-Gamma(shape, scale): if V ~ Inv-Gamma(a, b) then
/// P(V <= v) = Q(a, b / v) with Q the regularised upper incomplete gamma.
inline double inverse_gamma_quantile(double shape, double scale, double u) {
  if (!(u > 0.0 && u < 1.0)) throw ConfigError("inverse_gamma_quantile: u must lie in (0,1)");
  return scale / boost::math::gamma_q_inv(shape, u);
}

/// Quantile of Exp(rate).
inline double exponential_quantile(double rate, double u) {
  if (!(u > 0.0 && u < 1.0)) throw ConfigError("exponential_quantile: u must lie in (0,1)");
  return -std::log1p(-u) / rate;
}

}  // namespace confound::special

#endif
