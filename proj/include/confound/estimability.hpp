#ifndef CONFOUND_ESTIMABILITY_HPP
#define CONFOUND_ESTIMABILITY_HPP

// Decision rules for consistent estimability of the slope.
//
// With principal-irregular-term exponents alpha_X (exposure), alpha_W
// (confounder) and alpha_XW (cross block) on R^d:
//   alpha_X > alpha_W + d          -> not estimable
//   alpha_X = alpha_W + d          -> boundary (no claim)
//   alpha_XW <= alpha_X            -> cross smoothness condition violated
//   otherwise                      -> estimable with the minimal operator order
// For Matern fields alpha = 2 nu, so the first rule reads nu_X > nu_W + d/2.

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "confound/covmodels.hpp"
#include "confound/design.hpp"
#include "confound/error.hpp"
#include "confound/estimators.hpp"
#include "confound/fields.hpp"

namespace confound {

enum class RegionStatus { estimable, not_estimable, boundary, cross_smoothness_violated };

inline std::string to_string(RegionStatus s) {
  switch (s) {
    case RegionStatus::estimable:
      return "Estimable";
    case RegionStatus::not_estimable:
      return "NotEstimable";
    case RegionStatus::boundary:
      return "Boundary";
    case RegionStatus::cross_smoothness_violated:
      return "CrossSmoothnessViolated";
  }
  return "?";
}

/// Integer code used in region rasters.
inline int region_code(RegionStatus s) {
  switch (s) {
    case RegionStatus::estimable:
      return 1;
    case RegionStatus::not_estimable:
      return 0;
    case RegionStatus::boundary:
      return 2;
    case RegionStatus::cross_smoothness_violated:
      return 3;
  }
  return -1;
}

struct RegionVerdict {
  RegionStatus status = RegionStatus::not_estimable;
  int d = 1;
  int min_order = 0;  // p (d = 1) or m (d = 2); 0 unless estimable
  std::string rationale;
  bool outside_theory = false;        // analytic component (exponent 2)
  bool integrability_caveat = false;  // generalised Cauchy with delta kappa <= d
};

inline constexpr double kBoundaryTol = 1e-12;

/// Minimal difference order for d = 1 or Laplacian order for d = 2.
inline int order_for_alpha(double alpha, int d) { return minimal_order(alpha, d); }

/// Classification from exponents.
inline RegionVerdict exponent_region(double alpha_x, double alpha_w, double alpha_xw, int d) {
  detail::require(d == 1 || d == 2, "region: d must be 1 or 2");
  detail::require(alpha_x > 0.0 && alpha_w > 0.0 && alpha_xw > 0.0,
                  "region: exponents must be positive");
  RegionVerdict v;
  v.d = d;
  std::ostringstream why;
  const double gap = alpha_x - (alpha_w + d);
  if (gap > kBoundaryTol) {
    v.status = RegionStatus::not_estimable;
    why << "alpha_X = " << alpha_x << " > alpha_W + d = " << alpha_w + d;
  } else if (std::abs(gap) <= kBoundaryTol) {
    v.status = RegionStatus::boundary;
    why << "alpha_X = alpha_W + d = " << alpha_x;
  } else if (alpha_xw <= alpha_x) {
    v.status = RegionStatus::cross_smoothness_violated;
    why << "alpha_XW = " << alpha_xw << " <= alpha_X = " << alpha_x;
  } else {
    v.status = RegionStatus::estimable;
    v.min_order = order_for_alpha(alpha_x, d);
    why << "alpha_X = " << alpha_x << " < alpha_W + d = " << alpha_w + d << " and alpha_XW > alpha_X; "
        << (d == 1 ? "p = " : "m = ") << v.min_order;
  }
  v.rationale = why.str();
  return v;
}

inline RegionVerdict matern_region(double nu_x, double nu_w, double nu_xw, int d) {
  detail::require(nu_x > 0.0 && nu_w > 0.0 && nu_xw > 0.0, "matern_region: smoothness must be positive");
  RegionVerdict v = exponent_region(2.0 * nu_x, 2.0 * nu_w, 2.0 * nu_xw, d);
  return v;
}

/// Region for any bivariate model whose blocks expose their exponents
/// (power exponential, generalised Cauchy, LMC, Matern, and the warped and
/// Paciorek wrappers of those).
inline RegionVerdict family_region(const CovarianceModel& m, int d) {
  detail::require(m.num_vars() == 2, "family_region: bivariate model required");
  const PitDescriptor px = m.pit(0, 0);
  const PitDescriptor pw = m.pit(1, 1);
  const PitDescriptor pc = m.pit(0, 1);
  RegionVerdict v = exponent_region(px.alpha, pw.alpha, pc.alpha, d);
  v.outside_theory = px.outside_theory || pw.outside_theory;
  if (const auto* gc = std::get_if<BivariateGenCauchy>(&m.rep())) {
    v.integrability_caveat = !gc->x.integrable(d) || !gc->w.integrable(d);
    if (d >= 2 && v.status == RegionStatus::estimable)
      v.rationale += "; exponents below 2 make every d >= 2 case estimable";
  }
  if (v.outside_theory) v.rationale += "; exponent 2 (analytic process) lies outside the theory";
  if (v.integrability_caveat) v.rationale += "; delta * kappa <= d for a marginal";
  return v;
}

// ---------------------------------------------------------------------------
// Spectral tail test

enum class TailVerdict { integral_finite, integral_divergent };

inline std::string to_string(TailVerdict t) {
  return t == TailVerdict::integral_finite ? "integral_finite" : "integral_divergent";
}

struct TailTest {
  double ratio_tail_exponent = 0.0;  // f_X / f_W ~ omega^{-e}
  TailVerdict verdict = TailVerdict::integral_divergent;
  std::vector<double> partial_integrals;  // numeric mode only
};

/// Analytic mode: with f_X ~ w^{-e_X}, f_W ~ w^{-e_W} the radial integrand
/// of f_X / f_W is r^{d - 1 - (e_X - e_W)}, finite iff e_X - e_W > d.
inline TailTest tail_test(double fx_tail_exponent, double fw_tail_exponent, int d) {
  detail::require(d >= 1, "tail_test: d must be positive");
  TailTest t;
  t.ratio_tail_exponent = fx_tail_exponent - fw_tail_exponent;
  t.verdict = t.ratio_tail_exponent > d ? TailVerdict::integral_finite : TailVerdict::integral_divergent;
  return t;
}

inline double matern_tail_exponent(double nu, int d) { return 2.0 * nu + d; }
inline double powexp_tail_exponent(double delta, int d) { return delta + d; }

/// Numeric mode: integrates the radial ratio over [0, 2^k Omega0] for
/// k = 0..8 and calls the integral divergent when each of the last three
/// increments exceeds half of the total before it.
template <class FX, class FW>
TailTest tail_test_numeric(FX fx, FW fw, int d, double omega0) {
  detail::require(omega0 > 0.0, "tail_test: omega0 must be positive");
  const double surface = d == 1 ? 2.0 : (d == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi);
  auto integrand = [&](double r) { return surface * std::pow(r, d - 1) * fx(r) / fw(r); };
  TailTest t;
  double total = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, omega0, 15, 1e-10);
  t.partial_integrals.push_back(total);
  std::vector<double> inc;
  double a = omega0;
  for (int k = 1; k <= 8; ++k) {
    const double b = 2.0 * a;
    const double piece = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, a, b, 15, 1e-10);
    inc.push_back(piece / total);
    total += piece;
    t.partial_integrals.push_back(total);
    a = b;
  }
  const bool div = inc[5] > 0.5 && inc[6] > 0.5 && inc[7] > 0.5;
  t.verdict = div ? TailVerdict::integral_divergent : TailVerdict::integral_finite;
  // Growth rate of the last doubling: total ~ R^g  =>  g = log2(1 + inc)
  t.ratio_tail_exponent = d - std::log2(1.0 + inc[7]);
  return t;
}

inline TailTest matern_tail_test_numeric(const MaternParams& x, const MaternParams& w, int d) {
  const double a = std::max(std::sqrt(2.0 * x.nu) / x.rho, std::sqrt(2.0 * w.nu) / w.rho);
  return tail_test_numeric([&](double r) { return matern_spectral(r, x, d); },
                           [&](double r) { return matern_spectral(r, w, d); }, d, 100.0 * a);
}

// ---------------------------------------------------------------------------
// Exponent estimation from data

enum class AlphaStatus { ok, inconclusive };

struct AlphaEstimate {
  AlphaStatus status = AlphaStatus::inconclusive;
  double alpha_hat = std::numeric_limits<double>::quiet_NaN();
  int order = 0;
  std::vector<double> lags;
  double r2 = std::numeric_limits<double>::quiet_NaN();
  bool smooth_boundary = false;  // some order produced a slope near 2p
};

namespace detail {

inline std::vector<double> binomial_row(int p) {
  std::vector<double> c(static_cast<std::size_t>(p) + 1, 1.0);
  for (int j = 1; j <= p; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] * (p - j + 1) / j;
  for (int j = 1; j <= p; j += 2) c[static_cast<std::size_t>(j)] = -c[static_cast<std::size_t>(j)];
  return c;
}

// Mean squared raw p-th increment at lag k (in grid steps) along lines of
// `len` values starting at `starts` with stride `stride`.
inline double mean_sq_increment(const std::vector<double>& v, const std::vector<std::size_t>& starts,
                                std::size_t len, std::size_t stride, int p, int k) {
  const auto c = binomial_row(p);
  double s = 0.0;
  std::size_t cnt = 0;
  const std::size_t span = static_cast<std::size_t>(p) * static_cast<std::size_t>(k);
  if (len <= span) return std::numeric_limits<double>::quiet_NaN();
  for (std::size_t st : starts)
    for (std::size_t i = 0; i + span < len; ++i) {
      double inc = 0.0;
      for (int j = 0; j <= p; ++j)
        inc += c[static_cast<std::size_t>(j)] * v[st + (i + static_cast<std::size_t>(j * k)) * stride];
      s += inc * inc;
      ++cnt;
    }
  return s / static_cast<double>(cnt);
}

}  // namespace detail

/// Log-log regression of mean squared p-th increments on lags
/// {h, 2h, 4h, 8h}; the order is escalated until the slope falls below
/// 2p - 0.1. On a 2D grid increments along rows and columns are pooled.
inline AlphaEstimate estimate_alpha(const std::vector<double>& values, const Design& d, int max_order = 4) {
  detail::require(d.kind == DesignKind::grid1d || d.kind == DesignKind::grid2d,
                  "estimate_alpha: regular grid required");
  detail::require(values.size() == d.size(), "estimate_alpha: values do not match the design");
  detail::require(values.size() >= 256, "estimate_alpha: need at least 256 grid points");
  detail::require(max_order >= 1, "estimate_alpha: max_order must be >= 1");
  std::vector<std::size_t> starts;
  std::size_t len = values.size(), stride = 1;
  std::vector<std::size_t> col_starts;
  if (d.kind == DesignKind::grid2d) {
    len = static_cast<std::size_t>(d.side);
    for (std::size_t i = 0; i < len; ++i) {
      starts.push_back(i * len);  // rows
      col_starts.push_back(i);    // columns
    }
  } else {
    starts.push_back(0);
  }
  const int ks[4] = {1, 2, 4, 8};
  AlphaEstimate est;
  for (int k : ks) est.lags.push_back(k * d.h);
  for (int p = 1; p <= max_order; ++p) {
    double xs[4], ys[4];
    bool finite = true;
    for (int i = 0; i < 4; ++i) {
      double m = detail::mean_sq_increment(values, starts, len, stride, p, ks[i]);
      if (!col_starts.empty()) m = 0.5 * (m + detail::mean_sq_increment(values, col_starts, len, len, p, ks[i]));
      xs[i] = std::log(ks[i] * d.h);
      ys[i] = std::log(m);
      finite = finite && std::isfinite(ys[i]);
    }
    if (!finite) break;  // increments vanish: no rough component left
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < 4; ++i) {
      mx += xs[i] / 4.0;
      my += ys[i] / 4.0;
    }
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < 4; ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
      syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    if (slope < 2.0 * p - 0.1) {
      est.status = AlphaStatus::ok;
      est.alpha_hat = slope;
      est.order = p;
      est.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
      return est;
    }
    if (std::abs(slope - 2.0 * p) <= 0.1) est.smooth_boundary = true;
  }
  return est;
}

struct Recommendation {
  bool feasible = false;
  std::string estimator;  // ols_diff (d = 1) or ols_lap (d = 2)
  int order = 0;
  double alpha_xx = std::numeric_limits<double>::quiet_NaN();
  double alpha_yy = std::numeric_limits<double>::quiet_NaN();
  int d = 1;
  std::string rationale;
};

/// Infeasible when alpha_YY < alpha_XX - d; otherwise the minimal order
/// for alpha_XX.
inline Recommendation recommend_from_alpha(double alpha_xx, double alpha_yy, int d) {
  detail::require(d == 1 || d == 2, "recommend: d must be 1 or 2");
  Recommendation r;
  r.alpha_xx = alpha_xx;
  r.alpha_yy = alpha_yy;
  r.d = d;
  r.estimator = d == 1 ? "ols_diff" : "ols_lap";
  std::ostringstream why;
  if (alpha_yy < alpha_xx - d) {
    r.feasible = false;
    why << "alpha_YY = " << alpha_yy << " < alpha_XX - d = " << alpha_xx - d;
  } else {
    r.feasible = true;
    r.order = order_for_alpha(alpha_xx, d);
    why << (d == 1 ? "smallest p with 2p > " : "smallest m with 4m > ") << alpha_xx;
  }
  r.rationale = why.str();
  return r;
}

inline Recommendation recommend(const FieldSample& s, int max_order = 4) {
  if (!s.design) throw ConfigError("recommend: sample has no design");
  const AlphaEstimate ax = estimate_alpha(s.observed_x(), *s.design, max_order);
  const AlphaEstimate ay = estimate_alpha(s.observed_y(), *s.design, max_order);
  if (ax.status != AlphaStatus::ok || ay.status != AlphaStatus::ok)
    throw NumericalError("recommend: exponent estimate inconclusive");
  return recommend_from_alpha(ax.alpha_hat, ay.alpha_hat, s.design->dimension());
}

// ---------------------------------------------------------------------------
// Region raster

enum class CrossRule { offset, mean };

struct RegionCell {
  double nu_x = 0.0;
  double nu_w = 0.0;
  double nu_xw = 0.0;
  RegionVerdict verdict;
};

/// Grid of verdicts over nu_x x nu_w. The cross smoothness is nu_x + offset
/// (CrossRule::offset) or (nu_x + nu_w) / 2 + offset (CrossRule::mean).
inline std::vector<RegionCell> region_map(int d, const std::vector<double>& nu_x, const std::vector<double>& nu_w,
                                          CrossRule rule = CrossRule::offset, double offset = 0.25) {
  std::vector<RegionCell> out;
  out.reserve(nu_x.size() * nu_w.size());
  for (double a : nu_x)
    for (double b : nu_w) {
      RegionCell c;
      c.nu_x = a;
      c.nu_w = b;
      c.nu_xw = rule == CrossRule::mean ? 0.5 * (a + b) + offset : a + offset;
      c.verdict = matern_region(a, b, c.nu_xw, d);
      out.push_back(c);
    }
  return out;
}

inline std::vector<double> linspace(double a, double b, int n) {
  detail::require(n >= 1, "linspace: need at least one point");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

// ---------------------------------------------------------------------------
// Rate formula

/// Slope of log SD against log N for the Laplacian estimator:
/// -1/2 + 1/2 max((alpha_X - alpha_W) / d, 0).
inline double rate_gamma(double alpha_x, double alpha_w, int d) {
  return -0.5 + 0.5 * std::max((alpha_x - alpha_w) / d, 0.0);
}

}  // namespace confound

#endif
