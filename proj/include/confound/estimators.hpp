#ifndef CONFOUND_ESTIMATORS_HPP
#define CONFOUND_ESTIMATORS_HPP

// Slope estimators: no-intercept OLS on operator-transformed channels, the
// nested-design averaging estimator, spacing-weighted differences for
// irregular sites and the two-grid procedure for two exposures.
//
// Every estimator reads the observed channels of a sample (noisy versions
// when present). Zero denominators raise NumericalError.

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "confound/design.hpp"
#include "confound/error.hpp"
#include "confound/fields.hpp"
#include "confound/operators.hpp"

namespace confound {

struct EstimatorReport {
  std::string estimator;
  int order = 0;
  double beta_hat = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> beta;  // all slope components; beta[0] == beta_hat
  double numerator = 0.0;
  double denominator = 0.0;
  std::size_t n_effective = 0;
  std::map<std::string, double> diagnostics;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  detail::require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Sum x_i y_i / Sum x_i^2 with the operator identity and order recorded.
inline EstimatorReport ratio_report(const std::string& id, int order, const std::vector<double>& x,
                                    const std::vector<double>& y) {
  detail::require(x.size() == y.size(), id + ": channel lengths differ");
  detail::require(!x.empty(), id + ": empty input");
  EstimatorReport r;
  r.estimator = id;
  r.order = order;
  r.numerator = dot(x, y);
  r.denominator = dot(x, x);
  r.n_effective = x.size();
  if (r.denominator == 0.0) throw NumericalError(id + ": zero denominator");
  r.beta_hat = r.numerator / r.denominator;
  r.beta = {r.beta_hat};
  return r;
}

/// No-intercept OLS slope.
inline double ols(const std::vector<double>& x, const std::vector<double>& y) {
  return ratio_report("ols", 0, x, y).beta_hat;
}

inline void require_1d(const FieldSample& s, const std::string& id) {
  if (!s.design) throw ConfigError(id + ": sample has no design");
  if (s.design->dimension() != 1) throw ConfigError(id + ": requires a 1D design");
}

/// OLS of p-th order differences of Y on those of X. Sites are taken in
/// order with the nominal spacing of the design; p = 0 is plain OLS.
inline EstimatorReport ols_diff(const FieldSample& s, int p) {
  require_1d(s, "ols_diff");
  const double h = s.design->h;
  if (p == 0) return ratio_report("ols", 0, s.observed_x(), s.observed_y());
  const DiffSpec ds{p, h};
  return ratio_report("ols_diff", p, diff(s.observed_x(), ds), diff(s.observed_y(), ds));
}

/// OLS of m-th order discrete Laplacians on a 1D or 2D regular grid.
inline EstimatorReport ols_lap(const FieldSample& s, int m) {
  if (!s.design) throw ConfigError("ols_lap: sample has no design");
  const Design& d = *s.design;
  if (d.kind == DesignKind::grid2d) {
    return ratio_report("ols_lap", m, laplacian_2d(s.observed_x(), d.side, m, d.h),
                        laplacian_2d(s.observed_y(), d.side, m, d.h));
  }
  if (d.kind != DesignKind::grid1d) throw ConfigError("ols_lap: regular grid required");
  return ratio_report("ols_lap", m, laplacian_1d(s.observed_x(), m, d.h),
                      laplacian_1d(s.observed_y(), m, d.h));
}

/// Local averaging then differencing: cluster means of a nested design,
/// p-th order differences on the coarse grid, then OLS.
inline EstimatorReport avg_then_diff(const FieldSample& s, int p) {
  if (!s.design || s.design->kind != DesignKind::nested1d)
    throw ConfigError("avg_then_diff: nested design metadata missing");
  const Design& d = *s.design;
  const auto ax = cluster_means(s.observed_x(), d);
  const auto ay = cluster_means(s.observed_y(), d);
  EstimatorReport r = ratio_report("avg_then_diff", p, diff(ax, DiffSpec{p, d.h}), diff(ay, DiffSpec{p, d.h}));
  r.diagnostics["cluster_size"] = 2.0 * d.half_width + 1.0;
  return r;
}

inline EstimatorReport spacing_weighted_second(const FieldSample& s) {
  require_1d(s, "spacing_weighted_second");
  const auto sites = site_coordinates(*s.design);
  return ratio_report("spacing_weighted_second", 2, spacing_weighted_second_op(s.observed_x(), sites),
                      spacing_weighted_second_op(s.observed_y(), sites));
}

inline EstimatorReport spacing_weighted_first(const FieldSample& s) {
  require_1d(s, "spacing_weighted_first");
  const auto sites = site_coordinates(*s.design);
  return ratio_report("spacing_weighted_first", 1, spacing_weighted_first_op(s.observed_x(), sites),
                      spacing_weighted_first_op(s.observed_y(), sites));
}

/// Default order: smallest p with 2p > alpha (d = 1), smallest m with
/// 4m > alpha (d = 2).
inline int minimal_order(double alpha, int d) {
  detail::require(alpha > 0.0 && std::isfinite(alpha), "minimal_order: alpha must be positive");
  const double step = d == 1 ? 2.0 : 4.0;
  detail::require(d == 1 || d == 2, "minimal_order: d must be 1 or 2");
  return static_cast<int>(std::floor(alpha / step)) + 1;
}

// ---------------------------------------------------------------------------
// Two exposures

struct TwoStageSpec {
  int p_fine = 1;
  int p_coarse = 1;
  int stride = 4;  // fine sites per coarse step; S = stride * n
};

/// Two-grid slope estimation for Y = b1 X1 + b2 X2 + W on a fine regular
/// grid. Stage one on the fine grid:
///   c = dX1.dX2 / dX1.dX1,  b1* = dX1.dY / dX1.dX1.
/// Stage two on every stride-th site:
///   Y* = Y - b1* X1,  X2* = X2 - c X1,  b2 = OLS(d Y*, d X2*).
/// Finally b1 = b1* - c b2.
inline EstimatorReport multivariate_two_stage(const FieldSample& s, const TwoStageSpec& spec) {
  if (!s.design || s.design->kind != DesignKind::grid1d)
    throw ConfigError("two_stage: regular 1D fine grid required");
  if (!s.has_x2()) throw ConfigError("two_stage: sample has no second exposure");
  detail::require(spec.stride >= 2, "two_stage: fine grid must be strictly finer than the coarse grid");
  const Design& d = *s.design;
  const auto& x1 = s.observed_x();
  const auto& y = s.observed_y();
  const auto& x2 = s.x2;
  const int S = d.spec.n;
  detail::require(S % spec.stride == 0, "two_stage: fine size must be a multiple of the stride");

  const DiffSpec df{spec.p_fine, d.h};
  const auto dx1 = diff(x1, df);
  const auto dx2 = diff(x2, df);
  const auto dy = diff(y, df);
  const double den1 = dot(dx1, dx1);
  if (den1 == 0.0) throw NumericalError("two_stage: zero denominator on the fine grid");
  const double c_hat = dot(dx1, dx2) / den1;
  const double b1_star = dot(dx1, dy) / den1;

  std::vector<double> ys, x2s;
  for (std::size_t i = 0; i < x1.size(); i += static_cast<std::size_t>(spec.stride)) {
    ys.push_back(y[i] - b1_star * x1[i]);
    x2s.push_back(x2[i] - c_hat * x1[i]);
  }
  const DiffSpec dc{spec.p_coarse, d.h * spec.stride};
  EstimatorReport r = ratio_report("two_stage", spec.p_fine, diff(x2s, dc), diff(ys, dc));
  const double b2 = r.beta_hat;
  const double b1 = b1_star - c_hat * b2;
  r.beta_hat = b1;
  r.beta = {b1, b2};
  r.diagnostics["c_hat"] = c_hat;
  r.diagnostics["beta1_star"] = b1_star;
  r.diagnostics["p_coarse"] = spec.p_coarse;
  r.diagnostics["coarse_sites"] = static_cast<double>(ys.size());
  return r;
}

}  // namespace confound

#endif
