#ifndef CONFOUND_GLS_HPP
#define CONFOUND_GLS_HPP

// Generalised least squares slope x' S^{-1} y / x' S^{-1} x.
//
// A precision provider exposes inner(a, b) = a' S^{-1} b without forming
// S^{-1}. Providers: identity, dense Cholesky, and the closed-form
// tridiagonal precision of the exponential covariance on a regular grid.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "confound/covmodels.hpp"
#include "confound/design.hpp"
#include "confound/error.hpp"
#include "confound/estimators.hpp"
#include "confound/fields.hpp"

namespace confound {

template <class P>
concept PrecisionProvider = requires(const P& p, const std::vector<double>& a) {
  { p.inner(a, a) } -> std::convertible_to<double>;
  { p.size() } -> std::convertible_to<std::size_t>;
};

struct IdentityPrecision {
  std::size_t n = 0;
  std::size_t size() const { return n; }
  double inner(const std::vector<double>& a, const std::vector<double>& b) const { return dot(a, b); }
};

/// S = L L' held as a dense factor.
class DensePrecision {
 public:
  explicit DensePrecision(JointCovariance f) : f_(std::move(f)) {}

  /// From a full symmetric covariance matrix (only the upper triangle is read).
  static DensePrecision from_covariance(Eigen::MatrixXd s) {
    const int n = static_cast<int>(s.rows());
    return DensePrecision(factorize_joint(std::move(s), 1, n));
  }

  std::size_t size() const { return static_cast<std::size_t>(f_.dim()); }
  double jitter_used() const { return f_.jitter_used(); }

  Eigen::VectorXd whiten(const std::vector<double>& a) const {
    detail::require(a.size() == size(), "gls: vector length does not match the precision");
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
    f_.factor().solveInPlace(v);
    return v;
  }

  double inner(const std::vector<double>& a, const std::vector<double>& b) const {
    return whiten(a).dot(whiten(b));
  }

  /// log det S (including any jitter).
  double log_det() const {
    double s = 0.0;
    const auto l = f_.factor();
    for (Eigen::Index i = 0; i < f_.dim(); ++i) s += std::log(l.nestedExpression()(i, i));
    return 2.0 * s;
  }

 private:
  JointCovariance f_;
};

/// Precision of the exponential correlation r^{|i-j|}, r = exp(-lambda h),
/// on n equally spaced sites: S^{-1} = Q / (1 - r^2) with Q tridiagonal,
/// Q_ii = 1 at both ends and 1 + r^2 inside, Q_{i,i+1} = -r.
struct ExpTridiagonalPrecision {
  std::size_t n = 0;
  double r = 0.0;
  double scale = 1.0;  // 1 / (1 - r^2)

  std::size_t size() const { return n; }

  double q_diag(std::size_t i) const { return (i == 0 || i + 1 == n) ? 1.0 : 1.0 + r * r; }

  /// a' Q b (unscaled).
  double q_inner(const std::vector<double>& a, const std::vector<double>& b) const {
    detail::require(a.size() == n && b.size() == n, "gls_exp: vector length does not match the grid");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += q_diag(i) * a[i] * b[i];
    double off = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) off += a[i] * b[i + 1] + a[i + 1] * b[i];
    return s - r * off;
  }

  double inner(const std::vector<double>& a, const std::vector<double>& b) const {
    return scale * q_inner(a, b);
  }

  /// log det of the correlation matrix r^{|i-j|}: (n - 1) log(1 - r^2).
  double log_det_corr() const { return (static_cast<double>(n) - 1.0) * std::log(1.0 / scale); }

  Eigen::MatrixXd dense() const {
    const Eigen::Index m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      q(i, i) = q_diag(static_cast<std::size_t>(i));
      if (i + 1 < m) q(i, i + 1) = q(i + 1, i) = -r;
    }
    return scale * q;
  }
};

inline ExpTridiagonalPrecision exp_precision(std::size_t n, double lambda, double h) {
  detail::require(lambda > 0.0 && std::isfinite(lambda), "gls_exp: lambda must be positive");
  detail::require(n >= 2, "gls_exp: need at least 2 sites");
  ExpTridiagonalPrecision p;
  p.n = n;
  p.r = std::exp(-lambda * h);
  const double one_minus_r2 = -std::expm1(-2.0 * lambda * h);
  detail::require(one_minus_r2 > 0.0, "gls_exp: lambda * h too small");
  p.scale = 1.0 / one_minus_r2;
  return p;
}

inline ExpTridiagonalPrecision gls_exp_precision(const Design& d, double lambda) {
  detail::require(d.kind == DesignKind::grid1d, "gls_exp_precision: regular 1D grid required");
  return exp_precision(d.size(), lambda, d.h);
}

template <PrecisionProvider P>
EstimatorReport gls(const std::vector<double>& x, const std::vector<double>& y, const P& prec,
                    const std::string& id = "gls") {
  detail::require(x.size() == y.size() && x.size() == prec.size(), id + ": length mismatch");
  EstimatorReport r;
  r.estimator = id;
  r.numerator = prec.inner(x, y);
  r.denominator = prec.inner(x, x);
  r.n_effective = x.size();
  if (r.denominator == 0.0) throw NumericalError(id + ": zero denominator");
  r.beta_hat = r.numerator / r.denominator;
  r.beta = {r.beta_hat};
  return r;
}

// ---------------------------------------------------------------------------
// Working covariance matrices

/// Upper triangle of the covariance of a univariate Matern field on a design.
inline Eigen::MatrixXd matern_matrix_upper(const MaternParams& p, const Design& d) {
  p.validate();
  const LagTable table(d);
  std::vector<double> vals(table.slots());
  for (std::size_t s = 0; s < vals.size(); ++s) vals[s] = matern_cov(table.lag_of_slot(s), p);
  const Eigen::Index N = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(N, N);
  for (Eigen::Index b = 0; b < N; ++b)
    for (Eigen::Index a = 0; a <= b; ++a)
      m(a, b) = vals[table.slot(static_cast<std::size_t>(a), static_cast<std::size_t>(b))];
  return m;
}

inline DensePrecision matern_precision(const MaternParams& p, const Design& d) {
  return DensePrecision(factorize_joint(matern_matrix_upper(p, d), 1, static_cast<int>(d.size())));
}

// ---------------------------------------------------------------------------
// Profile likelihood

struct ProfileFit {
  double loglik = -std::numeric_limits<double>::infinity();
  double beta = std::numeric_limits<double>::quiet_NaN();
  double sigma2 = std::numeric_limits<double>::quiet_NaN();
};

/// Gaussian profile log-likelihood (constants dropped) of y = b x + e with
/// e ~ N(0, s2 R): b and s2 profiled out.
inline ProfileFit profile_fit(double xRx, double xRy, double yRy, double log_det_r, std::size_t n) {
  ProfileFit f;
  if (!(xRx > 0.0)) return f;
  f.beta = xRy / xRx;
  f.sigma2 = (yRy - f.beta * xRy) / static_cast<double>(n);
  if (!(f.sigma2 > 0.0)) return f;
  f.loglik = -0.5 * static_cast<double>(n) * std::log(f.sigma2) - 0.5 * log_det_r;
  return f;
}

namespace detail {

/// Golden-section maximisation of f on [a, b].
template <class F>
std::pair<double, double> golden_max(F f, double a, double b, int iters) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace detail

/// Exponential-working GLS. With lambda given the precision is fixed;
/// otherwise lambda maximises the profile likelihood (grid over log lambda,
/// then golden-section refinement).
inline EstimatorReport gls_exp(const FieldSample& s, std::optional<double> lambda = std::nullopt) {
  if (!s.design || s.design->kind != DesignKind::grid1d)
    throw ConfigError("gls_exp: regular 1D grid required");
  const Design& d = *s.design;
  const auto& x = s.observed_x();
  const auto& y = s.observed_y();
  const std::size_t n = x.size();
  EstimatorReport r;
  if (lambda) {
    r = gls(x, y, gls_exp_precision(d, *lambda), "gls_exp");
    r.diagnostics["lambda"] = *lambda;
    return r;
  }
  auto loglik = [&](double log_lambda) {
    const auto p = exp_precision(n, std::exp(log_lambda), d.h);
    return profile_fit(p.inner(x, x), p.inner(x, y), p.inner(y, y), p.log_det_corr(), n).loglik;
  };
  const double L = d.spec.L;
  const double lo = std::log(1e-3 / L);
  const double hi = std::log(0.5 / d.h);  // r >= exp(-0.5)
  constexpr int G = 48;
  double best_t = lo, best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= G; ++k) {
    const double t = lo + (hi - lo) * k / G;
    const double v = loglik(t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  if (!std::isfinite(best)) throw NumericalError("gls_exp: profile likelihood not finite on the search grid");
  const double step = (hi - lo) / G;
  const auto [t, v] = detail::golden_max(loglik, std::max(lo, best_t - step), std::min(hi, best_t + step), 40);
  const double lam = std::exp(v >= best ? t : best_t);
  r = gls(x, y, gls_exp_precision(d, lam), "gls_exp");
  r.diagnostics["lambda"] = lam;
  r.diagnostics["loglik"] = std::max(v, best);
  return r;
}

enum class GlsProfile { fixed, fitted };

/// Matern-working GLS. A smoothness of 1/2 on a regular grid takes the
/// tridiagonal path.
inline EstimatorReport gls_matern_fixed(const FieldSample& s, const MaternParams& w) {
  if (!s.design) throw ConfigError("gls_matern: sample has no design");
  const Design& d = *s.design;
  EstimatorReport r;
  if (w.nu == 0.5 && d.kind == DesignKind::grid1d) {
    r = gls(s.observed_x(), s.observed_y(), gls_exp_precision(d, 1.0 / w.rho), "gls_matern");
  } else {
    r = gls(s.observed_x(), s.observed_y(), matern_precision(w, d), "gls_matern");
  }
  r.diagnostics["nu"] = w.nu;
  r.diagnostics["rho"] = w.rho;
  return r;
}

struct MaternFitOptions {
  double nu_min = 0.5;
  double nu_max = 3.0;
  double nu_step = 0.25;
  int rho_points = 10;
  double rho_min_frac = 0.01;  // of L
  double rho_max_frac = 2.0;
  int golden_iters = 12;
};

/// Matern-working GLS with (sigma2, rho, nu) fitted by profile likelihood.
inline EstimatorReport gls_matern_fitted(const FieldSample& s, const MaternFitOptions& o = {}) {
  if (!s.design) throw ConfigError("gls_matern: sample has no design");
  const Design& d = *s.design;
  const auto& x = s.observed_x();
  const auto& y = s.observed_y();
  const std::size_t n = x.size();
  auto loglik = [&](double nu, double rho) {
    try {
      const DensePrecision p = matern_precision(MaternParams{1.0, rho, nu}, d);
      const Eigen::VectorXd wx = p.whiten(x);
      const Eigen::VectorXd wy = p.whiten(y);
      return profile_fit(wx.dot(wx), wx.dot(wy), wy.dot(wy), p.log_det(), n).loglik;
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  const double L = d.spec.L;
  const double lr0 = std::log(o.rho_min_frac * L);
  const double lr1 = std::log(o.rho_max_frac * L);
  double best = -std::numeric_limits<double>::infinity();
  double bnu = o.nu_min, blr = lr0;
  int evals = 0;
  for (double nu = o.nu_min; nu <= o.nu_max + 1e-12; nu += o.nu_step)
    for (int k = 0; k < o.rho_points; ++k) {
      const double lr = lr0 + (lr1 - lr0) * k / (o.rho_points - 1);
      const double v = loglik(nu, std::exp(lr));
      ++evals;
      if (v > best) {
        best = v;
        bnu = nu;
        blr = lr;
      }
    }
  if (!std::isfinite(best)) throw NumericalError("gls_matern: profile likelihood not finite on the search grid");
  const double rstep = (lr1 - lr0) / (o.rho_points - 1);
  for (int round = 0; round < 2; ++round) {
    auto [lr, v1] = detail::golden_max([&](double t) { return loglik(bnu, std::exp(t)); },
                                       blr - rstep, blr + rstep, o.golden_iters);
    if (v1 > best) {
      best = v1;
      blr = lr;
    }
    auto [nu, v2] = detail::golden_max([&](double t) { return loglik(t, std::exp(blr)); },
                                       std::max(0.05, bnu - o.nu_step), bnu + o.nu_step, o.golden_iters);
    if (v2 > best) {
      best = v2;
      bnu = nu;
    }
    evals += 4 * o.golden_iters;
  }
  const MaternParams fit{1.0, std::exp(blr), bnu};
  const DensePrecision p = matern_precision(fit, d);
  EstimatorReport r = gls(x, y, p, "gls_matern_fitted");
  const Eigen::VectorXd wx = p.whiten(x);
  const Eigen::VectorXd wy = p.whiten(y);
  const ProfileFit pf = profile_fit(wx.dot(wx), wx.dot(wy), wy.dot(wy), p.log_det(), n);
  r.diagnostics["nu"] = bnu;
  r.diagnostics["rho"] = fit.rho;
  r.diagnostics["sigma2"] = pf.sigma2;
  r.diagnostics["loglik"] = best;
  r.diagnostics["evaluations"] = evals;
  const bool at_edge = bnu <= o.nu_min + 1e-9 || bnu >= o.nu_max - 1e-9 ||
                       blr <= lr0 + 1e-9 || blr >= lr1 - 1e-9;
  r.diagnostics["converged"] = at_edge ? 0.0 : 1.0;
  return r;
}

}  // namespace confound

#endif
