#ifndef CONFOUND_COVMODELS_HPP
#define CONFOUND_COVMODELS_HPP

// Stationary and nonstationary (cross-)covariance families.
//
// A CovarianceModel describes q jointly distributed fields (q = 1, 2 or 3;
// variable 0 is the exposure X, the last one the confounder W when q >= 2).
// Blocks are addressed by variable indices (k, l). Every family exposes the
// exponent alpha and coefficient c of its principal irregular term
// K(t) = analytic(t) + c |t|^alpha + o(|t|^alpha).

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "confound/error.hpp"
#include "confound/functions.hpp"
#include "confound/special.hpp"

namespace confound {

struct Site {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Site& a, const Site& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct PitDescriptor {
  double alpha = 0.0;
  double c = 0.0;
  bool boundary = false;        // alpha is an even integer: log-type term
  bool outside_theory = false;  // analytic process (power exponent 2)
};

// ---------------------------------------------------------------------------
// Univariate families

struct MaternParams {
  double sigma2 = 1.0;
  double rho = 1.0;
  double nu = 0.5;

  void validate() const {
    detail::require(std::isfinite(sigma2) && std::isfinite(rho) && std::isfinite(nu),
                    "matern: nonfinite parameter");
    detail::require(sigma2 > 0.0, "matern: sigma2 must be positive");
    detail::require(rho > 0.0, "matern: rho must be positive");
    detail::require(nu > 0.0, "matern: nu must be positive");
  }
};

struct PowExpParams {
  double sigma2 = 1.0;
  double phi = 1.0;
  double delta = 1.0;

  void validate() const {
    detail::require(std::isfinite(sigma2) && std::isfinite(phi) && std::isfinite(delta),
                    "powexp: nonfinite parameter");
    detail::require(sigma2 > 0.0 && phi > 0.0, "powexp: sigma2 and phi must be positive");
    detail::require(delta > 0.0 && delta <= 2.0, "powexp: delta must lie in (0, 2]");
  }
};

struct GenCauchyParams {
  double sigma2 = 1.0;
  double phi = 1.0;
  double delta = 1.0;
  double kappa = 1.0;

  void validate() const {
    detail::require(std::isfinite(sigma2) && std::isfinite(phi) && std::isfinite(delta) &&
                        std::isfinite(kappa),
                    "gencauchy: nonfinite parameter");
    detail::require(sigma2 > 0.0 && phi > 0.0 && kappa > 0.0,
                    "gencauchy: sigma2, phi and kappa must be positive");
    detail::require(delta > 0.0 && delta <= 2.0, "gencauchy: delta must lie in (0, 2]");
  }

  /// delta * kappa > d: integrable covariance with a well-behaved spectral density.
  bool integrable(int d) const { return delta * kappa > d; }
};

/// White noise: sigma2 at lag zero, 0 elsewhere. Only usable as an LMC component.
struct NuggetParams {
  double sigma2 = 1.0;
  void validate() const { detail::require(sigma2 > 0.0, "nugget: sigma2 must be positive"); }
};

inline void require_lag(double h) {
  if (!std::isfinite(h)) throw ConfigError("covariance: nonfinite lag");
  if (h < 0.0) throw ConfigError("covariance: negative lag");
}

inline double matern_cov(double h, const MaternParams& p) {
  require_lag(h);
  const double t = std::sqrt(2.0 * p.nu) * h / p.rho;
  return p.sigma2 * special::matern_correlation_scaled(t, p.nu);
}

inline double powexp_cov(double h, const PowExpParams& p) {
  require_lag(h);
  if (!(p.delta > 0.0 && p.delta <= 2.0)) throw ConfigError("powexp: delta must lie in (0, 2]");
  return p.sigma2 * std::exp(-p.phi * std::pow(h, p.delta));
}

inline double gencauchy_cov(double h, const GenCauchyParams& p) {
  require_lag(h);
  p.validate();
  return p.sigma2 * std::pow(1.0 + p.phi * std::pow(h, p.delta), -p.kappa);
}

/// Matern spectral density on R^d, normalised so that its integral over R^d
/// equals sigma2 = C(0):
///   f(w) = sigma2 Gamma(nu + d/2) a^{2 nu} / (Gamma(nu) pi^{d/2}) (a^2 + w^2)^{-(nu + d/2)},
/// with a = sqrt(2 nu) / rho.
inline double matern_spectral(double omega, const MaternParams& p, int d) {
  detail::require(omega >= 0.0, "matern_spectral: omega must be nonnegative");
  detail::require(d >= 1, "matern_spectral: dimension must be positive");
  p.validate();
  const double a = std::sqrt(2.0 * p.nu) / p.rho;
  const double hd = 0.5 * d;
  const double logf = std::log(p.sigma2) + std::lgamma(p.nu + hd) + 2.0 * p.nu * std::log(a) -
                      std::lgamma(p.nu) - hd * std::log(std::numbers::pi) -
                      (p.nu + hd) * std::log(a * a + omega * omega);
  return std::exp(logf);
}

inline bool is_even_integer(double a) {
  const double r = std::round(a);
  return std::abs(a - r) < 1e-12 && static_cast<long long>(r) % 2 == 0;
}

/// Principal irregular term of sigma2 * M_nu(h / rho). For integer nu the
/// term is c t^{2nu} log t and the boundary flag is set.
inline PitDescriptor matern_pit(double sigma2, double rho, double nu) {
  PitDescriptor d;
  d.alpha = 2.0 * nu;
  const double a_half = std::sqrt(2.0 * nu) / rho / 2.0;
  const double m = std::round(nu);
  if (std::abs(nu - m) < 1e-12) {
    d.boundary = true;
    const int mi = static_cast<int>(m);
    const double sign = (mi % 2 == 1) ? 1.0 : -1.0;  // (-1)^{m+1}
    d.c = sigma2 * 2.0 * sign * std::pow(a_half, 2.0 * nu) /
          (std::tgamma(m + 1.0) * std::tgamma(m));
  } else {
    d.c = sigma2 * std::tgamma(-nu) / std::tgamma(nu) * std::pow(a_half, 2.0 * nu);
  }
  return d;
}

using UnivariateModel = std::variant<MaternParams, PowExpParams, GenCauchyParams, NuggetParams>;

inline double univariate_cov(const UnivariateModel& m, double h) {
  struct V {
    double h;
    double operator()(const MaternParams& p) const { return matern_cov(h, p); }
    double operator()(const PowExpParams& p) const { return powexp_cov(h, p); }
    double operator()(const GenCauchyParams& p) const { return gencauchy_cov(h, p); }
    double operator()(const NuggetParams& p) const { return h == 0.0 ? p.sigma2 : 0.0; }
  };
  return std::visit(V{h}, m);
}

inline PitDescriptor univariate_pit(const UnivariateModel& m) {
  struct V {
    PitDescriptor operator()(const MaternParams& p) const {
      return matern_pit(p.sigma2, p.rho, p.nu);
    }
    PitDescriptor operator()(const PowExpParams& p) const {
      PitDescriptor d{p.delta, -p.sigma2 * p.phi, is_even_integer(p.delta), p.delta >= 2.0};
      return d;
    }
    PitDescriptor operator()(const GenCauchyParams& p) const {
      PitDescriptor d{p.delta, -p.sigma2 * p.kappa * p.phi, is_even_integer(p.delta),
                      p.delta >= 2.0};
      return d;
    }
    PitDescriptor operator()(const NuggetParams&) const {
      throw ConfigError("exponent unavailable: nugget component has no principal irregular term");
    }
  };
  return std::visit(V{}, m);
}

inline void validate_univariate(const UnivariateModel& m) {
  std::visit([](const auto& p) { p.validate(); }, m);
}

inline double univariate_variance(const UnivariateModel& m) {
  return std::visit([](const auto& p) { return p.sigma2; }, m);
}

// ---------------------------------------------------------------------------
// Multivariate stationary families

/// Small symmetric q x q table indexed by variable pairs.
template <class T>
class PairTable {
 public:
  PairTable() = default;
  PairTable(int q, T fill) : q_(q), data_(static_cast<std::size_t>(q * q), fill) {}
  int size() const { return q_; }
  T& operator()(int k, int l) {
    if (k > l) std::swap(k, l);
    return data_[static_cast<std::size_t>(k * q_ + l)];
  }
  const T& operator()(int k, int l) const {
    if (k > l) std::swap(k, l);
    return data_[static_cast<std::size_t>(k * q_ + l)];
  }

 private:
  int q_ = 0;
  std::vector<T> data_;
};

/// Multivariate Matern: block (k, l) is corr_kl sigma_k sigma_l M_{nu_kl}(h / range_kl)
/// with corr_kk = 1.
struct MultiMatern {
  std::vector<MaternParams> marginals;
  PairTable<double> nu;
  PairTable<double> range;
  PairTable<double> corr;

  int num_vars() const { return static_cast<int>(marginals.size()); }

  MaternParams block(int k, int l) const {
    const double s = std::sqrt(marginals[k].sigma2 * marginals[l].sigma2);
    return MaternParams{s, range(k, l), nu(k, l)};
  }

  double cov(int k, int l, double h) const {
    const double cr = (k == l) ? 1.0 : corr(k, l);
    if (cr == 0.0) return 0.0;
    return cr * matern_cov(h, block(k, l));
  }

  void validate() const {
    const int q = num_vars();
    detail::require(q >= 1 && q <= 3, "multivariate matern: 1 to 3 variables supported");
    for (const auto& m : marginals) m.validate();
    for (int k = 0; k < q; ++k)
      for (int l = k + 1; l < q; ++l) {
        detail::require(nu(k, l) > 0.0 && range(k, l) > 0.0,
                        "multivariate matern: cross nu and range must be positive");
        detail::require(std::abs(corr(k, l)) <= 1.0,
                        "multivariate matern: cross correlation must lie in [-1, 1]");
      }
  }
};

/// Bivariate Matern with the given marginals; the cross range defaults to the
/// shared marginal range.
inline MultiMatern bivariate_matern(MaternParams x, MaternParams w, double nu_xw, double rho_xw,
                                    double range_xw = std::numeric_limits<double>::quiet_NaN()) {
  if (std::isnan(range_xw)) {
    detail::require(x.rho == w.rho,
                    "bivariate matern: cross range required when marginal ranges differ");
    range_xw = x.rho;
  }
  MultiMatern m;
  m.marginals = {x, w};
  m.nu = PairTable<double>(2, 0.0);
  m.range = PairTable<double>(2, 0.0);
  m.corr = PairTable<double>(2, 1.0);
  m.nu(0, 0) = x.nu;
  m.nu(1, 1) = w.nu;
  m.nu(0, 1) = nu_xw;
  m.range(0, 0) = x.rho;
  m.range(1, 1) = w.rho;
  m.range(0, 1) = range_xw;
  m.corr(0, 1) = rho_xw;
  m.validate();
  return m;
}

/// Bivariate model with power-exponential or generalised-Cauchy marginals and
/// a cross block of the same family scaled by rho_xw sigma_x sigma_w.
template <class Params>
struct BivariateFamily {
  Params x;
  Params w;
  Params cross;  // sigma2 is ignored; scale comes from rho_xw
  double rho_xw = 0.0;

  Params block(int k, int l) const {
    if (k == 0 && l == 0) return x;
    if (k == 1 && l == 1) return w;
    Params p = cross;
    p.sigma2 = rho_xw * std::sqrt(x.sigma2 * w.sigma2);
    return p;
  }

  double cov(int k, int l, double h) const {
    if (k != l && rho_xw == 0.0) return 0.0;
    Params p = block(k, l);
    if (k != l) {
      const double s = p.sigma2;
      p.sigma2 = 1.0;
      return s * univariate_cov(UnivariateModel(p), h);
    }
    return univariate_cov(UnivariateModel(p), h);
  }

  void validate() const {
    x.validate();
    w.validate();
    Params c = cross;
    c.sigma2 = 1.0;
    c.validate();
    detail::require(std::abs(rho_xw) <= 1.0, "cross correlation must lie in [-1, 1]");
  }
};

using BivariatePowExp = BivariateFamily<PowExpParams>;
using BivariateGenCauchy = BivariateFamily<GenCauchyParams>;

struct LmcComponent {
  UnivariateModel model;
  std::vector<double> weights;  // one per variable: a_i for X, b_i for W, ...
};

/// Linear model of coregionalization: Z_k = sum_i w_ik U_i with independent U_i.
struct Lmc {
  std::vector<LmcComponent> components;

  int num_vars() const {
    return components.empty() ? 0 : static_cast<int>(components.front().weights.size());
  }

  double cov(int k, int l, double h) const {
    double s = 0.0;
    for (const auto& c : components) {
      const double ww = c.weights[k] * c.weights[l];
      if (ww != 0.0) s += ww * univariate_cov(c.model, h);
    }
    return s;
  }

  void validate() const {
    detail::require(!components.empty(), "lmc: at least one component required");
    const int q = num_vars();
    detail::require(q >= 1 && q <= 3, "lmc: 1 to 3 variables supported");
    for (const auto& c : components) {
      detail::require(static_cast<int>(c.weights.size()) == q,
                      "lmc: every component needs one weight per variable");
      validate_univariate(c.model);
    }
    for (int k = 0; k < q; ++k) {
      bool any = false;
      for (const auto& c : components) any = any || c.weights[k] != 0.0;
      detail::require(any, "lmc: every variable needs at least one nonzero weight");
    }
  }

  PitDescriptor pit(int k, int l) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (const auto& c : components)
      if (c.weights[k] * c.weights[l] != 0.0) alpha = std::min(alpha, univariate_pit(c.model).alpha);
    PitDescriptor d;
    d.alpha = alpha;
    if (!std::isfinite(alpha)) return d;  // identically zero cross block
    for (const auto& c : components) {
      const double ww = c.weights[k] * c.weights[l];
      if (ww == 0.0) continue;
      const PitDescriptor u = univariate_pit(c.model);
      if (u.alpha == alpha) {
        d.c += ww * u.c;
        d.boundary = d.boundary || u.boundary;
        d.outside_theory = d.outside_theory || u.outside_theory;
      }
    }
    return d;
  }
};

// ---------------------------------------------------------------------------
// Model wrapper

class CovarianceModel;

/// (X(f(s)), W(f(s))) for a stationary base model and a monotone warp f on [0, L].
struct WarpedModel {
  std::shared_ptr<const CovarianceModel> base;
  Warp warp = Warp::identity();
  double L = 1.0;
};

/// Multivariate Paciorek-type nonstationary covariance on [0, L] (1D):
///   K_kl(s, s') = sigma_k(s) sigma_l(s') (Phi_kl(s) Phi_lk(s'))^{1/4}
///                 / ((Phi_kl(s) + Phi_lk(s')) / 2)^{1/2} * B_kl(sqrt(Q_kl(s, s'))),
///   Q_kl(s, s') = (s - s')^2 / ((Phi_kl(s) + Phi_lk(s')) / 2),
/// where B_kl are the blocks of a stationary base model.
struct PaciorekModel {
  std::shared_ptr<const CovarianceModel> base;
  std::vector<ScalarFn> sigma;  // per variable
  std::vector<ScalarFn> phi;    // q x q, row-major; phi[k*q+l] is Phi_kl
  double L = 1.0;

  int q() const { return static_cast<int>(sigma.size()); }
  const ScalarFn& phi_fn(int k, int l) const { return phi[static_cast<std::size_t>(k * q() + l)]; }
};

template <class P>
PitDescriptor bivariate_pit(const BivariateFamily<P>& m, int k, int l) {
  if (k != l && m.rho_xw == 0.0) {
    PitDescriptor d;
    d.alpha = std::numeric_limits<double>::infinity();
    return d;
  }
  return univariate_pit(UnivariateModel(m.block(k, l)));
}

class CovarianceModel {
 public:
  using Rep = std::variant<MultiMatern, BivariatePowExp, BivariateGenCauchy, Lmc, WarpedModel,
                           PaciorekModel>;

  explicit CovarianceModel(Rep rep) : rep_(std::move(rep)) { validate(); }

  const Rep& rep() const { return rep_; }

  std::string family() const {
    struct V {
      std::string operator()(const MultiMatern& m) const {
        return m.num_vars() == 1 ? "matern"
               : m.num_vars() == 2 ? "bivariate_matern"
                                   : "multivariate_matern";
      }
      std::string operator()(const BivariatePowExp&) const { return "powexp"; }
      std::string operator()(const BivariateGenCauchy&) const { return "gencauchy"; }
      std::string operator()(const Lmc&) const { return "lmc"; }
      std::string operator()(const WarpedModel&) const { return "warped"; }
      std::string operator()(const PaciorekModel&) const { return "paciorek"; }
    };
    return std::visit(V{}, rep_);
  }

  int num_vars() const {
    struct V {
      int operator()(const MultiMatern& m) const { return m.num_vars(); }
      int operator()(const BivariatePowExp&) const { return 2; }
      int operator()(const BivariateGenCauchy&) const { return 2; }
      int operator()(const Lmc& m) const { return m.num_vars(); }
      int operator()(const WarpedModel& m) const { return m.base->num_vars(); }
      int operator()(const PaciorekModel& m) const { return m.q(); }
    };
    return std::visit(V{}, rep_);
  }

  /// True when blocks depend on the sites only through their distance.
  bool is_stationary() const {
    return !std::holds_alternative<WarpedModel>(rep_) &&
           !std::holds_alternative<PaciorekModel>(rep_);
  }

  /// Stationary block value at lag h; only valid when is_stationary().
  double stationary(int k, int l, double h) const {
    check_block(k, l);
    struct V {
      int k, l;
      double h;
      double operator()(const MultiMatern& m) const { return m.cov(k, l, h); }
      double operator()(const BivariatePowExp& m) const { return m.cov(k, l, h); }
      double operator()(const BivariateGenCauchy& m) const { return m.cov(k, l, h); }
      double operator()(const Lmc& m) const { return m.cov(k, l, h); }
      double operator()(const WarpedModel&) const {
        throw ConfigError("stationary evaluation requested for a warped model");
      }
      double operator()(const PaciorekModel&) const {
        throw ConfigError("stationary evaluation requested for a Paciorek model");
      }
    };
    return std::visit(V{k, l, h}, rep_);
  }

  /// Cov(Z_k(s), Z_l(t)).
  double operator()(int k, int l, const Site& s, const Site& t) const {
    check_block(k, l);
    if (const auto* w = std::get_if<WarpedModel>(&rep_)) {
      const double fs = w->warp(s.x, w->L);
      const double ft = w->warp(t.x, w->L);
      return (*w->base)(k, l, Site{fs, 0.0}, Site{ft, 0.0});
    }
    if (const auto* p = std::get_if<PaciorekModel>(&rep_)) {
      const double pk = p->phi_fn(k, l)(s.x);
      const double pl = p->phi_fn(l, k)(t.x);
      const double mean = 0.5 * (pk + pl);
      const double pref =
          p->sigma[k](s.x) * p->sigma[l](t.x) * std::pow(pk * pl, 0.25) / std::sqrt(mean);
      const double dist = std::abs(s.x - t.x) / std::sqrt(mean);
      return pref * (*p->base)(k, l, Site{0.0, 0.0}, Site{dist, 0.0});
    }
    return stationary(k, l, distance(s, t));
  }

  /// Principal irregular term of block (k, l).
  PitDescriptor pit(int k, int l) const {
    check_block(k, l);
    struct V {
      int k, l;
      PitDescriptor operator()(const MultiMatern& m) const {
        if (k != l && m.corr(k, l) == 0.0) {
          PitDescriptor d;
          d.alpha = std::numeric_limits<double>::infinity();
          return d;
        }
        const MaternParams b = m.block(k, l);
        PitDescriptor d = matern_pit(b.sigma2, b.rho, b.nu);
        if (k != l) d.c *= m.corr(k, l);
        return d;
      }
      PitDescriptor operator()(const BivariatePowExp& m) const { return bivariate_pit(m, k, l); }
      PitDescriptor operator()(const BivariateGenCauchy& m) const { return bivariate_pit(m, k, l); }
      PitDescriptor operator()(const Lmc& m) const { return m.pit(k, l); }
      PitDescriptor operator()(const WarpedModel& m) const { return m.base->pit(k, l); }
      PitDescriptor operator()(const PaciorekModel& m) const { return m.base->pit(k, l); }
    };
    return std::visit(V{k, l}, rep_);
  }

  /// Marginal variance of variable k at site s.
  double variance(int k, const Site& s) const { return (*this)(k, k, s, s); }

 private:
  void check_block(int k, int l) const {
    const int q = num_vars();
    if (k < 0 || l < 0 || k >= q || l >= q) throw ConfigError("covariance block out of range");
  }

  void validate() const {
    struct V {
      void operator()(const MultiMatern& m) const { m.validate(); }
      void operator()(const BivariatePowExp& m) const { m.validate(); }
      void operator()(const BivariateGenCauchy& m) const { m.validate(); }
      void operator()(const Lmc& m) const { m.validate(); }
      void operator()(const WarpedModel& m) const {
        detail::require(m.base != nullptr, "warped: base model required");
        detail::require(m.base->is_stationary(), "warped: base model must be stationary");
        detail::require(m.L > 0.0, "warped: L must be positive");
        m.warp.validate(m.L);
      }
      void operator()(const PaciorekModel& m) const {
        detail::require(m.base != nullptr, "paciorek: base model required");
        detail::require(m.base->is_stationary(), "paciorek: base model must be stationary");
        detail::require(m.L > 0.0, "paciorek: L must be positive");
        const int q = m.q();
        detail::require(q == m.base->num_vars(), "paciorek: one sigma function per variable");
        detail::require(static_cast<int>(m.phi.size()) == q * q,
                        "paciorek: q x q range functions required");
        for (const auto& f : m.sigma) f.require_positive_on(m.L, "paciorek sigma_k(s)");
        for (const auto& f : m.phi) f.require_positive_on(m.L, "paciorek Phi_kl(s)");
      }
    };
    std::visit(V{}, rep_);
  }

  Rep rep_;
};

/// Named block evaluation; block 21 is served through block 12 with the
/// arguments exchanged, which equals block 12 for symmetric cross-covariances.
enum class Block { b11, b12, b21, b22 };

inline double cross_block(const CovarianceModel& m, Block b, const Site& s, const Site& t) {
  switch (b) {
    case Block::b11:
      return m(0, 0, s, t);
    case Block::b12:
      return m(0, 1, s, t);
    case Block::b21:
      return m(0, 1, t, s);
    case Block::b22:
      return m(1, 1, s, t);
  }
  return 0.0;
}

inline PitDescriptor pit_exponent(const CovarianceModel& m, Block b) {
  switch (b) {
    case Block::b11:
      return m.pit(0, 0);
    case Block::b12:
    case Block::b21:
      return m.pit(0, 1);
    case Block::b22:
      return m.pit(1, 1);
  }
  return {};
}

/// Convenience constructor for a Paciorek model with the same range
/// function on every block.
inline CovarianceModel paciorek(std::shared_ptr<const CovarianceModel> base,
                                std::vector<ScalarFn> sigma, const ScalarFn& phi, double L) {
  const int q = static_cast<int>(sigma.size());
  PaciorekModel p{std::move(base), std::move(sigma),
                  std::vector<ScalarFn>(static_cast<std::size_t>(q * q), phi), L};
  return CovarianceModel(std::move(p));
}

// ---------------------------------------------------------------------------
// Presets for the cross-correlation used in the reference experiments.

/// rho = min{0.5, sqrt(nu_x nu_w) / nu_xw}, used for the 1D experiments.
inline double cross_corr_rule_sqrt(double nu_x, double nu_w, double nu_xw) {
  return std::min(0.5, std::sqrt(nu_x * nu_w) / nu_xw);
}

/// rho = min{0.5, nu_x nu_w / nu_xw^2}, used for the 2D experiments.
inline double cross_corr_rule_ratio(double nu_x, double nu_w, double nu_xw) {
  return std::min(0.5, nu_x * nu_w / (nu_xw * nu_xw));
}

}  // namespace confound

#endif
