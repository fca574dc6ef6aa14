#ifndef CONFOUND_FIELDS_HPP
#define CONFOUND_FIELDS_HPP

// Joint covariance assembly and exact Gaussian sampling of (X, W[, X2]).
//
// Variables are stacked as in the covariance model: index 0 is X, the last
// index is W, and a trivariate model carries X2 in the middle. The joint
// matrix is factorised in place; its strictly upper triangle keeps the
// original entries and the diagonal is stored separately, so a 9800 x 9800
// problem needs one dense matrix.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "confound/covmodels.hpp"
#include "confound/design.hpp"
#include "confound/error.hpp"
#include "confound/functions.hpp"
#include "confound/rng.hpp"
#include "confound/special.hpp"

namespace confound {

class JointCovariance {
 public:
  JointCovariance() = default;

  int num_vars() const { return q_; }
  int num_sites() const { return n_; }
  Eigen::Index dim() const { return store_.rows(); }
  double jitter_used() const { return jitter_; }

  /// Original (unjittered) covariance entry.
  double entry(Eigen::Index r, Eigen::Index c) const {
    if (r == c) return diag_[r];
    return r < c ? store_(r, c) : store_(c, r);
  }

  Eigen::MatrixXd matrix() const {
    Eigen::MatrixXd m(dim(), dim());
    for (Eigen::Index c = 0; c < dim(); ++c)
      for (Eigen::Index r = 0; r < dim(); ++r) m(r, c) = entry(r, c);
    return m;
  }

  /// Lower Cholesky factor of matrix() + jitter_used() * I.
  auto factor() const { return store_.triangularView<Eigen::Lower>(); }

  Eigen::MatrixXd factor_dense() const {
    Eigen::MatrixXd l = store_.triangularView<Eigen::Lower>();
    return l;
  }

 private:
  friend JointCovariance factorize_joint(Eigen::MatrixXd upper, int q, int n);

  int q_ = 0;
  int n_ = 0;
  double jitter_ = 0.0;
  Eigen::MatrixXd store_;
  Eigen::VectorXd diag_;
};

namespace detail {

inline void mirror_upper_to_lower(Eigen::MatrixXd& a) {
  constexpr Eigen::Index B = 64;
  const Eigen::Index n = a.rows();
  for (Eigen::Index jb = 0; jb < n; jb += B)
    for (Eigen::Index ib = jb; ib < n; ib += B) {
      const Eigen::Index je = std::min(jb + B, n);
      const Eigen::Index ie = std::min(ib + B, n);
      for (Eigen::Index j = jb; j < je; ++j)
        for (Eigen::Index i = std::max(ib, j + 1); i < ie; ++i) a(i, j) = a(j, i);
    }
}

}  // namespace detail

/// Factorises the symmetric matrix whose upper triangle (with diagonal) is
/// given, trying jitter 0, 1e-12, 1e-10, 1e-8 relative to the largest
/// diagonal entry.
inline JointCovariance factorize_joint(Eigen::MatrixXd upper, int q, int n) {
  JointCovariance j;
  j.q_ = q;
  j.n_ = n;
  j.diag_ = upper.diagonal();
  j.store_ = std::move(upper);
  const double dmax = j.diag_.maxCoeff();
  for (double rel : {0.0, 1e-12, 1e-10, 1e-8}) {
    detail::mirror_upper_to_lower(j.store_);
    j.store_.diagonal() = j.diag_.array() + rel * dmax;
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(j.store_);
    if (llt.info() == Eigen::Success) {
      j.jitter_ = rel * dmax;
      return j;
    }
  }
  throw NumericalError(
      "not positive definite: joint covariance factorization failed after jitter 1e-8 "
      "(invalid cross-covariance parameterization?)");
}

/// Distinct-offset table of a design: maps a site pair to a slot whose
/// distance is shared by every pair with the same key offset.
class LagTable {
 public:
  explicit LagTable(const Design& d) : d_(&d) {
    int imax = 0, jmin = 0, jmax = 0;
    for (const auto& k : d.keys) {
      imax = std::max(imax, k.i);
      jmin = std::min(jmin, k.j);
      jmax = std::max(jmax, k.j);
    }
    switch (d.rule) {
      case LagRule::linear1:
        ni_ = imax + 1;
        nj_ = 1;
        break;
      case LagRule::euclid2:
        ni_ = imax + 1;
        nj_ = jmax + 1;
        break;
      case LagRule::linear2:
        ni_ = imax + 1;
        jspan_ = jmax - jmin;
        nj_ = 2 * jspan_ + 1;
        break;
    }
    lags_.resize(static_cast<std::size_t>(ni_) * nj_);
    for (int di = 0; di < ni_; ++di)
      for (int s = 0; s < nj_; ++s) {
        const int dj = d.rule == LagRule::linear2 ? s - jspan_ : s;
        double h = 0.0;
        switch (d.rule) {
          case LagRule::linear1:
            h = di * d.unit_a;
            break;
          case LagRule::euclid2:
            h = d.unit_a * std::hypot(static_cast<double>(di), static_cast<double>(dj));
            break;
          case LagRule::linear2:
            h = std::abs(di * d.unit_a + dj * d.unit_b);
            break;
        }
        lags_[static_cast<std::size_t>(di) * nj_ + s] = h;
      }
  }

  std::size_t slots() const { return lags_.size(); }
  double lag_of_slot(std::size_t s) const { return lags_[s]; }

  std::size_t slot(std::size_t a, std::size_t b) const {
    int di = d_->keys[b].i - d_->keys[a].i;
    int dj = d_->keys[b].j - d_->keys[a].j;
    switch (d_->rule) {
      case LagRule::linear1:
        return static_cast<std::size_t>(std::abs(di));
      case LagRule::euclid2:
        return static_cast<std::size_t>(std::abs(di)) * nj_ + static_cast<std::size_t>(std::abs(dj));
      case LagRule::linear2:
        if (di < 0) {
          di = -di;
          dj = -dj;
        }
        return static_cast<std::size_t>(di) * nj_ + static_cast<std::size_t>(dj + jspan_);
    }
    return 0;
  }

 private:
  const Design* d_;
  int ni_ = 0;
  int nj_ = 0;
  int jspan_ = 0;
  std::vector<double> lags_;
};

/// Upper triangle (with diagonal) of the stacked joint covariance.
inline Eigen::MatrixXd joint_upper(const CovarianceModel& model, const Design& design) {
  const int q = model.num_vars();
  const Eigen::Index N = static_cast<Eigen::Index>(design.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(q * N, q * N);
  if (model.is_stationary()) {
    const LagTable table(design);
    std::vector<double> vals(table.slots());
    for (int k = 0; k < q; ++k)
      for (int l = k; l < q; ++l) {
        for (std::size_t s = 0; s < table.slots(); ++s)
          vals[s] = model.stationary(k, l, table.lag_of_slot(s));
        for (Eigen::Index b = 0; b < N; ++b) {
          const Eigen::Index a_end = (k == l) ? b + 1 : N;
          for (Eigen::Index a = 0; a < a_end; ++a)
            m(k * N + a, l * N + b) = vals[table.slot(static_cast<std::size_t>(a), static_cast<std::size_t>(b))];
        }
      }
  } else {
    for (int k = 0; k < q; ++k)
      for (int l = k; l < q; ++l)
        for (Eigen::Index b = 0; b < N; ++b) {
          const Eigen::Index a_end = (k == l) ? b + 1 : N;
          for (Eigen::Index a = 0; a < a_end; ++a)
            m(k * N + a, l * N + b) = model(k, l, design.sites[static_cast<std::size_t>(a)],
                                            design.sites[static_cast<std::size_t>(b)]);
        }
  }
  return m;
}

inline JointCovariance assemble_joint(const CovarianceModel& model, const Design& design) {
  return factorize_joint(joint_upper(model, design), model.num_vars(),
                         static_cast<int>(design.size()));
}

// ---------------------------------------------------------------------------
// Sample options

struct NoiseSpec {
  std::optional<double> tau2_x;  // present: x_noisy channel is produced
  std::optional<double> tau2_y;
};

enum class ScaleMarginal { inverse_gamma, exponential };

/// Positive scale fields multiplying X and W: sigma^2(s) = F^{-1}(Phi(G(s)))
/// with G a unit-variance squared-exponential GRF.
struct HeavyTailSpec {
  bool enabled = false;
  ScaleMarginal marginal = ScaleMarginal::inverse_gamma;
  ScalarFn kappa = ScalarFn::constant(5.0);  // Inv-Gamma(kappa/2, kappa/2)
  double rate = 1.0;                         // exponential variance
  double length_scale = 0.3;                 // of G
  int knots = 64;                            // per axis
  bool apply_x = true;
  bool apply_w = true;
};

struct SampleOptions {
  NoiseSpec noise;
  HeavyTailSpec heavy_tail;
};

struct FieldSample {
  std::shared_ptr<const Design> design;
  std::vector<double> beta;
  std::vector<double> x;
  std::vector<double> w;
  std::vector<double> y;
  std::vector<double> x2;        // empty unless trivariate
  std::vector<double> x_noisy;   // empty unless requested
  std::vector<double> y_noisy;
  std::uint64_t seed = 0;

  bool has_x2() const { return !x2.empty(); }
  const std::vector<double>& observed_x() const { return x_noisy.empty() ? x : x_noisy; }
  const std::vector<double>& observed_y() const { return y_noisy.empty() ? y : y_noisy; }
};

// ---------------------------------------------------------------------------
// Sampler

/// Smooth scale-field generator: a squared-exponential GRF on a knot lattice,
/// extended to the design sites by its kriging mean.
class ScaleFieldGenerator {
 public:
  ScaleFieldGenerator() = default;

  ScaleFieldGenerator(const Design& design, const HeavyTailSpec& spec) : spec_(spec) {
    detail::require(spec.length_scale > 0.0, "heavy tail: length_scale must be positive");
    detail::require(spec.knots >= 2, "heavy tail: at least 2 knots per axis");
    if (spec.marginal == ScaleMarginal::exponential)
      detail::require(spec.rate > 0.0, "heavy tail: rate must be positive");
    else
      spec.kappa.require_positive_on(design.spec.L, "heavy tail kappa(s)");
    const double L = design.spec.L;
    std::vector<Site> kn;
    const int m = spec.knots;
    if (design.dimension() == 1) {
      for (int i = 0; i < m; ++i) kn.push_back(Site{L * i / (m - 1), 0.0});
    } else {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) kn.push_back(Site{L * i / (m - 1), L * j / (m - 1)});
    }
    const Eigen::Index K = static_cast<Eigen::Index>(kn.size());
    const double l2 = spec.length_scale * spec.length_scale;
    auto se = [l2](const Site& a, const Site& b) {
      const double d = distance(a, b);
      return std::exp(-0.5 * d * d / l2);
    };
    Eigen::MatrixXd kk(K, K);
    for (Eigen::Index b = 0; b < K; ++b)
      for (Eigen::Index a = 0; a <= b; ++a) kk(a, b) = se(kn[a], kn[b]);
    JointCovariance f = factorize_joint(std::move(kk), 1, static_cast<int>(K));
    // G(s) = k(s)^T (K + jI)^{-1} L z = k(s)^T L^{-T} z
    const Eigen::Index N = static_cast<Eigen::Index>(design.size());
    Eigen::MatrixXd ks(N, K);
    for (Eigen::Index a = 0; a < N; ++a)
      for (Eigen::Index b = 0; b < K; ++b) ks(a, b) = se(design.sites[a], kn[b]);
    // weights = ks L^{-T}  <=>  weights^T = L^{-1} ks^T
    Eigen::MatrixXd wt = ks.transpose();
    f.factor().solveInPlace(wt);
    weights_ = wt.transpose();
    sites_ = design.sites;
  }

  /// Multiplicative scale sigma(s) = sqrt(sigma^2(s)) at every site.
  std::vector<double> draw(std::mt19937_64& gen) const {
    std::normal_distribution<double> nd;
    Eigen::VectorXd z(weights_.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = nd(gen);
    const Eigen::VectorXd g = weights_ * z;
    std::vector<double> out(static_cast<std::size_t>(g.size()));
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      double u = special::normal_cdf(g[i]);
      u = std::clamp(u, 1e-15, 1.0 - 1e-15);
      double v = 0.0;
      if (spec_.marginal == ScaleMarginal::exponential) {
        v = special::exponential_quantile(spec_.rate, u);
      } else {
        const double k = spec_.kappa(sites_[static_cast<std::size_t>(i)].x);
        v = special::inverse_gamma_quantile(0.5 * k, 0.5 * k, u);
      }
      out[static_cast<std::size_t>(i)] = std::sqrt(v);
    }
    return out;
  }

 private:
  HeavyTailSpec spec_;
  Eigen::MatrixXd weights_;
  std::vector<Site> sites_;
};

/// Holds the factorised joint covariance of one (model, design) pair and
/// draws samples from it. Immutable after construction.
class Sampler {
 public:
  Sampler(const CovarianceModel& model, std::shared_ptr<const Design> design, SampleOptions opts = {})
      : design_(std::move(design)), opts_(std::move(opts)), q_(model.num_vars()) {
    detail::require(q_ == 2 || q_ == 3, "sampler: model must describe 2 or 3 variables");
    if (opts_.noise.tau2_x) detail::require(*opts_.noise.tau2_x >= 0.0, "noise: tau2_x must be >= 0");
    if (opts_.noise.tau2_y) detail::require(*opts_.noise.tau2_y >= 0.0, "noise: tau2_y must be >= 0");
    joint_ = std::make_shared<const JointCovariance>(assemble_joint(model, *design_));
    if (opts_.heavy_tail.enabled) scale_ = ScaleFieldGenerator(*design_, opts_.heavy_tail);
  }

  const JointCovariance& joint() const { return *joint_; }
  const Design& design() const { return *design_; }
  std::shared_ptr<const Design> design_ptr() const { return design_; }
  const SampleOptions& options() const { return opts_; }
  int num_vars() const { return q_; }

  /// One sample per seed. The Gaussian draws are produced as a single
  /// matrix product, so a given list of seeds always yields the same bytes.
  std::vector<FieldSample> draw(const std::vector<double>& beta,
                                const std::vector<std::uint64_t>& seeds) const {
    detail::require(static_cast<int>(beta.size()) == q_ - 1,
                    "sampler: need one slope per exposure variable");
    const Eigen::Index N = joint_->num_sites();
    const Eigen::Index D = joint_->dim();
    const Eigen::Index B = static_cast<Eigen::Index>(seeds.size());
    Eigen::MatrixXd z(D, B);
    for (Eigen::Index c = 0; c < B; ++c) {
      auto gen = make_stream(seeds[static_cast<std::size_t>(c)], Stream::field);
      std::normal_distribution<double> nd;
      for (Eigen::Index r = 0; r < D; ++r) z(r, c) = nd(gen);
    }
    const Eigen::MatrixXd v = joint_->factor() * z;

    std::vector<FieldSample> out(static_cast<std::size_t>(B));
    for (Eigen::Index c = 0; c < B; ++c) {
      FieldSample& s = out[static_cast<std::size_t>(c)];
      const std::uint64_t seed = seeds[static_cast<std::size_t>(c)];
      s.design = design_;
      s.beta = beta;
      s.seed = seed;
      auto column = [&](int var) {
        std::vector<double> o(static_cast<std::size_t>(N));
        for (Eigen::Index i = 0; i < N; ++i) o[static_cast<std::size_t>(i)] = v(var * N + i, c);
        return o;
      };
      s.x = column(0);
      s.w = column(q_ - 1);
      if (q_ == 3) s.x2 = column(1);

      if (opts_.heavy_tail.enabled) {
        auto gx = make_stream(seed, Stream::scale_x);
        auto gw = make_stream(seed, Stream::scale_w);
        const auto sx = scale_.draw(gx);
        const auto sw = scale_.draw(gw);
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (opts_.heavy_tail.apply_x) s.x[i] *= sx[i];
          if (opts_.heavy_tail.apply_w) s.w[i] *= sw[i];
        }
      }

      s.y.resize(s.x.size());
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        double yi = beta[0] * s.x[i];
        if (q_ == 3) yi += beta[1] * s.x2[i];
        s.y[i] = yi + s.w[i];
      }

      if (opts_.noise.tau2_x) {
        auto g = make_stream(seed, Stream::noise_x);
        std::normal_distribution<double> nd;
        const double t = std::sqrt(*opts_.noise.tau2_x);
        s.x_noisy = s.x;
        for (double& e : s.x_noisy) e += t * nd(g);
      }
      if (opts_.noise.tau2_y) {
        auto g = make_stream(seed, Stream::noise_y);
        std::normal_distribution<double> nd;
        const double t = std::sqrt(*opts_.noise.tau2_y);
        s.y_noisy = s.y;
        for (double& e : s.y_noisy) e += t * nd(g);
      }
    }
    return out;
  }

  FieldSample draw_one(const std::vector<double>& beta, std::uint64_t seed) const {
    return std::move(draw(beta, {seed}).front());
  }

 private:
  std::shared_ptr<const Design> design_;
  SampleOptions opts_;
  int q_;
  std::shared_ptr<const JointCovariance> joint_;
  ScaleFieldGenerator scale_;
};

inline FieldSample sample_fields(const CovarianceModel& model, const Design& design,
                                 const std::vector<double>& beta, std::uint64_t seed,
                                 const SampleOptions& opts = {}) {
  Sampler s(model, std::make_shared<const Design>(design), opts);
  return s.draw_one(beta, seed);
}

// ---------------------------------------------------------------------------
// Sampler verification

struct CovCheckResult {
  double max_abs_dev = 0.0;  // max |empirical - model| over joint entries
  double max_z = 0.0;        // max |empirical - model| / standard error
  double max_cross_abs = 0.0;
  std::size_t entries = 0;
};

/// Monte Carlo check of the sampler: mean-zero empirical covariance of
/// n_reps draws against the assembled joint matrix. The standard error of
/// entry (i, j) is sqrt((S_ii S_jj + S_ij^2) / n_reps).
inline CovCheckResult empirical_cov_check(const CovarianceModel& model, const Design& design,
                                          int n_reps, std::uint64_t seed) {
  detail::require(design.size() <= 64, "empirical_cov_check: design must have at most 64 sites");
  detail::require(n_reps >= 2, "empirical_cov_check: need at least 2 replicates");
  const Sampler sampler(model, std::make_shared<const Design>(design));
  const JointCovariance& j = sampler.joint();
  const Eigen::Index D = j.dim();
  const Eigen::Index N = j.num_sites();
  const int q = j.num_vars();
  const std::vector<double> beta(static_cast<std::size_t>(q - 1), 0.0);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(D, D);
  constexpr int batch = 1000;
  Eigen::MatrixXd v(D, batch);
  for (int done = 0; done < n_reps; done += batch) {
    const int b = std::min(batch, n_reps - done);
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(b));
    for (int c = 0; c < b; ++c) seeds[static_cast<std::size_t>(c)] = seed + static_cast<std::uint64_t>(done + c);
    const auto samples = sampler.draw(beta, seeds);
    for (int c = 0; c < b; ++c) {
      const FieldSample& s = samples[static_cast<std::size_t>(c)];
      for (Eigen::Index i = 0; i < N; ++i) {
        v(i, c) = s.x[static_cast<std::size_t>(i)];
        v((q - 1) * N + i, c) = s.w[static_cast<std::size_t>(i)];
        if (q == 3) v(N + i, c) = s.x2[static_cast<std::size_t>(i)];
      }
    }
    acc.noalias() += v.leftCols(b) * v.leftCols(b).transpose();
  }
  acc /= static_cast<double>(n_reps);
  CovCheckResult res;
  for (Eigen::Index c = 0; c < D; ++c)
    for (Eigen::Index r = 0; r <= c; ++r) {
      const double s = j.entry(r, c);
      const double dev = std::abs(acc(r, c) - s);
      const double se = std::sqrt((j.entry(r, r) * j.entry(c, c) + s * s) / n_reps);
      res.max_abs_dev = std::max(res.max_abs_dev, dev);
      res.max_z = std::max(res.max_z, dev / se);
      if (r / N != c / N) res.max_cross_abs = std::max(res.max_cross_abs, dev);
      ++res.entries;
    }
  return res;
}

}  // namespace confound

#endif
