#ifndef CONFOUND_HARNESS_HPP
#define CONFOUND_HARNESS_HPP

// Monte Carlo experiment runner, summary statistics and rate diagnostics.
//
// Replicate r of every size uses seed base_seed + r. Replicates are drawn in
// fixed batches of consecutive indices, so outputs do not depend on the
// number of worker threads or on execution order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "confound/config.hpp"
#include "confound/covmodels.hpp"
#include "confound/design.hpp"
#include "confound/error.hpp"
#include "confound/estimability.hpp"
#include "confound/estimators.hpp"
#include "confound/fields.hpp"
#include "confound/gls.hpp"
#include "confound/model_json.hpp"
#include "confound/thread_pool.hpp"

namespace confound {

/// Output column of an experiment: one estimator spec may produce several
/// (two_stage yields one per slope).
struct OutputColumn {
  std::string label;    // estimator column in the tables
  int order = 0;
  std::size_t spec = 0;       // index into config.estimators
  std::size_t component = 0;  // index into EstimatorReport::beta
  double truth = 0.0;
};

inline std::vector<OutputColumn> output_columns(const ExperimentConfig& c) {
  std::vector<OutputColumn> out;
  for (std::size_t i = 0; i < c.estimators.size(); ++i) {
    const EstimatorSpec& e = c.estimators[i];
    if (e.id == "two_stage") {
      detail::require(c.beta.size() == 2, "two_stage: needs two slopes");
      out.push_back({"two_stage_b1", e.order, i, 0, c.beta[0]});
      out.push_back({"two_stage_b2", e.order, i, 1, c.beta[1]});
    } else {
      out.push_back({e.id, e.order, i, 0, c.beta[0]});
    }
  }
  return out;
}

struct ReplicateFailure {
  int n = 0;
  int replicate = 0;
  std::string estimator;
  std::string message;
};

struct CellResult {
  std::string scenario;
  int n = 0;                 // configured size
  std::size_t sites = 0;     // sites in the design
  std::string estimator;
  int order = 0;
  double truth = 0.0;
  std::vector<double> replicates;  // NaN where the estimator failed
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;  // size-major, then column order
  std::vector<ReplicateFailure> failures;

  const CellResult& cell(int n, const std::string& estimator, int order) const {
    for (const auto& c : cells)
      if (c.n == n && c.estimator == estimator && c.order == order) return c;
    throw ConfigError("result has no cell n=" + std::to_string(n) + " estimator=" + estimator);
  }
};

// ---------------------------------------------------------------------------
// Per-size context

struct SizeContext {
  std::shared_ptr<const Design> design;
  std::optional<Sampler> sampler;
  std::optional<DensePrecision> w_precision;  // true covariance of W
};

/// Covariance matrix of the last variable (W) over the design sites.
inline Eigen::MatrixXd w_covariance(const CovarianceModel& model, const Design& d) {
  const int w = model.num_vars() - 1;
  const Eigen::Index n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = model(w, w, d.sites[static_cast<std::size_t>(i)], d.sites[static_cast<std::size_t>(j)]);
      s(i, j) = v;
      s(j, i) = v;
    }
  return s;
}

inline EstimatorReport run_estimator(const EstimatorSpec& e, const FieldSample& s, const SizeContext& ctx,
                                     const ExperimentConfig& c) {
  if (e.id == "ols") return ratio_report("ols", 0, s.observed_x(), s.observed_y());
  if (e.id == "ols_diff") return ols_diff(s, e.order);
  if (e.id == "ols_lap") return ols_lap(s, e.order);
  if (e.id == "avg_then_diff") return avg_then_diff(s, e.order);
  if (e.id == "spacing_weighted_first") return spacing_weighted_first(s);
  if (e.id == "spacing_weighted_second") return spacing_weighted_second(s);
  if (e.id == "gls_exp") return gls_exp(s, e.lambda);
  if (e.id == "gls_true") {
    if (!ctx.w_precision) throw ConfigError("gls_true: no precision prepared");
    return gls(s.observed_x(), s.observed_y(), *ctx.w_precision, "gls_true");
  }
  if (e.id == "gls_matern_fitted") return gls_matern_fitted(s);
  if (e.id == "two_stage") {
    TwoStageSpec t;
    t.p_fine = std::max(e.order, 1);
    t.p_coarse = e.order_coarse > 0 ? e.order_coarse : t.p_fine;
    t.stride = c.fine_factor;
    return multivariate_two_stage(s, t);
  }
  throw ConfigError("unknown estimator '" + e.id + "'");
}

/// Runs every size of the experiment. `threads` only changes wall time.
inline ExperimentResult run_experiment(const ExperimentConfig& c, int threads = 1) {
  const CovarianceModel model = json_io::model_from_json(c.model);
  detail::require(static_cast<int>(c.beta.size()) == model.num_vars() - 1,
                  "experiment: number of slopes must match the number of exposures");
  const auto columns = output_columns(c);
  const bool need_w_prec =
      std::any_of(c.estimators.begin(), c.estimators.end(), [](const auto& e) { return e.id == "gls_true"; });

  ExperimentResult res;
  res.config = c;
  for (int size : c.sizes) {
    SizeContext ctx;
    ctx.design = std::make_shared<const Design>(make_design(design_for_size(c, size)));
    SampleOptions opts;
    opts.noise = c.noise;
    opts.heavy_tail = c.heavy_tail;
    ctx.sampler.emplace(model, ctx.design, opts);
    if (need_w_prec) ctx.w_precision.emplace(DensePrecision::from_covariance(w_covariance(model, *ctx.design)));

    const std::size_t R = static_cast<std::size_t>(c.n_replicates);
    std::vector<std::vector<double>> values(columns.size(),
                                            std::vector<double>(R, std::numeric_limits<double>::quiet_NaN()));
    std::vector<std::vector<std::string>> errors(c.estimators.size(), std::vector<std::string>(R));

    const std::size_t B = static_cast<std::size_t>(c.batch);
    const std::size_t n_batches = (R + B - 1) / B;
    parallel_for(n_batches, threads, [&](std::size_t b) {
      const std::size_t lo = b * B;
      const std::size_t hi = std::min(R, lo + B);
      std::vector<std::uint64_t> seeds;
      for (std::size_t r = lo; r < hi; ++r) seeds.push_back(c.base_seed + r);
      const auto samples = ctx.sampler->draw(c.beta, seeds);
      for (std::size_t k = 0; k < samples.size(); ++k) {
        const std::size_t r = lo + k;
        std::vector<std::optional<EstimatorReport>> reports(c.estimators.size());
        for (std::size_t e = 0; e < c.estimators.size(); ++e) {
          try {
            reports[e] = run_estimator(c.estimators[e], samples[k], ctx, c);
          } catch (const NumericalError& ex) {
            errors[e][r] = ex.what();
          }
        }
        for (std::size_t col = 0; col < columns.size(); ++col) {
          const auto& rep = reports[columns[col].spec];
          if (rep) values[col][r] = rep->beta.at(columns[col].component);
        }
      }
    });

    for (std::size_t e = 0; e < c.estimators.size(); ++e)
      for (std::size_t r = 0; r < R; ++r)
        if (!errors[e][r].empty())
          res.failures.push_back({size, static_cast<int>(r), c.estimators[e].id, errors[e][r]});
    for (std::size_t col = 0; col < columns.size(); ++col) {
      CellResult cell;
      cell.scenario = c.scenario;
      cell.n = size;
      cell.sites = ctx.design->size();
      cell.estimator = columns[col].label;
      cell.order = columns[col].order;
      cell.truth = columns[col].truth;
      cell.replicates = std::move(values[col]);
      res.cells.push_back(std::move(cell));
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Summaries

struct Summary {
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double bias = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();  // divisor R
  double mean = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  double q25 = std::numeric_limits<double>::quiet_NaN();
  double q75 = std::numeric_limits<double>::quiet_NaN();
  double iqr = std::numeric_limits<double>::quiet_NaN();
  int n_ok = 0;
  int n_failed = 0;
};

/// Type-7 sample quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& v, double p) {
  detail::require(!v.empty(), "quantile: empty input");
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// RMSE, bias and SD over the finite replicates. SD uses divisor R, so
/// rmse^2 = bias^2 + sd^2.
inline Summary summarize(const std::vector<double>& reps, double truth) {
  Summary s;
  std::vector<double> ok;
  for (double v : reps) {
    if (std::isfinite(v)) ok.push_back(v);
    else ++s.n_failed;
  }
  s.n_ok = static_cast<int>(ok.size());
  if (ok.empty()) return s;
  const double R = static_cast<double>(ok.size());
  double mean = 0.0;
  for (double v : ok) mean += v;
  mean /= R;
  double ss = 0.0, se = 0.0;
  for (double v : ok) {
    ss += (v - mean) * (v - mean);
    se += (v - truth) * (v - truth);
  }
  s.mean = mean;
  s.bias = mean - truth;
  s.sd = std::sqrt(ss / R);
  s.rmse = std::sqrt(se / R);
  std::sort(ok.begin(), ok.end());
  s.median = quantile_sorted(ok, 0.5);
  s.q25 = quantile_sorted(ok, 0.25);
  s.q75 = quantile_sorted(ok, 0.75);
  s.iqr = s.q75 - s.q25;
  return s;
}

struct SummaryRow {
  std::string scenario;
  int n = 0;
  std::string estimator;
  int order = 0;
  Summary stats;
};

inline std::vector<SummaryRow> summarize(const ExperimentResult& r) {
  std::vector<SummaryRow> rows;
  for (const auto& c : r.cells) rows.push_back({c.scenario, c.n, c.estimator, c.order, summarize(c.replicates, c.truth)});
  return rows;
}

inline Summary summarize(const CellResult& c) { return summarize(c.replicates, c.truth); }

// ---------------------------------------------------------------------------
// Rate diagnostics

struct RateFit {
  std::string scenario;
  std::string estimator;
  int order = 0;
  std::vector<double> log_n;
  std::vector<double> log_sd;
  double intercept = 0.0;
  double gamma_hat = 0.0;
  double gamma = 0.0;
  double gap = 0.0;  // gamma_hat - gamma
};

/// Principal irregular exponents (alpha_X, alpha_W) of a model.
inline std::pair<double, double> model_alphas(const CovarianceModel& m) {
  return {m.pit(0, 0).alpha, m.pit(m.num_vars() - 1, m.num_vars() - 1).alpha};
}

/// Least-squares slope of log SD on log N from (N, SD) pairs.
inline RateFit fit_rate(const std::vector<double>& n, const std::vector<double>& sd, double alpha_x,
                        double alpha_w, int d) {
  detail::require(n.size() == sd.size(), "rate_check: size and SD lists differ");
  if (n.size() < 4) throw ConfigError("rate_check: at least 4 sample sizes required");
  RateFit f;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(sd[i] > 0.0)) throw NumericalError("rate_check: nonpositive SD");
    f.log_n.push_back(std::log(n[i]));
    f.log_sd.push_back(std::log(sd[i]));
  }
  const double m = static_cast<double>(n.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    mx += f.log_n[i];
    my += f.log_sd[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    sxx += (f.log_n[i] - mx) * (f.log_n[i] - mx);
    sxy += (f.log_n[i] - mx) * (f.log_sd[i] - my);
  }
  if (sxx == 0.0) throw ConfigError("rate_check: sample sizes must differ");
  f.gamma_hat = sxy / sxx;
  f.intercept = my - f.gamma_hat * mx;
  f.gamma = rate_gamma(alpha_x, alpha_w, d);
  f.gap = f.gamma_hat - f.gamma;
  return f;
}

/// Rate fit for one estimator column, with N the configured size (total
/// sites for 2D lattices).
inline RateFit rate_check(const ExperimentResult& r, const std::string& estimator, int order, double alpha_x,
                          double alpha_w, int d) {
  std::vector<double> n, sd;
  for (const auto& c : r.cells) {
    if (c.estimator != estimator || c.order != order) continue;
    n.push_back(static_cast<double>(c.n));
    sd.push_back(summarize(c).sd);
  }
  RateFit f = fit_rate(n, sd, alpha_x, alpha_w, d);
  f.scenario = r.config.scenario;
  f.estimator = estimator;
  f.order = order;
  return f;
}

inline RateFit rate_check(const ExperimentResult& r, const std::string& estimator, int order) {
  const CovarianceModel m = json_io::model_from_json(r.config.model);
  const auto [ax, aw] = model_alphas(m);
  return rate_check(r, estimator, order, ax, aw, config_dimension(r.config));
}

/// Column used for the rate diagnostic: the Laplacian estimator when
/// present, otherwise the lowest-order difference estimator.
inline std::optional<std::pair<std::string, int>> rate_column(const ExperimentConfig& c) {
  std::optional<std::pair<std::string, int>> best;
  for (const auto& e : c.estimators)
    if (e.id == "ols_lap" && (!best || best->first != "ols_lap" || e.order < best->second)) best = {{e.id, e.order}};
  if (best) return best;
  for (const auto& e : c.estimators)
    if (e.id == "ols_diff" && e.order > 0 && (!best || e.order < best->second)) best = {{e.id, e.order}};
  return best;
}

}  // namespace confound

#endif
