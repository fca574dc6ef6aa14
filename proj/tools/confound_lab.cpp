// confound-lab: simulate fields, run estimators, classify estimability and
// run Monte Carlo experiments.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "confound.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace confound;

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::string out;
  int threads = 1;
};

std::vector<ExperimentConfig> load_configs(const Common& c) {
  if (c.config.empty() == c.preset.empty()) throw ConfigError("exactly one of --config and --preset is required");
  std::vector<ExperimentConfig> v =
      c.config.empty() ? preset_suite(c.preset) : json_io::experiments_from_json(read_json_file(c.config));
  for (auto& e : v) {
    if (c.seed) e.base_seed = *c.seed;
    if (c.reps) {
      detail::require(*c.reps >= 1, "--reps must be >= 1");
      e.n_replicates = *c.reps;
    }
  }
  return v;
}

// "a:b:n" -> linspace(a, b, n)
std::vector<double> parse_range(const std::string& s, const std::string& flag) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string p;
  while (std::getline(ss, p, ':')) parts.push_back(p);
  if (parts.size() != 3) throw ConfigError(flag + ": expected a:b:n");
  const double a = parse_double(parts[0], flag);
  const double b = parse_double(parts[1], flag);
  const int n = static_cast<int>(parse_double(parts[2], flag));
  return linspace(a, b, n);
}

std::vector<int> parse_sizes(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string p;
  while (std::getline(ss, p, ',')) out.push_back(static_cast<int>(parse_double(p, "--sizes")));
  detail::require(!out.empty(), "--sizes: empty list");
  return out;
}

json report_json(const EstimatorReport& r) {
  json d = json::object();
  for (const auto& [k, v] : r.diagnostics) d[k] = v;
  return {{"estimator", r.estimator}, {"order", r.order},           {"beta_hat", r.beta_hat},
          {"beta", r.beta},           {"numerator", r.numerator},   {"denominator", r.denominator},
          {"n_effective", r.n_effective}, {"diagnostics", d}};
}

// --- subcommands -------------------------------------------------------------

int cmd_simulate(const Common& c, std::optional<int> size) {
  const auto configs = load_configs(c);
  const ExperimentConfig& e = configs.front();
  const int n = size ? *size : e.sizes.front();
  const DesignSpec ds = design_for_size(e, n);
  const CovarianceModel model = json_io::model_from_json(e.model);
  SampleOptions opts{e.noise, e.heavy_tail};
  Sampler sampler(model, std::make_shared<const Design>(make_design(ds)), opts);
  const std::uint64_t seed = c.seed ? *c.seed : e.base_seed;
  const FieldSample s = sampler.draw_one(e.beta, seed);
  SampleHeader h{ds, e.model, e.beta, seed, e.noise, e.heavy_tail};
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  ensure_dir(dir);
  write_sample(s, h, dir / "sample.csv");
  std::cout << (dir / "sample.csv").string() << '\n';
  return 0;
}

struct EstimateArgs {
  std::string sample;
  std::string estimator = "ols_diff";
  int order = 1;
  int order_coarse = 0;
  int stride = 4;
  std::optional<double> lambda;
  std::string working_cov;
};

EstimatorReport run_estimate(const EstimateArgs& a, const FieldSample& s, const SampleHeader& h) {
  const std::string& id = a.estimator;
  if (id == "gls" || id == "gls_exp" || id == "gls_true" || id == "gls_matern_fitted" || id == "gls_matern") {
    std::string wc = a.working_cov;
    if (id == "gls_exp") wc = "exp";
    if (id == "gls_true") wc = "true";
    if (id == "gls_matern_fitted") wc = "matern";
    if (wc.empty()) throw ConfigError("gls: --working-cov is required (exp, matern, true or a JSON file)");
    if (wc == "exp") return gls_exp(s, a.lambda);
    if (wc == "matern") return gls_matern_fitted(s);
    if (wc == "true") {
      if (h.model.is_null()) throw ConfigError("gls: working covariance 'true' needs a sample sidecar with a model");
      const CovarianceModel m = json_io::model_from_json(h.model);
      return gls(s.observed_x(), s.observed_y(), DensePrecision::from_covariance(w_covariance(m, *s.design)),
                 "gls_true");
    }
    const json j = read_json_file(wc);
    return gls_matern_fixed(s, json_io::matern_from_json(j, wc));
  }
  if (id == "ols") return ratio_report("ols", 0, s.observed_x(), s.observed_y());
  if (id == "ols_diff") return ols_diff(s, a.order);
  if (id == "ols_lap") return ols_lap(s, a.order);
  if (id == "avg_then_diff") return avg_then_diff(s, a.order);
  if (id == "spacing_weighted_first") return spacing_weighted_first(s);
  if (id == "spacing_weighted_second") return spacing_weighted_second(s);
  if (id == "two_stage") {
    TwoStageSpec t{a.order, a.order_coarse > 0 ? a.order_coarse : a.order, a.stride};
    return multivariate_two_stage(s, t);
  }
  throw ConfigError("unknown estimator '" + id + "'");
}

int cmd_estimate(const EstimateArgs& a) {
  SampleHeader h;
  const FieldSample s = read_sample(a.sample, &h);
  const EstimatorReport r = run_estimate(a, s, h);
  std::cout << "estimator,order,beta_hat,numerator,denominator,n_effective\n";
  std::cout << r.estimator << ',' << r.order << ',' << fmt_g(r.beta_hat) << ',' << fmt_g(r.numerator) << ','
            << fmt_g(r.denominator) << ',' << r.n_effective << '\n';
  std::cout << report_json(r).dump() << '\n';
  return 0;
}

struct RegionArgs {
  int d = 1;
  std::string nu_x = "0.1:3:30";
  std::string nu_w = "0.1:3:30";
  std::string rule = "offset";
  double offset = 0.25;
  std::string out;
};

int cmd_region(const RegionArgs& a) {
  detail::require(a.d == 1 || a.d == 2, "--d must be 1 or 2");
  CrossRule rule;
  if (a.rule == "offset") rule = CrossRule::offset;
  else if (a.rule == "mean") rule = CrossRule::mean;
  else throw ConfigError("--nu-xw-rule must be offset or mean");
  const auto cells = region_map(a.d, parse_range(a.nu_x, "--nu-x-range"), parse_range(a.nu_w, "--nu-w-range"),
                                rule, a.offset);
  std::ostringstream os;
  os << "nu_x,nu_w,nu_xw,status,code,min_order\n";
  for (const auto& c : cells)
    os << fmt_g(c.nu_x) << ',' << fmt_g(c.nu_w) << ',' << fmt_g(c.nu_xw) << ',' << to_string(c.verdict.status)
       << ',' << region_code(c.verdict.status) << ',' << c.verdict.min_order << '\n';
  if (a.out.empty()) {
    std::cout << os.str();
  } else {
    const fs::path p(a.out);
    if (p.has_parent_path()) ensure_dir(p.parent_path());
    OutFile f(p);
    f << os.str();
    f.close();
  }
  return 0;
}

int cmd_recommend(const std::string& sample, int max_order) {
  const FieldSample s = read_sample(sample);
  const AlphaEstimate ax = estimate_alpha(s.observed_x(), *s.design, max_order);
  const AlphaEstimate ay = estimate_alpha(s.observed_y(), *s.design, max_order);
  json out = {{"alpha_xx", ax.alpha_hat},
              {"alpha_yy", ay.alpha_hat},
              {"alpha_xx_status", ax.status == AlphaStatus::ok ? "ok" : "inconclusive"},
              {"alpha_yy_status", ay.status == AlphaStatus::ok ? "ok" : "inconclusive"},
              {"d", s.design->dimension()}};
  if (ax.status != AlphaStatus::ok || ay.status != AlphaStatus::ok) {
    out["verdict"] = "inconclusive";
    std::cout << out.dump(2) << '\n';
    return 3;
  }
  const Recommendation r = recommend_from_alpha(ax.alpha_hat, ay.alpha_hat, s.design->dimension());
  out["verdict"] = r.feasible ? "feasible" : "infeasible";
  out["estimator"] = r.estimator;
  out["order"] = r.order;
  out["rationale"] = r.rationale;
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_experiment(const Common& c, const std::string& sizes) {
  auto configs = load_configs(c);
  if (!sizes.empty())
    for (auto& e : configs) e.sizes = parse_sizes(sizes);
  std::vector<ExperimentResult> results;
  for (const auto& e : configs) {
    std::cerr << "running " << e.scenario << " (" << e.n_replicates << " replicates)\n";
    results.push_back(run_experiment(e, c.threads));
  }
  if (!c.out.empty()) write_reports(results, c.out);
  std::cout << kResultsHeader << '\n';
  for (const auto& r : results)
    for (const auto& row : summarize(r))
      std::cout << row.scenario << ',' << row.n << ',' << row.estimator << ',' << row.order << ','
                << fmt_g(row.stats.rmse, 6) << ',' << fmt_g(row.stats.bias, 6) << ',' << fmt_g(row.stats.sd, 6)
                << ',' << row.stats.n_failed << '\n';
  return 0;
}

int cmd_rate_check(const std::string& in, const std::string& out) {
  const auto fits = rate_fits_from_dir(in);
  write_rate_files(fits, out.empty() ? fs::path(in) : fs::path(out));
  std::cout << "scenario,estimator,order,gamma_hat,gamma,gap\n";
  for (const auto& f : fits)
    std::cout << f.scenario << ',' << f.estimator << ',' << f.order << ',' << fmt_g(f.gamma_hat, 6) << ','
              << fmt_g(f.gamma, 6) << ',' << fmt_g(f.gap, 6) << '\n';
  return 0;
}

void add_common(CLI::App* app, Common& c, bool with_threads) {
  app->add_option("--config", c.config, "experiment config (JSON)");
  app->add_option("--preset", c.preset, "preset scenario or suite name");
  app->add_option("--seed", c.seed, "override the base seed");
  app->add_option("--reps", c.reps, "override the number of replicates");
  app->add_option("--out", c.out, "output directory");
  if (with_threads) app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confound-lab: spatial confounding simulations and estimators"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common sim;
  std::optional<int> sim_n;
  auto* s = app.add_subcommand("simulate", "draw one sample and write it as CSV + JSON sidecar");
  add_common(s, sim, false);
  s->add_option("--n", sim_n, "size (default: first configured size)");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "run one estimator on a sample CSV");
  e->add_option("--sample", est.sample, "sample CSV")->required();
  e->add_option("--estimator", est.estimator, "estimator id");
  e->add_option("--order", est.order, "difference / Laplacian order");
  e->add_option("--order-coarse", est.order_coarse, "two_stage coarse order");
  e->add_option("--stride", est.stride, "two_stage fine sites per coarse step");
  e->add_option("--lambda", est.lambda, "fixed exponential decay for gls_exp");
  e->add_option("--working-cov", est.working_cov, "gls working covariance: exp, matern, true or JSON file");

  RegionArgs reg;
  auto* r = app.add_subcommand("region", "classify a grid of Matern smoothness pairs");
  r->add_option("--d", reg.d, "domain dimension");
  r->add_option("--nu-x-range", reg.nu_x, "a:b:n");
  r->add_option("--nu-w-range", reg.nu_w, "a:b:n");
  r->add_option("--nu-xw-rule", reg.rule, "offset (nu_x + c) or mean ((nu_x + nu_w)/2 + c)");
  r->add_option("--nu-xw-offset", reg.offset, "c");
  r->add_option("--out", reg.out, "CSV output path (default stdout)");

  std::string rec_sample;
  int rec_max_order = 4;
  auto* rc = app.add_subcommand("recommend", "estimate exponents from a sample and suggest an estimator");
  rc->add_option("--sample", rec_sample, "sample CSV")->required();
  rc->add_option("--max-order", rec_max_order, "largest increment order tried");

  Common exp;
  std::string exp_sizes;
  auto* x = app.add_subcommand("experiment", "run Monte Carlo experiments");
  add_common(x, exp, true);
  x->add_option("--sizes", exp_sizes, "override sizes, comma separated");

  std::string rate_in, rate_out;
  auto* rt = app.add_subcommand("rate-check", "fit log SD against log N from an experiment directory");
  rt->add_option("--in", rate_in, "experiment output directory")->required();
  rt->add_option("--out", rate_out, "where to write rate.csv (default: --in)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc_parse = app.exit(err);
    return rc_parse == 0 ? 0 : 2;
  }

  try {
    if (*s) return cmd_simulate(sim, sim_n);
    if (*e) return cmd_estimate(est);
    if (*r) return cmd_region(reg);
    if (*rc) return cmd_recommend(rec_sample, rec_max_order);
    if (*x) return cmd_experiment(exp, exp_sizes);
    if (*rt) return cmd_rate_check(rate_in, rate_out);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return 2;
  } catch (const json::exception& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return 2;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << '\n';
    return 3;
  }
  return 2;
}
