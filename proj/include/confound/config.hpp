#ifndef CONFOUND_CONFIG_HPP
#define CONFOUND_CONFIG_HPP

// Experiment configuration and its strict JSON form.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "confound/covmodels.hpp"
#include "confound/design.hpp"
#include "confound/error.hpp"
#include "confound/fields.hpp"
#include "confound/model_json.hpp"

namespace confound {

struct EstimatorSpec {
  std::string id;                 // ols, ols_diff, ols_lap, avg_then_diff, spacing_weighted_first,
                                  // spacing_weighted_second, gls_exp, gls_true, gls_matern_fitted,
                                  // two_stage
  int order = 0;                  // p or m; fine-grid order for two_stage
  int order_coarse = 0;           // two_stage coarse order (0: same as order)
  std::optional<double> lambda;   // gls_exp: fixed decay, fitted when absent

  bool operator==(const EstimatorSpec&) const = default;
};

inline const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> ids = {
      "ols",     "ols_diff", "ols_lap",           "avg_then_diff", "spacing_weighted_first",
      "spacing_weighted_second", "gls_exp", "gls_true", "gls_matern_fitted", "two_stage"};
  return ids;
}

struct ExperimentConfig {
  std::string scenario;
  nlohmann::json model;  // covariance model in the JSON model format
  DesignSpec design;     // n is overwritten by each entry of `sizes`
  std::vector<int> sizes;
  int fine_factor = 1;   // design size = fine_factor * size (two-grid estimator)
  std::vector<double> beta{2.0};
  std::vector<EstimatorSpec> estimators;
  int n_replicates = 100;
  std::uint64_t base_seed = 1;
  int batch = 20;  // replicates sampled per matrix product
  NoiseSpec noise;
  HeavyTailSpec heavy_tail;
  std::string output_dir;
};

/// Design for one entry of the size list. For grid2d the size is the total
/// number of sites, which must be a perfect square.
inline DesignSpec design_for_size(const ExperimentConfig& c, int size) {
  DesignSpec s = c.design;
  if (s.kind == DesignKind::grid2d) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(size))));
    detail::require(side * side == size, "grid2d sizes must be perfect squares (total site counts)");
    s.n = side - 1;
  } else {
    s.n = size * c.fine_factor;
  }
  if (s.kind == DesignKind::irregular1d) s.seed = c.base_seed + 7919ULL * static_cast<std::uint64_t>(size);
  return s;
}

/// Dimension of the domain of an experiment.
inline int config_dimension(const ExperimentConfig& c) { return c.design.kind == DesignKind::grid2d ? 2 : 1; }

// ---------------------------------------------------------------------------
// JSON

namespace json_io {

inline json to_json(const EstimatorSpec& e) {
  json j = {{"id", e.id}, {"order", e.order}};
  if (e.order_coarse != 0) j["order_coarse"] = e.order_coarse;
  if (e.lambda) j["lambda"] = *e.lambda;
  return j;
}

inline EstimatorSpec estimator_from_json(const json& j) {
  require_keys(j, {"id", "order", "order_coarse", "lambda"}, "estimator");
  EstimatorSpec e;
  if (!j.contains("id") || !j.at("id").is_string()) throw ConfigError("estimator: 'id' string required");
  e.id = j.at("id").get<std::string>();
  bool known = false;
  for (const auto& k : known_estimators()) known = known || k == e.id;
  if (!known) throw ConfigError("estimator: unknown id '" + e.id + "'");
  if (j.contains("order")) e.order = j.at("order").get<int>();
  if (j.contains("order_coarse")) e.order_coarse = j.at("order_coarse").get<int>();
  if (j.contains("lambda")) e.lambda = get_number(j, "lambda", "estimator");
  detail::require(e.order >= 0 && e.order_coarse >= 0, "estimator: orders must be >= 0");
  return e;
}

inline json to_json(const DesignSpec& d) {
  json j = {{"kind", to_string(d.kind)}, {"L", d.L}};
  if (d.kind == DesignKind::nested1d) {
    j["rho"] = d.rho;
    if (d.half_width >= 0) j["half_width"] = d.half_width;
  }
  if (d.kind == DesignKind::irregular1d) j["oversample"] = d.oversample;
  return j;
}

inline DesignSpec design_from_json(const json& j) {
  require_keys(j, {"kind", "L", "rho", "half_width", "oversample", "n", "seed"}, "design");
  DesignSpec d;
  if (!j.contains("kind")) throw ConfigError("design: 'kind' required");
  d.kind = design_kind_from_string(j.at("kind").get<std::string>());
  d.L = get_number_or(j, "L", 1.0, "design");
  d.rho = get_number_or(j, "rho", 0.5, "design");
  if (j.contains("half_width")) d.half_width = j.at("half_width").get<int>();
  if (j.contains("oversample")) d.oversample = j.at("oversample").get<int>();
  if (j.contains("n")) d.n = j.at("n").get<int>();
  if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
  return d;
}

inline json to_json(const NoiseSpec& n) {
  json j = json::object();
  if (n.tau2_x) j["tau2_x"] = *n.tau2_x;
  if (n.tau2_y) j["tau2_y"] = *n.tau2_y;
  return j;
}

inline NoiseSpec noise_from_json(const json& j) {
  require_keys(j, {"tau2_x", "tau2_y"}, "noise");
  NoiseSpec n;
  if (j.contains("tau2_x")) n.tau2_x = get_number(j, "tau2_x", "noise");
  if (j.contains("tau2_y")) n.tau2_y = get_number(j, "tau2_y", "noise");
  return n;
}

inline json to_json(const HeavyTailSpec& h) {
  json j = {{"enabled", h.enabled},
            {"marginal", h.marginal == ScaleMarginal::exponential ? "exponential" : "inverse_gamma"},
            {"kappa", scalar_fn_to_json(h.kappa)},
            {"rate", h.rate},
            {"length_scale", h.length_scale},
            {"knots", h.knots},
            {"apply_x", h.apply_x},
            {"apply_w", h.apply_w}};
  return j;
}

inline HeavyTailSpec heavy_tail_from_json(const json& j) {
  require_keys(j, {"enabled", "marginal", "kappa", "rate", "length_scale", "knots", "apply_x", "apply_w"},
               "heavy_tail");
  HeavyTailSpec h;
  if (j.contains("enabled")) h.enabled = j.at("enabled").get<bool>();
  if (j.contains("marginal")) {
    const auto m = j.at("marginal").get<std::string>();
    if (m == "inverse_gamma") h.marginal = ScaleMarginal::inverse_gamma;
    else if (m == "exponential") h.marginal = ScaleMarginal::exponential;
    else throw ConfigError("heavy_tail: marginal must be inverse_gamma or exponential");
  }
  if (j.contains("kappa")) h.kappa = scalar_fn_from_json(j.at("kappa"), "heavy_tail.kappa");
  h.rate = get_number_or(j, "rate", h.rate, "heavy_tail");
  h.length_scale = get_number_or(j, "length_scale", h.length_scale, "heavy_tail");
  if (j.contains("knots")) h.knots = j.at("knots").get<int>();
  if (j.contains("apply_x")) h.apply_x = j.at("apply_x").get<bool>();
  if (j.contains("apply_w")) h.apply_w = j.at("apply_w").get<bool>();
  return h;
}

inline json to_json(const ExperimentConfig& c) {
  json est = json::array();
  for (const auto& e : c.estimators) est.push_back(to_json(e));
  json j = {{"scenario", c.scenario},
            {"model", c.model},
            {"design", to_json(c.design)},
            {"sizes", c.sizes},
            {"fine_factor", c.fine_factor},
            {"beta", c.beta},
            {"estimators", est},
            {"replicates", c.n_replicates},
            {"base_seed", c.base_seed},
            {"batch", c.batch},
            {"noise", to_json(c.noise)},
            {"heavy_tail", to_json(c.heavy_tail)}};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

inline ExperimentConfig experiment_from_json(const json& j) {
  require_keys(j, {"scenario", "model", "design", "sizes", "fine_factor", "beta", "estimators", "replicates",
                   "base_seed", "batch", "noise", "heavy_tail", "output_dir"},
               "experiment");
  for (const char* k : {"scenario", "model", "design", "sizes", "estimators"})
    if (!j.contains(k)) throw ConfigError(std::string("experiment: '") + k + "' required");
  ExperimentConfig c;
  c.scenario = j.at("scenario").get<std::string>();
  c.model = j.at("model");
  (void)model_from_json(c.model);  // validate now
  c.design = design_from_json(j.at("design"));
  c.sizes = j.at("sizes").get<std::vector<int>>();
  if (j.contains("fine_factor")) c.fine_factor = j.at("fine_factor").get<int>();
  if (j.contains("beta")) c.beta = j.at("beta").get<std::vector<double>>();
  for (const auto& e : j.at("estimators")) c.estimators.push_back(estimator_from_json(e));
  if (j.contains("replicates")) c.n_replicates = j.at("replicates").get<int>();
  if (j.contains("base_seed")) c.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (j.contains("batch")) c.batch = j.at("batch").get<int>();
  if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
  if (j.contains("heavy_tail")) c.heavy_tail = heavy_tail_from_json(j.at("heavy_tail"));
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  detail::require(c.n_replicates >= 1, "experiment: replicates must be >= 1");
  detail::require(c.batch >= 1, "experiment: batch must be >= 1");
  detail::require(c.fine_factor >= 1, "experiment: fine_factor must be >= 1");
  detail::require(!c.sizes.empty(), "experiment: at least one size required");
  detail::require(!c.estimators.empty(), "experiment: at least one estimator required");
  detail::require(!c.beta.empty() && c.beta.size() <= 2, "experiment: beta must have 1 or 2 entries");
  return c;
}

/// A config file holds one experiment object or {"experiments": [...]}.
inline std::vector<ExperimentConfig> experiments_from_json(const json& j) {
  std::vector<ExperimentConfig> out;
  if (j.is_object() && j.contains("experiments")) {
    require_keys(j, {"experiments"}, "config");
    for (const auto& e : j.at("experiments")) out.push_back(experiment_from_json(e));
  } else {
    out.push_back(experiment_from_json(j));
  }
  return out;
}

}  // namespace json_io
}  // namespace confound

#endif
