#ifndef CONFOUND_MODEL_JSON_HPP
#define CONFOUND_MODEL_JSON_HPP

// Strict JSON (de)serialisation of covariance models:
//   {"family": "matern" | "powexp" | "gencauchy" | "bivariate_matern" |
//              "multivariate_matern" | "lmc" | "warped" | "paciorek",
//    "params": {...}}
// Unknown keys are rejected. Field names are listed in README.md.

#include <initializer_list>
#include <memory>
#include <string>

#include <json.hpp>

#include "confound/covmodels.hpp"
#include "confound/error.hpp"

namespace confound::json_io {

using nlohmann::json;

inline void require_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

inline double get_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

inline double get_number_or(const json& j, const char* key, double fallback,
                            const std::string& where) {
  return j.contains(key) ? get_number(j, key, where) : fallback;
}

// --- scalar functions -------------------------------------------------------

inline ScalarFn scalar_fn_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return ScalarFn::constant(j.get<double>());
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(where + ": function needs 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    require_keys(j, {"kind", "value"}, where);
    return ScalarFn::constant(get_number(j, "value", where));
  }
  if (kind == "affine") {
    require_keys(j, {"kind", "a", "b"}, where);
    return ScalarFn(AffineFn{get_number(j, "a", where), get_number(j, "b", where)});
  }
  if (kind == "piecewise_affine") {
    require_keys(j, {"kind", "knots", "values"}, where);
    return ScalarFn(PiecewiseAffineFn{j.at("knots").get<std::vector<double>>(),
                                      j.at("values").get<std::vector<double>>()});
  }
  if (kind == "sigmoid") {
    require_keys(j, {"kind", "lo", "hi", "center", "width"}, where);
    return ScalarFn(SigmoidFn{get_number(j, "lo", where), get_number(j, "hi", where),
                              get_number(j, "center", where), get_number(j, "width", where)});
  }
  throw ConfigError(where + ": unknown function kind '" + kind + "'");
}

inline json scalar_fn_to_json(const ScalarFn& f) {
  struct V {
    json operator()(const ConstantFn& c) const { return {{"kind", "constant"}, {"value", c.value}}; }
    json operator()(const AffineFn& c) const { return {{"kind", "affine"}, {"a", c.a}, {"b", c.b}}; }
    json operator()(const PiecewiseAffineFn& c) const {
      return {{"kind", "piecewise_affine"}, {"knots", c.knots}, {"values", c.values}};
    }
    json operator()(const SigmoidFn& c) const {
      return {{"kind", "sigmoid"}, {"lo", c.lo}, {"hi", c.hi}, {"center", c.center},
              {"width", c.width}};
    }
  };
  return std::visit(V{}, f.rep());
}

inline Warp warp_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(where + ": warp needs 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") {
    require_keys(j, {"kind"}, where);
    return Warp::identity();
  }
  if (kind == "affine") {
    require_keys(j, {"kind", "a", "b"}, where);
    return Warp::affine(get_number(j, "a", where), get_number(j, "b", where));
  }
  if (kind == "piecewise_affine") {
    require_keys(j, {"kind", "knots", "values"}, where);
    return Warp::piecewise_affine(j.at("knots").get<std::vector<double>>(),
                                  j.at("values").get<std::vector<double>>());
  }
  if (kind == "sigmoid") {
    require_keys(j, {"kind", "center", "width"}, where);
    return Warp::sigmoid(get_number(j, "center", where), get_number(j, "width", where));
  }
  throw ConfigError(where + ": unknown warp kind '" + kind + "'");
}

inline json warp_to_json(const Warp& w) {
  switch (w.kind()) {
    case Warp::Kind::identity:
      return {{"kind", "identity"}};
    case Warp::Kind::affine: {
      const auto& a = std::get<AffineFn>(w.shape().rep());
      return {{"kind", "affine"}, {"a", a.a}, {"b", a.b}};
    }
    case Warp::Kind::piecewise_affine: {
      const auto& p = std::get<PiecewiseAffineFn>(w.shape().rep());
      return {{"kind", "piecewise_affine"}, {"knots", p.knots}, {"values", p.values}};
    }
    case Warp::Kind::sigmoid: {
      const auto& s = std::get<SigmoidFn>(w.shape().rep());
      return {{"kind", "sigmoid"}, {"center", s.center}, {"width", s.width}};
    }
  }
  return {};
}

// --- univariate families ----------------------------------------------------

inline MaternParams matern_from_json(const json& j, const std::string& where) {
  require_keys(j, {"sigma2", "rho", "nu"}, where);
  MaternParams p{get_number_or(j, "sigma2", 1.0, where), get_number(j, "rho", where),
                 get_number(j, "nu", where)};
  p.validate();
  return p;
}

inline json to_json(const MaternParams& p) {
  return {{"sigma2", p.sigma2}, {"rho", p.rho}, {"nu", p.nu}};
}

inline PowExpParams powexp_from_json(const json& j, const std::string& where) {
  require_keys(j, {"sigma2", "phi", "delta"}, where);
  PowExpParams p{get_number_or(j, "sigma2", 1.0, where), get_number(j, "phi", where),
                 get_number(j, "delta", where)};
  p.validate();
  return p;
}

inline json to_json(const PowExpParams& p) {
  return {{"sigma2", p.sigma2}, {"phi", p.phi}, {"delta", p.delta}};
}

inline GenCauchyParams gencauchy_from_json(const json& j, const std::string& where) {
  require_keys(j, {"sigma2", "phi", "delta", "kappa"}, where);
  GenCauchyParams p{get_number_or(j, "sigma2", 1.0, where), get_number(j, "phi", where),
                    get_number(j, "delta", where), get_number(j, "kappa", where)};
  p.validate();
  return p;
}

inline json to_json(const GenCauchyParams& p) {
  return {{"sigma2", p.sigma2}, {"phi", p.phi}, {"delta", p.delta}, {"kappa", p.kappa}};
}

inline UnivariateModel univariate_from_json(const json& j, const std::string& where) {
  require_keys(j, {"family", "params"}, where);
  const std::string fam = j.at("family").get<std::string>();
  const json& p = j.at("params");
  if (fam == "matern") return matern_from_json(p, where + ".params");
  if (fam == "powexp") return powexp_from_json(p, where + ".params");
  if (fam == "gencauchy") return gencauchy_from_json(p, where + ".params");
  if (fam == "nugget") {
    require_keys(p, {"sigma2"}, where + ".params");
    NuggetParams n{get_number(p, "sigma2", where)};
    n.validate();
    return n;
  }
  throw ConfigError(where + ": unknown univariate family '" + fam + "'");
}

inline json univariate_to_json(const UnivariateModel& m) {
  struct V {
    json operator()(const MaternParams& p) const { return {{"family", "matern"}, {"params", to_json(p)}}; }
    json operator()(const PowExpParams& p) const { return {{"family", "powexp"}, {"params", to_json(p)}}; }
    json operator()(const GenCauchyParams& p) const {
      return {{"family", "gencauchy"}, {"params", to_json(p)}};
    }
    json operator()(const NuggetParams& p) const {
      return {{"family", "nugget"}, {"params", {{"sigma2", p.sigma2}}}};
    }
  };
  return std::visit(V{}, m);
}

// --- models -----------------------------------------------------------------

CovarianceModel model_from_json(const json& j, const std::string& where = "model");
json model_to_json(const CovarianceModel& m);

namespace detail_json {

inline MultiMatern multi_matern_from_json(const json& p, const std::string& where) {
  require_keys(p, {"marginals", "cross"}, where);
  MultiMatern m;
  for (const auto& mj : p.at("marginals")) m.marginals.push_back(matern_from_json(mj, where + ".marginals"));
  const int q = m.num_vars();
  detail::require(q >= 1 && q <= 3, where + ": 1 to 3 marginals supported");
  m.nu = PairTable<double>(q, 0.0);
  m.range = PairTable<double>(q, 0.0);
  m.corr = PairTable<double>(q, 1.0);
  for (int k = 0; k < q; ++k) {
    m.nu(k, k) = m.marginals[k].nu;
    m.range(k, k) = m.marginals[k].rho;
  }
  std::vector<bool> seen(static_cast<std::size_t>(q * q), false);
  if (p.contains("cross")) {
    for (const auto& c : p.at("cross")) {
      require_keys(c, {"i", "j", "nu", "range", "corr"}, where + ".cross");
      const int i = c.at("i").get<int>();
      const int jj = c.at("j").get<int>();
      detail::require(i >= 0 && jj >= 0 && i < q && jj < q && i != jj,
                      where + ".cross: bad variable indices");
      m.nu(i, jj) = get_number(c, "nu", where);
      m.range(i, jj) = get_number(c, "range", where);
      m.corr(i, jj) = get_number(c, "corr", where);
      seen[static_cast<std::size_t>(std::min(i, jj) * q + std::max(i, jj))] = true;
    }
  }
  for (int k = 0; k < q; ++k)
    for (int l = k + 1; l < q; ++l)
      detail::require(seen[static_cast<std::size_t>(k * q + l)],
                      where + ": every cross pair needs an entry");
  m.validate();
  return m;
}

template <class P, class Parse>
BivariateFamily<P> bivariate_family_from_json(const json& p, const std::string& where, Parse parse) {
  require_keys(p, {"x", "w", "cross", "rho_xw"}, where);
  BivariateFamily<P> m;
  m.x = parse(p.at("x"), where + ".x");
  m.w = parse(p.at("w"), where + ".w");
  json cj = p.at("cross");
  detail::require(cj.is_object(), where + ".cross must be an object");
  if (!cj.contains("sigma2")) cj["sigma2"] = 1.0;
  m.cross = parse(cj, where + ".cross");
  m.rho_xw = get_number(p, "rho_xw", where);
  m.validate();
  return m;
}

}  // namespace detail_json

inline CovarianceModel model_from_json(const json& j, const std::string& where) {
  require_keys(j, {"family", "params"}, where);
  if (!j.contains("family") || !j.contains("params"))
    throw ConfigError(where + ": 'family' and 'params' required");
  const std::string fam = j.at("family").get<std::string>();
  const json& p = j.at("params");
  const std::string pw = where + ".params";

  if (fam == "matern") {
    const MaternParams m = matern_from_json(p, pw);
    MultiMatern mm;
    mm.marginals = {m};
    mm.nu = PairTable<double>(1, m.nu);
    mm.range = PairTable<double>(1, m.rho);
    mm.corr = PairTable<double>(1, 1.0);
    return CovarianceModel(mm);
  }
  if (fam == "bivariate_matern") {
    require_keys(p, {"x", "w", "nu_xw", "rho_xw", "range_xw"}, pw);
    const MaternParams x = matern_from_json(p.at("x"), pw + ".x");
    const MaternParams w = matern_from_json(p.at("w"), pw + ".w");
    const double range_xw =
        p.contains("range_xw") ? get_number(p, "range_xw", pw) : std::numeric_limits<double>::quiet_NaN();
    return CovarianceModel(
        bivariate_matern(x, w, get_number(p, "nu_xw", pw), get_number(p, "rho_xw", pw), range_xw));
  }
  if (fam == "multivariate_matern") return CovarianceModel(detail_json::multi_matern_from_json(p, pw));
  if (fam == "powexp") {
    return CovarianceModel(detail_json::bivariate_family_from_json<PowExpParams>(
        p, pw, [](const json& x, const std::string& w) { return powexp_from_json(x, w); }));
  }
  if (fam == "gencauchy") {
    return CovarianceModel(detail_json::bivariate_family_from_json<GenCauchyParams>(
        p, pw, [](const json& x, const std::string& w) { return gencauchy_from_json(x, w); }));
  }
  if (fam == "lmc") {
    require_keys(p, {"components"}, pw);
    Lmc lmc;
    for (const auto& c : p.at("components")) {
      require_keys(c, {"model", "weights"}, pw + ".components");
      lmc.components.push_back(
          LmcComponent{univariate_from_json(c.at("model"), pw + ".components.model"),
                       c.at("weights").get<std::vector<double>>()});
    }
    return CovarianceModel(lmc);
  }
  if (fam == "warped") {
    require_keys(p, {"base", "warp", "L"}, pw);
    WarpedModel w;
    w.base = std::make_shared<const CovarianceModel>(model_from_json(p.at("base"), pw + ".base"));
    w.warp = warp_from_json(p.at("warp"), pw + ".warp");
    w.L = get_number_or(p, "L", 1.0, pw);
    return CovarianceModel(w);
  }
  if (fam == "paciorek") {
    require_keys(p, {"base", "sigma", "phi", "L"}, pw);
    PaciorekModel m;
    m.base = std::make_shared<const CovarianceModel>(model_from_json(p.at("base"), pw + ".base"));
    m.L = get_number_or(p, "L", 1.0, pw);
    const int q = m.base->num_vars();
    for (const auto& s : p.at("sigma")) m.sigma.push_back(scalar_fn_from_json(s, pw + ".sigma"));
    detail::require(static_cast<int>(m.sigma.size()) == q, pw + ": one sigma function per variable");
    m.phi.assign(static_cast<std::size_t>(q * q), ScalarFn::constant(1.0));
    std::vector<bool> explicit_lk(static_cast<std::size_t>(q * q), false);
    for (const auto& e : p.at("phi")) {
      require_keys(e, {"block", "fn", "fn_transpose"}, pw + ".phi");
      const auto blk = e.at("block").get<std::vector<int>>();
      detail::require(blk.size() == 2 && blk[0] >= 0 && blk[1] >= 0 && blk[0] < q && blk[1] < q,
                      pw + ".phi: bad block");
      const ScalarFn f = scalar_fn_from_json(e.at("fn"), pw + ".phi.fn");
      const std::size_t kl = static_cast<std::size_t>(blk[0] * q + blk[1]);
      const std::size_t lk = static_cast<std::size_t>(blk[1] * q + blk[0]);
      m.phi[kl] = f;
      if (e.contains("fn_transpose")) {
        m.phi[lk] = scalar_fn_from_json(e.at("fn_transpose"), pw + ".phi.fn_transpose");
        explicit_lk[lk] = true;
      } else if (!explicit_lk[lk]) {
        m.phi[lk] = f;
      }
    }
    return CovarianceModel(m);
  }
  throw ConfigError(where + ": unknown family '" + fam + "'");
}

namespace detail_json {
template <class P>
json bivariate_to_json(const BivariateFamily<P>& m, const char* fam) {
  json c = to_json(m.cross);
  c.erase("sigma2");
  return {{"family", fam},
          {"params", {{"x", to_json(m.x)}, {"w", to_json(m.w)}, {"cross", c}, {"rho_xw", m.rho_xw}}}};
}
}  // namespace detail_json

inline json model_to_json(const CovarianceModel& model) {
  struct V {
    json operator()(const MultiMatern& m) const {
      if (m.num_vars() == 1) return {{"family", "matern"}, {"params", to_json(m.marginals[0])}};
      if (m.num_vars() == 2) {
        json p = {{"x", to_json(m.marginals[0])},
                  {"w", to_json(m.marginals[1])},
                  {"nu_xw", m.nu(0, 1)},
                  {"rho_xw", m.corr(0, 1)},
                  {"range_xw", m.range(0, 1)}};
        return {{"family", "bivariate_matern"}, {"params", p}};
      }
      json marg = json::array();
      for (const auto& mp : m.marginals) marg.push_back(to_json(mp));
      json cross = json::array();
      for (int k = 0; k < m.num_vars(); ++k)
        for (int l = k + 1; l < m.num_vars(); ++l)
          cross.push_back({{"i", k}, {"j", l}, {"nu", m.nu(k, l)}, {"range", m.range(k, l)},
                           {"corr", m.corr(k, l)}});
      return {{"family", "multivariate_matern"}, {"params", {{"marginals", marg}, {"cross", cross}}}};
    }
    json operator()(const BivariatePowExp& m) const { return detail_json::bivariate_to_json(m, "powexp"); }
    json operator()(const BivariateGenCauchy& m) const { return detail_json::bivariate_to_json(m, "gencauchy"); }
    json operator()(const Lmc& m) const {
      json comps = json::array();
      for (const auto& c : m.components)
        comps.push_back({{"model", univariate_to_json(c.model)}, {"weights", c.weights}});
      return {{"family", "lmc"}, {"params", {{"components", comps}}}};
    }
    json operator()(const WarpedModel& m) const {
      return {{"family", "warped"},
              {"params", {{"base", model_to_json(*m.base)}, {"warp", warp_to_json(m.warp)}, {"L", m.L}}}};
    }
    json operator()(const PaciorekModel& m) const {
      json sig = json::array();
      for (const auto& s : m.sigma) sig.push_back(scalar_fn_to_json(s));
      json phi = json::array();
      const int q = m.q();
      for (int k = 0; k < q; ++k)
        for (int l = k; l < q; ++l) {
          json e = {{"block", {k, l}}, {"fn", scalar_fn_to_json(m.phi_fn(k, l))}};
          if (k != l) e["fn_transpose"] = scalar_fn_to_json(m.phi_fn(l, k));
          phi.push_back(e);
        }
      return {{"family", "paciorek"},
              {"params", {{"base", model_to_json(*m.base)}, {"sigma", sig}, {"phi", phi}, {"L", m.L}}}};
    }
  };
  return std::visit(V{}, model.rep());
}

}  // namespace confound::json_io

#endif
