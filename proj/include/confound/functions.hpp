#ifndef CONFOUND_FUNCTIONS_HPP
#define CONFOUND_FUNCTIONS_HPP

// Closed-form one-dimensional function families used by the nonstationary
// covariance models: positive variance/range functions and monotone warps.
// Keeping them parametric keeps every model serialisable.

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "confound/error.hpp"

namespace confound {

struct ConstantFn {
  double value = 1.0;
};

/// a + b s
struct AffineFn {
  double a = 0.0;
  double b = 1.0;
};

/// Linear interpolation through (knots[i], values[i]); constant extension
/// outside the knot range.
struct PiecewiseAffineFn {
  std::vector<double> knots;
  std::vector<double> values;
};

/// lo + (hi - lo) / (1 + exp(-(s - center) / width))
struct SigmoidFn {
  double lo = 0.0;
  double hi = 1.0;
  double center = 0.5;
  double width = 0.1;
};

class ScalarFn {
 public:
  using Rep = std::variant<ConstantFn, AffineFn, PiecewiseAffineFn, SigmoidFn>;

  ScalarFn() : rep_(ConstantFn{}) {}
  ScalarFn(Rep rep) : rep_(std::move(rep)) { validate_shape(); }

  static ScalarFn constant(double v) { return ScalarFn(ConstantFn{v}); }

  double operator()(double s) const {
    return std::visit([s](const auto& f) { return eval(f, s); }, rep_);
  }

  const Rep& rep() const { return rep_; }

  bool is_constant() const { return std::holds_alternative<ConstantFn>(rep_); }

  /// Upper bound on |f'| over the real line.
  double lipschitz() const {
    return std::visit([](const auto& f) { return slope_bound(f); }, rep_);
  }

  /// Checks f > 0 on [0, L]. Every family is monotone between knots, so the
  /// minimum is attained at an endpoint or a knot.
  void require_positive_on(double L, const std::string& what) const {
    std::vector<double> probes = {0.0, L};
    if (auto* pw = std::get_if<PiecewiseAffineFn>(&rep_)) {
      for (double k : pw->knots)
        if (k > 0.0 && k < L) probes.push_back(k);
    }
    for (double s : probes)
      if (!((*this)(s) > 0.0)) throw ConfigError(what + " must be positive on [0, L]");
  }

 private:
  static double eval(const ConstantFn& f, double) { return f.value; }
  static double eval(const AffineFn& f, double s) { return f.a + f.b * s; }
  static double eval(const PiecewiseAffineFn& f, double s) {
    const auto& k = f.knots;
    if (s <= k.front()) return f.values.front();
    if (s >= k.back()) return f.values.back();
    const auto it = std::upper_bound(k.begin(), k.end(), s);
    const std::size_t j = static_cast<std::size_t>(it - k.begin());
    const double t = (s - k[j - 1]) / (k[j] - k[j - 1]);
    return f.values[j - 1] + t * (f.values[j] - f.values[j - 1]);
  }
  static double eval(const SigmoidFn& f, double s) {
    return f.lo + (f.hi - f.lo) / (1.0 + std::exp(-(s - f.center) / f.width));
  }

  static double slope_bound(const ConstantFn&) { return 0.0; }
  static double slope_bound(const AffineFn& f) { return std::abs(f.b); }
  static double slope_bound(const PiecewiseAffineFn& f) {
    double m = 0.0;
    for (std::size_t i = 1; i < f.knots.size(); ++i)
      m = std::max(m, std::abs((f.values[i] - f.values[i - 1]) / (f.knots[i] - f.knots[i - 1])));
    return m;
  }
  static double slope_bound(const SigmoidFn& f) { return std::abs(f.hi - f.lo) / (4.0 * f.width); }

  void validate_shape() const {
    if (auto* pw = std::get_if<PiecewiseAffineFn>(&rep_)) {
      detail::require(pw->knots.size() >= 2 && pw->knots.size() == pw->values.size(),
                      "piecewise_affine: need >= 2 knots with matching values");
      for (std::size_t i = 1; i < pw->knots.size(); ++i)
        detail::require(pw->knots[i] > pw->knots[i - 1],
                        "piecewise_affine: knots must be strictly increasing");
    }
    if (auto* sg = std::get_if<SigmoidFn>(&rep_)) {
      detail::require(sg->width > 0.0, "sigmoid: width must be positive");
    }
  }

  Rep rep_;
};

/// Monotone map of [0, L] into [0, L] used to warp locations.
class Warp {
 public:
  enum class Kind { identity, affine, piecewise_affine, sigmoid };

  static Warp identity() { return Warp(Kind::identity, ScalarFn::constant(0.0)); }

  /// a + b s; must map [0, L] into [0, L].
  static Warp affine(double a, double b) { return Warp(Kind::affine, ScalarFn(AffineFn{a, b})); }

  static Warp piecewise_affine(std::vector<double> knots, std::vector<double> values) {
    return Warp(Kind::piecewise_affine,
                ScalarFn(PiecewiseAffineFn{std::move(knots), std::move(values)}));
  }

  /// Logistic curve rescaled so that f(0) = 0 and f(L) = L.
  static Warp sigmoid(double center, double width) {
    return Warp(Kind::sigmoid, ScalarFn(SigmoidFn{0.0, 1.0, center, width}));
  }

  Kind kind() const { return kind_; }
  const ScalarFn& shape() const { return fn_; }

  double operator()(double s, double L) const {
    switch (kind_) {
      case Kind::identity:
        return s;
      case Kind::sigmoid: {
        const double f0 = fn_(0.0);
        const double f1 = fn_(L);
        return L * (fn_(s) - f0) / (f1 - f0);
      }
      default:
        return fn_(s);
    }
  }

  /// Checks the warp maps [0, L] monotonically into [0, L] with a finite
  /// Lipschitz constant.
  void validate(double L) const {
    if (kind_ == Kind::identity || kind_ == Kind::sigmoid) return;
    const double lo = (*this)(0.0, L);
    const double hi = (*this)(L, L);
    const double tol = 1e-12 * L;
    detail::require(lo >= -tol && lo <= L + tol && hi >= -tol && hi <= L + tol,
                    "warp must map [0, L] into [0, L]");
    if (auto* pw = std::get_if<PiecewiseAffineFn>(&fn_.rep())) {
      bool inc = true, dec = true;
      for (std::size_t i = 1; i < pw->values.size(); ++i) {
        inc = inc && pw->values[i] >= pw->values[i - 1];
        dec = dec && pw->values[i] <= pw->values[i - 1];
      }
      detail::require(inc || dec, "piecewise_affine warp must be monotone");
      for (double v : pw->values)
        detail::require(v >= -tol && v <= L + tol, "warp must map [0, L] into [0, L]");
    }
    detail::require(std::isfinite(fn_.lipschitz()), "warp must be Lipschitz");
  }

 private:
  Warp(Kind k, ScalarFn fn) : kind_(k), fn_(std::move(fn)) {}
  Kind kind_;
  ScalarFn fn_;
};

}  // namespace confound

#endif
