#ifndef CONFOUND_OPERATORS_HPP
#define CONFOUND_OPERATORS_HPP

// Local linear operators applied before the no-intercept regression:
// forward differences, discrete Laplacians (1D and 2D lattices), spacing
// weighted differences for irregular 1D sites, and cluster means for
// nested designs. Outputs live on the trimmed interior; there is no
// padding or reflection at the boundary.

#include <cmath>
#include <cstddef>
#include <vector>

#include "confound/design.hpp"
#include "confound/error.hpp"

namespace confound {

struct DiffSpec {
  int order = 1;   // p
  double h = 1.0;  // spacing
};

struct LapSpec {
  int order = 1;   // m
  double h = 1.0;
  int dim = 1;     // d
};

/// p-fold forward difference (Z(s + h) - Z(s)) / h. Output length N - p.
inline std::vector<double> diff(const std::vector<double>& v, const DiffSpec& spec) {
  detail::require(spec.order >= 0, "diff: order must be >= 0");
  detail::require(spec.h > 0.0, "diff: spacing must be positive");
  if (v.size() <= static_cast<std::size_t>(spec.order))
    throw ConfigError("diff: series length must exceed the order");
  std::vector<double> out(v);
  for (int k = 0; k < spec.order; ++k) {
    for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = (out[i + 1] - out[i]) / spec.h;
    out.pop_back();
  }
  return out;
}

/// m-th order Laplacian on a 1D grid. Each order is two forward
/// differences, so the result coincides with diff of order 2m.
inline std::vector<double> laplacian_1d(const std::vector<double>& v, int m, double h) {
  detail::require(m >= 1, "laplacian: order must be >= 1");
  if (v.size() < static_cast<std::size_t>(2 * m + 1))
    throw ConfigError("laplacian: insufficient interior");
  return diff(v, DiffSpec{2 * m, h});
}

/// m-th order Laplacian on a side x side row-major lattice. Every
/// application drops one boundary layer; output is (side - 2m)^2 values in
/// row-major order.
inline std::vector<double> laplacian_2d(const std::vector<double>& v, int side, int m, double h) {
  detail::require(m >= 1, "laplacian: order must be >= 1");
  detail::require(h > 0.0, "laplacian: spacing must be positive");
  detail::require(side >= 1 && v.size() == static_cast<std::size_t>(side) * side,
                  "laplacian: values do not match the lattice");
  if (side < 2 * m + 1) throw ConfigError("laplacian: insufficient interior");
  const double ih2 = 1.0 / (h * h);
  std::vector<double> cur(v);
  int s = side;
  for (int k = 0; k < m; ++k) {
    const int t = s - 2;
    std::vector<double> next(static_cast<std::size_t>(t) * t);
    for (int i = 1; i < s - 1; ++i)
      for (int j = 1; j < s - 1; ++j) {
        const std::size_t c = static_cast<std::size_t>(i) * s + j;
        const double lap = cur[c - s] + cur[c + s] + cur[c - 1] + cur[c + 1] - 4.0 * cur[c];
        next[static_cast<std::size_t>(i - 1) * t + (j - 1)] = lap * ih2;
      }
    cur.swap(next);
    s = t;
  }
  return cur;
}

inline std::vector<double> laplacian(const std::vector<double>& v, const LapSpec& spec, int side = 0) {
  if (spec.dim == 1) return laplacian_1d(v, spec.order, spec.h);
  if (spec.dim == 2) return laplacian_2d(v, side, spec.order, spec.h);
  throw ConfigError("laplacian: dimension must be 1 or 2");
}

/// (Z_{i+1} - Z_i) / h_i on sorted sites.
inline std::vector<double> spacing_weighted_first_op(const std::vector<double>& v,
                                                     const std::vector<double>& s) {
  detail::require(v.size() == s.size(), "spacing weighted: values and sites differ in length");
  if (v.size() < 2) throw ConfigError("spacing weighted first difference: need >= 2 sites");
  std::vector<double> out(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) out[i] = (v[i + 1] - v[i]) / (s[i + 1] - s[i]);
  return out;
}

/// (1 / ht_i) [(Z_{i+1} - Z_i) / h_i - (Z_i - Z_{i-1}) / h_{i-1}],
/// ht_i = (h_{i-1} + h_i) / 2, for interior i.
inline std::vector<double> spacing_weighted_second_op(const std::vector<double>& v,
                                                      const std::vector<double>& s) {
  detail::require(v.size() == s.size(), "spacing weighted: values and sites differ in length");
  if (v.size() < 3) throw ConfigError("spacing weighted second difference: need >= 3 sites");
  std::vector<double> out(v.size() - 2);
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const double hl = s[i] - s[i - 1];
    const double hr = s[i + 1] - s[i];
    const double ht = 0.5 * (hl + hr);
    out[i - 1] = ((v[i + 1] - v[i]) / hr - (v[i] - v[i - 1]) / hl) / ht;
  }
  return out;
}

/// Cluster means of a nested design: one value per coarse site.
inline std::vector<double> cluster_means(const std::vector<double>& v, const Design& d) {
  detail::require(d.kind == DesignKind::nested1d, "cluster means: nested design required");
  const std::size_t w = static_cast<std::size_t>(2 * d.half_width + 1);
  detail::require(v.size() == w * static_cast<std::size_t>(d.coarse_n + 1),
                  "cluster means: values do not match the design");
  std::vector<double> out(static_cast<std::size_t>(d.coarse_n + 1));
  for (std::size_t c = 0; c < out.size(); ++c) {
    double acc = 0.0;
    for (std::size_t t = 0; t < w; ++t) acc += v[c * w + t];
    out[c] = acc / static_cast<double>(w);
  }
  return out;
}

inline std::vector<double> site_coordinates(const Design& d) {
  std::vector<double> s(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) s[i] = d.sites[i].x;
  return s;
}

}  // namespace confound

#endif
