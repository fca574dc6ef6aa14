#ifndef CONFOUND_DESIGN_HPP
#define CONFOUND_DESIGN_HPP

// Observation designs on [0, L] and [0, L]^2.
//
// Every design carries integer lattice keys so that the distance between two
// sites is a function of the key difference alone. Stationary covariance
// blocks can then be tabulated once per distinct offset.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "confound/covmodels.hpp"
#include "confound/error.hpp"

namespace confound {

enum class DesignKind { grid1d, grid2d, irregular1d, nested1d };

inline std::string to_string(DesignKind k) {
  switch (k) {
    case DesignKind::grid1d:
      return "grid1d";
    case DesignKind::grid2d:
      return "grid2d";
    case DesignKind::irregular1d:
      return "irregular1d";
    case DesignKind::nested1d:
      return "nested1d";
  }
  return "?";
}

inline DesignKind design_kind_from_string(const std::string& s) {
  if (s == "grid1d") return DesignKind::grid1d;
  if (s == "grid2d") return DesignKind::grid2d;
  if (s == "irregular1d") return DesignKind::irregular1d;
  if (s == "nested1d") return DesignKind::nested1d;
  throw ConfigError("unknown design kind '" + s + "'");
}

struct DesignSpec {
  DesignKind kind = DesignKind::grid1d;
  int n = 100;          // intervals per side (grids), sites (irregular), coarse intervals (nested)
  double L = 1.0;
  double rho = 0.5;     // nested: subgrid half-width is ceil(n^rho)
  int half_width = -1;  // nested: explicit half-width override when >= 0
  int oversample = 5;   // irregular: fine grid has oversample * n points
  std::uint64_t seed = 0;  // irregular: subsampling seed
};

/// How the distance between two sites follows from their lattice keys.
enum class LagRule {
  linear1,  // |di| * a
  linear2,  // |di * a + dj * b|
  euclid2,  // a * hypot(di, dj)
};

struct LatticeKey {
  int i = 0;
  int j = 0;
};

struct Design {
  DesignKind kind = DesignKind::grid1d;
  DesignSpec spec;
  std::vector<Site> sites;
  std::vector<LatticeKey> keys;
  LagRule rule = LagRule::linear1;
  double unit_a = 0.0;
  double unit_b = 0.0;

  double h = 0.0;     // grid spacing; coarse spacing for nested
  int side = 0;       // grid2d: points per side

  // irregular1d
  std::vector<double> spacings;   // h_i = s_{i+1} - s_i
  std::vector<double> midpoints;  // (h_{i-1} + h_i) / 2 for interior i (index i-1)
  double m_lo = 0.0;              // min n * h_i
  double m_hi = 0.0;              // max n * h_i

  // nested1d
  int coarse_n = 0;
  int half_width = 0;
  double fine_spacing = 0.0;

  std::size_t size() const { return sites.size(); }
  int dimension() const { return kind == DesignKind::grid2d ? 2 : 1; }

  double lag(std::size_t a, std::size_t b) const {
    const int di = keys[b].i - keys[a].i;
    const int dj = keys[b].j - keys[a].j;
    switch (rule) {
      case LagRule::linear1:
        return std::abs(di) * unit_a;
      case LagRule::linear2:
        return std::abs(di * unit_a + dj * unit_b);
      case LagRule::euclid2:
        return unit_a * std::hypot(static_cast<double>(di), static_cast<double>(dj));
    }
    return 0.0;
  }
};

/// ceil(n^rho), guarded against pow() landing a hair above an integer.
inline int nested_half_width(int n, double rho) {
  return static_cast<int>(std::ceil(std::pow(static_cast<double>(n), rho) - 1e-9));
}

namespace detail {

inline Design grid1d(const DesignSpec& s) {
  Design d;
  d.kind = DesignKind::grid1d;
  d.spec = s;
  d.h = s.L / s.n;
  d.rule = LagRule::linear1;
  d.unit_a = d.h;
  d.sites.reserve(static_cast<std::size_t>(s.n) + 1);
  for (int i = 0; i <= s.n; ++i) {
    d.sites.push_back(Site{i * d.h, 0.0});
    d.keys.push_back(LatticeKey{i, 0});
  }
  return d;
}

inline Design grid2d(const DesignSpec& s) {
  Design d;
  d.kind = DesignKind::grid2d;
  d.spec = s;
  d.h = s.L / s.n;
  d.side = s.n + 1;
  d.rule = LagRule::euclid2;
  d.unit_a = d.h;
  const std::size_t N = static_cast<std::size_t>(d.side) * d.side;
  d.sites.reserve(N);
  for (int i = 0; i < d.side; ++i)
    for (int j = 0; j < d.side; ++j) {
      d.sites.push_back(Site{i * d.h, j * d.h});
      d.keys.push_back(LatticeKey{i, j});
    }
  return d;
}

inline Design irregular1d(const DesignSpec& s) {
  detail::require(s.oversample >= 2, "irregular design: oversample factor must be >= 2");
  Design d;
  d.kind = DesignKind::irregular1d;
  d.spec = s;
  const int fine = s.oversample * s.n;
  const double hf = s.L / (fine - 1);
  std::vector<int> idx(static_cast<std::size_t>(fine));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 gen(s.seed);
  // Partial Fisher-Yates: the first n entries are a uniform subsample.
  for (int k = 0; k < s.n; ++k) {
    std::uniform_int_distribution<int> pick(k, fine - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(gen))]);
  }
  idx.resize(static_cast<std::size_t>(s.n));
  std::sort(idx.begin(), idx.end());
  d.rule = LagRule::linear1;
  d.unit_a = hf;
  d.h = hf;
  for (int j : idx) {
    d.sites.push_back(Site{j * hf, 0.0});
    d.keys.push_back(LatticeKey{j, 0});
  }
  d.m_lo = std::numeric_limits<double>::infinity();
  d.m_hi = 0.0;
  for (std::size_t i = 0; i + 1 < d.sites.size(); ++i) {
    const double hi = d.sites[i + 1].x - d.sites[i].x;
    d.spacings.push_back(hi);
    d.m_lo = std::min(d.m_lo, hi * s.n);
    d.m_hi = std::max(d.m_hi, hi * s.n);
  }
  for (std::size_t i = 1; i < d.spacings.size(); ++i)
    d.midpoints.push_back(0.5 * (d.spacings[i - 1] + d.spacings[i]));
  return d;
}

inline Design nested1d(const DesignSpec& s) {
  detail::require(s.half_width >= 0 || (s.rho > 0.0 && s.rho < 1.0),
                  "nested design: rho must lie in (0, 1)");
  Design d;
  d.kind = DesignKind::nested1d;
  d.spec = s;
  d.coarse_n = s.n;
  d.h = s.L / s.n;
  d.half_width = s.half_width >= 0 ? s.half_width : nested_half_width(s.n, s.rho);
  const int k = d.half_width;
  // Each cluster spans +-L / n^2 around its coarse site.
  d.fine_spacing = k > 0 ? s.L / (static_cast<double>(s.n) * s.n * k) : 0.0;
  d.rule = LagRule::linear2;
  d.unit_a = d.h;
  d.unit_b = d.fine_spacing;
  for (int i = 0; i <= s.n; ++i)
    for (int t = -k; t <= k; ++t) {
      d.sites.push_back(Site{i * d.h + t * d.fine_spacing, 0.0});
      d.keys.push_back(LatticeKey{i, t});
    }
  return d;
}

}  // namespace detail

inline Design make_design(const DesignSpec& s) {
  detail::require(std::isfinite(s.L) && s.L > 0.0, "design: L must be positive");
  switch (s.kind) {
    case DesignKind::grid1d:
      detail::require(s.n >= 4, "grid1d: n must be >= 4");
      return detail::grid1d(s);
    case DesignKind::grid2d:
      detail::require(s.n >= 2, "grid2d: n must be >= 2");
      return detail::grid2d(s);
    case DesignKind::irregular1d:
      detail::require(s.n >= 4, "irregular1d: n must be >= 4");
      return detail::irregular1d(s);
    case DesignKind::nested1d:
      detail::require(s.n >= 4, "nested1d: n must be >= 4");
      return detail::nested1d(s);
  }
  throw ConfigError("unknown design kind");
}

/// Number of sites of a nested design with the given coarse size and exponent.
inline std::size_t nested_site_count(int n, double rho) {
  return static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(2 * nested_half_width(n, rho) + 1);
}

}  // namespace confound

#endif
