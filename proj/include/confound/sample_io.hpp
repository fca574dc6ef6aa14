#ifndef CONFOUND_SAMPLE_IO_HPP
#define CONFOUND_SAMPLE_IO_HPP

// Field samples on disk: a CSV with one row per site
//   s | s1,s2 , x, w, y [, x2] [, x_noisy] [, y_noisy]
// and a JSON sidecar (<csv>.json) carrying the design spec, model, slopes,
// seed and noise settings. The design is rebuilt from the sidecar and the
// coordinates in the CSV are checked against it.

#include <cmath>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "confound/config.hpp"
#include "confound/design.hpp"
#include "confound/error.hpp"
#include "confound/fields.hpp"
#include "confound/report_io.hpp"

namespace confound {

struct SampleHeader {
  DesignSpec design;
  nlohmann::json model;
  std::vector<double> beta;
  std::uint64_t seed = 0;
  NoiseSpec noise;
  HeavyTailSpec heavy_tail;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".json");
}

inline nlohmann::json header_to_json(const SampleHeader& h) {
  nlohmann::json d = json_io::to_json(h.design);
  d["n"] = h.design.n;
  if (h.design.kind == DesignKind::irregular1d) d["seed"] = h.design.seed;
  return {{"design", d},       {"model", h.model},
          {"beta", h.beta},    {"seed", h.seed},
          {"noise", json_io::to_json(h.noise)}, {"heavy_tail", json_io::to_json(h.heavy_tail)}};
}

inline SampleHeader header_from_json(const nlohmann::json& j) {
  json_io::require_keys(j, {"design", "model", "beta", "seed", "noise", "heavy_tail", "columns"}, "sample header");
  if (!j.contains("design")) throw ConfigError("sample header: 'design' required");
  SampleHeader h;
  h.design = json_io::design_from_json(j.at("design"));
  if (j.contains("model")) h.model = j.at("model");
  if (j.contains("beta")) h.beta = j.at("beta").get<std::vector<double>>();
  if (j.contains("seed")) h.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("noise")) h.noise = json_io::noise_from_json(j.at("noise"));
  if (j.contains("heavy_tail")) h.heavy_tail = json_io::heavy_tail_from_json(j.at("heavy_tail"));
  return h;
}

inline std::vector<std::string> sample_columns(const FieldSample& s) {
  std::vector<std::string> cols;
  if (s.design->dimension() == 2) cols = {"s1", "s2"};
  else cols = {"s"};
  for (const char* c : {"x", "w", "y"}) cols.emplace_back(c);
  if (s.has_x2()) cols.emplace_back("x2");
  if (!s.x_noisy.empty()) cols.emplace_back("x_noisy");
  if (!s.y_noisy.empty()) cols.emplace_back("y_noisy");
  return cols;
}

inline void write_sample(const FieldSample& s, const SampleHeader& h, const std::filesystem::path& csv) {
  if (!s.design) throw ConfigError("write_sample: sample has no design");
  if (csv.has_parent_path()) ensure_dir(csv.parent_path());
  const auto cols = sample_columns(s);
  {
    OutFile out(csv);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    const bool two_d = s.design->dimension() == 2;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const Site& p = s.design->sites[i];
      out << fmt_g(p.x);
      if (two_d) out << ',' << fmt_g(p.y);
      out << ',' << fmt_g(s.x[i]) << ',' << fmt_g(s.w[i]) << ',' << fmt_g(s.y[i]);
      if (s.has_x2()) out << ',' << fmt_g(s.x2[i]);
      if (!s.x_noisy.empty()) out << ',' << fmt_g(s.x_noisy[i]);
      if (!s.y_noisy.empty()) out << ',' << fmt_g(s.y_noisy[i]);
      out << '\n';
    }
    out.close();
  }
  nlohmann::json j = header_to_json(h);
  j["columns"] = cols;
  OutFile side(sidecar_path(csv));
  side << j.dump(2) << '\n';
  side.close();
}

/// Reads a sample and its sidecar. Without a sidecar the file must hold a
/// 1D sample with an `s` column; the design is then taken as an irregular
/// set of sites with the median spacing as the nominal step.
inline FieldSample read_sample(const std::filesystem::path& csv, SampleHeader* header_out = nullptr) {
  const CsvTable t = read_csv(csv);
  const auto col = [&](const std::string& name) {
    std::vector<double> v;
    const std::size_t k = t.column(name);
    for (const auto& r : t.rows) v.push_back(parse_double(r[k], csv.string() + " column " + name));
    return v;
  };
  FieldSample s;
  s.x = col("x");
  s.y = col("y");
  if (t.has_column("w")) s.w = col("w");
  if (t.has_column("x2")) s.x2 = col("x2");
  if (t.has_column("x_noisy")) s.x_noisy = col("x_noisy");
  if (t.has_column("y_noisy")) s.y_noisy = col("y_noisy");

  const auto side = sidecar_path(csv);
  if (std::filesystem::exists(side)) {
    const SampleHeader h = header_from_json(read_json_file(side));
    auto d = std::make_shared<Design>(make_design(h.design));
    if (d->size() != s.x.size())
      throw ConfigError(csv.string() + ": row count does not match the design in the sidecar");
    const std::vector<double> sx = t.has_column("s") ? col("s") : col("s1");
    for (std::size_t i = 0; i < sx.size(); ++i)
      if (std::abs(sx[i] - d->sites[i].x) > 1e-9 * std::max(1.0, d->spec.L))
        throw ConfigError(csv.string() + ": site coordinates do not match the sidecar design");
    s.design = d;
    s.beta = h.beta;
    s.seed = h.seed;
    if (header_out) *header_out = h;
    return s;
  }

  if (!t.has_column("s")) throw ConfigError(csv.string() + ": no sidecar and no 's' column");
  const auto sites = col("s");
  detail::require(sites.size() >= 3, csv.string() + ": need at least 3 sites");
  auto d = std::make_shared<Design>();
  d->kind = DesignKind::irregular1d;
  d->rule = LagRule::euclid2;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (i > 0 && !(sites[i] > sites[i - 1])) throw ConfigError(csv.string() + ": sites must be strictly increasing");
    d->sites.push_back(Site{sites[i], 0.0});
  }
  std::vector<double> gaps;
  for (std::size_t i = 0; i + 1 < sites.size(); ++i) gaps.push_back(sites[i + 1] - sites[i]);
  d->spacings = gaps;
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  d->h = gaps[gaps.size() / 2];
  d->spec.kind = DesignKind::irregular1d;
  d->spec.n = static_cast<int>(sites.size());
  d->spec.L = sites.back() - sites.front();
  s.design = d;
  if (header_out) {
    header_out->design = d->spec;
  }
  return s;
}

}  // namespace confound

#endif
