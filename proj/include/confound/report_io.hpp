#ifndef CONFOUND_REPORT_IO_HPP
#define CONFOUND_REPORT_IO_HPP

// Experiment outputs:
//   results.csv     scenario,n,estimator,order,rmse,bias,sd,n_failed
//   quantiles.csv   scenario,n,estimator,order,mean,median,q25,q75,iqr,n_ok
//   replicates.csv  scenario,n,estimator,order,replicate,seed,beta_hat
//   failures.csv    scenario,n,replicate,estimator,message
//   rate.csv        scenario,log_n,log_sd_empirical,log_sd_theory_slope
//   rate_fit.csv    scenario,estimator,order,gamma_hat,gamma,gap
//   metadata.json   configs, seed rule, SD convention, version
// Nothing time- or thread-dependent is written.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "confound/config.hpp"
#include "confound/error.hpp"
#include "confound/harness.hpp"

namespace confound {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kResultsHeader = "scenario,n,estimator,order,rmse,bias,sd,n_failed";
inline constexpr const char* kRateHeader = "scenario,log_n,log_sd_empirical,log_sd_theory_slope";

inline std::string fmt_g(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// --- small CSV helpers -------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ConfigError("csv: missing column '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    for (const auto& h : header)
      if (h == name) return true;
    return false;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string(), "empty file");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto row = split_csv_line(line);
    if (row.size() != t.header.size())
      throw ConfigError(path.string() + ": row has " + std::to_string(row.size()) + " fields, header has " +
                        std::to_string(t.header.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    throw ConfigError(where + ": not a number: '" + s + "'");
  }
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) {
    if (c == '"') o += '"';
    o += c == '\n' ? ' ' : c;
  }
  return o + '"';
}

class OutFile {
 public:
  explicit OutFile(const std::filesystem::path& p) : path_(p), out_(p, std::ios::binary) {
    if (!out_) throw IoError(p.string(), "cannot open for writing");
  }
  template <class T>
  OutFile& operator<<(const T& v) {
    out_ << v;
    return *this;
  }
  void close() {
    out_.close();
    if (!out_) throw IoError(path_.string(), "write failed");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError(dir.string(), "cannot create output directory");
}

// --- writers -----------------------------------------------------------------

inline nlohmann::json metadata_json(const std::vector<ExperimentResult>& results) {
  nlohmann::json exps = nlohmann::json::array();
  nlohmann::json failures = nlohmann::json::object();
  for (const auto& r : results) {
    exps.push_back(json_io::to_json(r.config));
    failures[r.config.scenario] = r.failures.size();
  }
  return {{"tool", "confound-lab"},
          {"version", kVersion},
          {"sd_convention", "population: divisor R over successful replicates, so rmse^2 = bias^2 + sd^2"},
          {"seed_rule", "replicate r uses seed base_seed + r; irregular designs use base_seed + 7919 * size"},
          {"rate_n", "configured size (total sites for grid2d)"},
          {"failed_replicates", failures},
          {"config", {{"experiments", exps}}}};
}

inline void write_rate_rows(OutFile& rate, OutFile& fit, const RateFit& f) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < f.log_n.size(); ++i) {
    mx += f.log_n[i];
    my += f.log_sd[i];
  }
  mx /= static_cast<double>(f.log_n.size());
  my /= static_cast<double>(f.log_n.size());
  for (std::size_t i = 0; i < f.log_n.size(); ++i) {
    // Theory line with the predicted slope through the empirical centroid.
    const double theory = my + f.gamma * (f.log_n[i] - mx);
    rate << f.scenario << ',' << fmt_g(f.log_n[i]) << ',' << fmt_g(f.log_sd[i]) << ',' << fmt_g(theory) << '\n';
  }
  fit << f.scenario << ',' << f.estimator << ',' << f.order << ',' << fmt_g(f.gamma_hat) << ','
      << fmt_g(f.gamma) << ',' << fmt_g(f.gap) << '\n';
}

/// Rate fit for the experiment's rate column, if it has one and enough sizes.
inline std::optional<RateFit> default_rate_fit(const ExperimentResult& r) {
  const auto col = rate_column(r.config);
  if (!col || r.config.sizes.size() < 4) return std::nullopt;
  try {
    return rate_check(r, col->first, col->second);
  } catch (const NumericalError&) {
    return std::nullopt;  // zero SD, e.g. a noiseless scenario
  }
}

inline void write_reports(const std::vector<ExperimentResult>& results, const std::filesystem::path& dir) {
  ensure_dir(dir);
  OutFile res(dir / "results.csv");
  OutFile qua(dir / "quantiles.csv");
  OutFile rep(dir / "replicates.csv");
  OutFile fail(dir / "failures.csv");
  OutFile rate(dir / "rate.csv");
  OutFile fit(dir / "rate_fit.csv");
  res << kResultsHeader << '\n';
  qua << "scenario,n,estimator,order,mean,median,q25,q75,iqr,n_ok\n";
  rep << "scenario,n,estimator,order,replicate,seed,beta_hat\n";
  fail << "scenario,n,replicate,estimator,message\n";
  rate << kRateHeader << '\n';
  fit << "scenario,estimator,order,gamma_hat,gamma,gap\n";
  for (const auto& r : results) {
    for (const auto& c : r.cells) {
      const Summary s = summarize(c);
      res << c.scenario << ',' << c.n << ',' << c.estimator << ',' << c.order << ',' << fmt_g(s.rmse) << ','
          << fmt_g(s.bias) << ',' << fmt_g(s.sd) << ',' << s.n_failed << '\n';
      qua << c.scenario << ',' << c.n << ',' << c.estimator << ',' << c.order << ',' << fmt_g(s.mean) << ','
          << fmt_g(s.median) << ',' << fmt_g(s.q25) << ',' << fmt_g(s.q75) << ',' << fmt_g(s.iqr) << ','
          << s.n_ok << '\n';
      for (std::size_t i = 0; i < c.replicates.size(); ++i)
        rep << c.scenario << ',' << c.n << ',' << c.estimator << ',' << c.order << ',' << i << ','
            << (r.config.base_seed + i) << ',' << fmt_g(c.replicates[i]) << '\n';
    }
    for (const auto& f : r.failures)
      fail << r.config.scenario << ',' << f.n << ',' << f.replicate << ',' << f.estimator << ','
           << csv_quote(f.message) << '\n';
    if (auto f = default_rate_fit(r)) write_rate_rows(rate, fit, *f);
  }
  res.close();
  qua.close();
  rep.close();
  fail.close();
  rate.close();
  fit.close();
  OutFile meta(dir / "metadata.json");
  meta << metadata_json(results).dump(2) << '\n';
  meta.close();
}

// --- readers -----------------------------------------------------------------

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError(p.string(), "cannot open for reading");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

/// Recomputes rate fits from a finished output directory (metadata.json and
/// results.csv).
inline std::vector<RateFit> rate_fits_from_dir(const std::filesystem::path& dir) {
  const auto meta = read_json_file(dir / "metadata.json");
  if (!meta.contains("config")) throw ConfigError((dir / "metadata.json").string() + ": no 'config'");
  const auto configs = json_io::experiments_from_json(meta.at("config"));
  const CsvTable t = read_csv(dir / "results.csv");
  const std::size_t ks = t.column("scenario"), kn = t.column("n"), ke = t.column("estimator"),
                    ko = t.column("order"), ksd = t.column("sd");
  std::vector<RateFit> out;
  for (const auto& c : configs) {
    const auto col = rate_column(c);
    if (!col) continue;
    std::vector<double> n, sd;
    for (const auto& row : t.rows) {
      if (row[ks] != c.scenario || row[ke] != col->first || std::stoi(row[ko]) != col->second) continue;
      n.push_back(parse_double(row[kn], "results.csv n"));
      sd.push_back(parse_double(row[ksd], "results.csv sd"));
    }
    const CovarianceModel m = json_io::model_from_json(c.model);
    const auto [ax, aw] = model_alphas(m);
    RateFit f = fit_rate(n, sd, ax, aw, config_dimension(c));
    f.scenario = c.scenario;
    f.estimator = col->first;
    f.order = col->second;
    out.push_back(std::move(f));
  }
  return out;
}

inline void write_rate_files(const std::vector<RateFit>& fits, const std::filesystem::path& dir) {
  ensure_dir(dir);
  OutFile rate(dir / "rate.csv");
  OutFile fit(dir / "rate_fit.csv");
  rate << kRateHeader << '\n';
  fit << "scenario,estimator,order,gamma_hat,gamma,gap\n";
  for (const auto& f : fits) write_rate_rows(rate, fit, f);
  rate.close();
  fit.close();
}

}  // namespace confound

#endif
