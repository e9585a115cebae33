#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "noma_fusion/model.hpp"
#include "noma_fusion/planar_bound.hpp"
#include "noma_fusion/simulator.hpp"

namespace noma_fusion {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// Malformed configuration or input file.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

struct CaseDef {
  std::string name;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
};

struct TableConfig {
  std::vector<double> snr_db;
  std::vector<CaseDef> cases;
};

/// Case 1 and Case 2 over the ten tabulated SNRs.
inline TableConfig default_table_config() {
  return {{-10, -6, -3, 0, 3, 6, 10, 13, 16, 20},
          {{"1", 0.05, 0.1, 2.0, 1.0}, {"2", 0.01, 0.02, 1.0, 2.0}}};
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& text, const std::string& what) {
  const auto t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " value '" + t + "'");
  }
  if (used != t.size() || !std::isfinite(v)) throw ConfigError("cannot parse " + what + " value '" + t + "'");
  return v;
}

}  // namespace detail

/// Reads the flat key-value case file:
///
///     snr_db = -10, -6, 0, 3
///     [case 1]
///     eps1 = 0.05
///     eps2 = 0.1
///     p1 = 2
///     p2 = 1
///
/// `#` starts a comment. Keys before the first section are global.
inline TableConfig parse_table_config(std::istream& in) {
  TableConfig cfg;
  bool have_snr = false;
  std::map<std::string, std::map<std::string, double>> sections;
  std::vector<std::string> order;
  std::string current;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto where = " (line " + std::to_string(lineno) + ")";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header" + where);
      auto header = detail::trim(line.substr(1, line.size() - 2));
      if (header.rfind("case", 0) == 0) header = detail::trim(header.substr(4));
      if (header.empty()) throw ConfigError("empty case name" + where);
      if (sections.contains(header)) throw ConfigError("duplicate case '" + header + "'" + where);
      sections[header];
      order.push_back(header);
      current = header;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value" + where);
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (current.empty()) {
      if (key != "snr_db") throw ConfigError("unknown global key '" + key + "'" + where);
      have_snr = true;
      std::stringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) {
        if (detail::trim(item).empty()) continue;
        cfg.snr_db.push_back(detail::parse_number(item, "snr_db"));
      }
    } else {
      if (key != "eps1" && key != "eps2" && key != "p1" && key != "p2") {
        throw ConfigError("unknown case key '" + key + "'" + where);
      }
      sections[current][key] = detail::parse_number(value, key);
    }
  }
  if (!have_snr) cfg.snr_db = default_table_config().snr_db;
  if (cfg.snr_db.empty()) throw ConfigError("snr_db list is empty");
  if (order.empty()) throw ConfigError("no [case ...] sections");
  for (const auto& name : order) {
    const auto& kv = sections[name];
    for (const char* k : {"eps1", "eps2", "p1", "p2"}) {
      if (!kv.contains(k)) throw ConfigError("case '" + name + "' is missing " + k);
    }
    CaseDef c{name, kv.at("eps1"), kv.at("eps2"), kv.at("p1"), kv.at("p2")};
    try {
      SystemParams::validate_crossovers(c.eps1, c.eps2);
      SystemParams::validate_powers(c.p1, c.p2);
    } catch (const std::domain_error& e) {
      throw ConfigError("case '" + name + "': " + e.what());
    }
    cfg.cases.push_back(c);
  }
  return cfg;
}

struct SimSettings {
  int theta_points = 100;
  int trials = 30;
  std::uint64_t bits = 100000;
  std::uint64_t seed = 0;
  int ma_window = 5;
  Smoothing smoothing = Smoothing::Pooled;
  unsigned threads = 0;

  SimConfig config_for(const SystemParams& params) const {
    return {params, uniform_theta_grid(theta_points), trials, bits, seed, ma_window, smoothing, threads};
  }
};

struct TableRow {
  double snr_db = 0.0;
  std::string case_name;
  OptimalDesign design;
  std::optional<double> theta_exp_star;
};

/// Bound-optimal rotation for every (SNR, case); with `sim`, also the
/// experimental optimum from a full sweep using the same seed for every row.
inline std::vector<TableRow> table1(const TableConfig& cfg, const std::optional<SimSettings>& sim = {}) {
  if (cfg.snr_db.empty()) throw ConfigError("snr_db list is empty");
  std::vector<TableRow> rows;
  for (double snr : cfg.snr_db) {
    for (const auto& c : cfg.cases) {
      const auto params = params_at_snr_db(c.eps1, c.eps2, c.p1, c.p2, snr);
      TableRow row{snr, c.name, optimal_design(params), std::nullopt};
      if (sim) row.theta_exp_star = sweep(sim->config_for(params)).theta_exp_star;
      rows.push_back(row);
    }
  }
  return rows;
}

/// Angles in radians unless `degrees` is set, which changes display only.
inline void write_table1_csv(std::ostream& out, const std::vector<TableRow>& rows, bool degrees = false) {
  const double scale = degrees ? 180.0 / std::numbers::pi : 1.0;
  out << (degrees ? "snr_db,case,theta_ub_star_deg,theta_exp_star_deg\n" : "snr_db,case,theta_ub_star,theta_exp_star\n");
  for (const auto& r : rows) {
    out << format_double("%g", r.snr_db) << ',' << r.case_name << ','
        << format_double("%.6f", r.design.theta_star * scale) << ','
        << (r.theta_exp_star ? format_double("%.6f", *r.theta_exp_star * scale) : std::string()) << '\n';
  }
}

inline nlohmann::json design_json(const OptimalDesign& d) {
  return {{"schema_version", kSchemaVersion},
          {"pcf", d.pcf},
          {"theta_star_rad", d.theta_star},
          {"pe_ub_star", d.pe_ub_star},
          {"clamped", d.clamped}};
}

inline nlohmann::json params_json(const SystemParams& p) {
  return {{"eps1", p.eps1()}, {"eps2", p.eps2()}, {"p1", p.p1()}, {"p2", p.p2()}, {"n0", p.n0()}};
}

inline nlohmann::json sim_config_json(const SimConfig& c) {
  return {{"params", params_json(c.params)},
          {"theta_grid", c.theta_grid},
          {"trials", c.trials},
          {"bits_per_trial", c.bits_per_trial},
          {"seed", c.seed},
          {"ma_window", c.ma_window},
          {"smoothing", to_string(c.smoothing)}};
}

/// Inverse of sim_config_json. Thread count is not part of the result and
/// is left at its default.
inline SimConfig sim_config_from_json(const nlohmann::json& j) {
  try {
    const auto& p = j.at("params");
    SimConfig c{SystemParams(p.at("eps1").get<double>(), p.at("eps2").get<double>(), p.at("p1").get<double>(),
                             p.at("p2").get<double>(), p.at("n0").get<double>())};
    c.theta_grid = j.at("theta_grid").get<std::vector<double>>();
    c.trials = j.at("trials").get<int>();
    c.bits_per_trial = j.at("bits_per_trial").get<std::uint64_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.ma_window = j.at("ma_window").get<int>();
    c.smoothing = smoothing_from_string(j.at("smoothing").get<std::string>());
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed sweep config: ") + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("invalid sweep config: ") + e.what());
  }
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json sweep_summary_json(const SweepResult& r) {
  const auto design = optimal_design(r.config.params);
  return {{"schema_version", kSchemaVersion},
          {"theta_exp_star", r.theta_exp_star},
          {"pe_exp_star", r.pe_exp_star},
          {"pe_exp_ci", optional_json(r.pe_exp_ci)},
          {"seed", r.config.seed},
          {"snr_db", snr_db(r.config.params)},
          {"bound", design_json(design)},
          {"config", sim_config_json(r.config)}};
}

/// Per-angle statistics, header `theta_rad,mean_err,std_err,ci95,smoothed_err`.
inline void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << "theta_rad,mean_err,std_err,ci95,smoothed_err\n";
  char line[160];
  for (std::size_t k = 0; k < r.stats.size(); ++k) {
    const auto& s = r.stats[k];
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g,%.9g\n", s.theta, s.mean, s.std, s.ci95_half_width,
                  r.smoothed[k].rate);
    out << line;
  }
}

/// One point of the error-versus-SNR curve.
struct SnrCurvePoint {
  double snr_db = 0.0;
  OptimalDesign design;
  SweepResult sweep;

  /// The simulated optimum's 95% interval contains the least planar bound.
  bool overlaps() const {
    const double hw = sweep.pe_exp_ci.value_or(0.0);
    return std::abs(sweep.pe_exp_star - design.pe_ub_star) <= hw;
  }
};

inline SnrCurvePoint snr_curve_point(const CaseDef& c, double snr, const SimSettings& sim) {
  const auto params = params_at_snr_db(c.eps1, c.eps2, c.p1, c.p2, snr);
  return {snr, optimal_design(params), sweep(sim.config_for(params))};
}

inline void write_snr_curve_csv(std::ostream& out, const std::vector<SnrCurvePoint>& points) {
  out << "snr_db,n0,theta_ub_star,pe_ub_star,theta_exp_star,pe_exp_star,pe_exp_ci,overlap\n";
  char line[256];
  for (const auto& p : points) {
    std::snprintf(line, sizeof line, "%g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", p.snr_db,
                  p.sweep.config.params.n0(), p.design.theta_star, p.design.pe_ub_star, p.sweep.theta_exp_star,
                  p.sweep.pe_exp_star, p.sweep.pe_exp_ci.value_or(0.0), p.overlaps() ? 1 : 0);
    out << line;
  }
}

}  // namespace noma_fusion
