// noma-fusion: closed-form rotation design, Monte Carlo sweeps and decision
// region rasters for two-sensor binary fusion over a Gaussian MAC.
//
// Exit codes: 0 success, 2 input/validation error, 3 I/O error.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "noma_fusion/io.hpp"
#include "noma_fusion/noma_fusion.hpp"

namespace nf = noma_fusion;
using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitIo = 3;

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ParamFlags {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  std::optional<double> n0;
  std::optional<double> snr_db;

  void add_to(CLI::App* app, bool noise_required = true) {
    app->add_option("--eps1", eps1, "crossover probability of sensor 1")->required();
    app->add_option("--eps2", eps2, "crossover probability of sensor 2")->required();
    app->add_option("--p1", p1, "power of sensor 1")->required();
    app->add_option("--p2", p2, "power of sensor 2")->required();
    auto* n0_opt = app->add_option("--n0", n0, "noise power N0");
    auto* snr_opt = app->add_option("--snr-db", snr_db, "geometric SNR sqrt(P1 P2)/N0 in dB");
    n0_opt->excludes(snr_opt);
    if (noise_required) {
      app->callback([this] {
        if (!n0 && !snr_db) throw CLI::ValidationError("exactly one of --n0 or --snr-db is required");
      });
    }
  }

  nf::SystemParams resolve() const {
    if (n0) return {eps1, eps2, p1, p2, *n0};
    if (snr_db) return nf::params_at_snr_db(eps1, eps2, p1, p2, *snr_db);
    throw std::domain_error("exactly one of --n0 or --snr-db is required");
  }
};

unsigned threads_from_env() {
  const char* v = std::getenv("NOMA_FUSION_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  try {
    const long n = std::stol(v);
    return n > 0 ? static_cast<unsigned>(n) : 0u;
  } catch (const std::exception&) {
    throw std::domain_error(std::string("NOMA_FUSION_THREADS is not an integer: ") + v);
  }
}

/// Accepts plain numbers and multiples of pi such as "pi/2", "2pi/3", "0.5*pi".
double parse_angle(const std::string& text) {
  const auto pos = text.find("pi");
  if (pos == std::string::npos) return nf::detail::parse_number(text, "angle");
  std::string coef = text.substr(0, pos);
  if (!coef.empty() && coef.back() == '*') coef.pop_back();
  const double k = coef.empty() ? 1.0 : (coef == "-" ? -1.0 : nf::detail::parse_number(coef, "angle"));
  const std::string rest = text.substr(pos + 2);
  double denom = 1.0;
  if (!rest.empty()) {
    if (rest.front() != '/') throw nf::ConfigError("cannot parse angle '" + text + "'");
    denom = nf::detail::parse_number(rest.substr(1), "angle");
  }
  return k * std::numbers::pi / denom;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (nf::detail::trim(item).empty()) continue;
    out.push_back(nf::detail::parse_number(item, what));
  }
  return out;
}

/// Writes files and tracks them so a failed command can remove what it wrote.
class OutputSet {
public:
  void write(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    written_.push_back(path);
    out << contents;
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
  }

  void remove_all() {
    for (const auto& p : written_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
    written_.clear();
  }

  const std::vector<std::string>& paths() const { return written_; }

private:
  std::vector<std::string> written_;
};

/// Command, resolved parameters, seed, version, outputs and duration. Written
/// on success and failure alike; a manifest that cannot be written is reported
/// but does not change the exit code.
struct RunManifest {
  std::string command;
  json parameters = json::object();
  std::optional<std::uint64_t> seed;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void emit(const std::string& path, const OutputSet& outputs, int exit_code, const std::string& error) const {
    if (path.empty()) return;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json m = {{"schema_version", nf::kSchemaVersion},
              {"command", command},
              {"parameters", parameters},
              {"seed", seed ? json(*seed) : json(nullptr)},
              {"tool_version", nf::kToolVersion},
              {"outputs", outputs.paths()},
              {"wall_clock_seconds", secs},
              {"exit_code", exit_code}};
    if (!error.empty()) m["error"] = error;
    std::ofstream out(path, std::ios::trunc);
    if (!(out << m.dump(2) << '\n')) std::cerr << "warning: cannot write manifest '" << path << "'\n";
  }
};

template <typename Body>
int run_guarded(RunManifest& manifest, const std::string& manifest_path, Body&& body) {
  OutputSet outputs;
  int code = 0;
  std::string error;
  try {
    body(outputs);
  } catch (const IoError& e) {
    error = e.what();
    code = kExitIo;
  } catch (const nf::ConfigError& e) {
    error = e.what();
    code = kExitInput;
  } catch (const std::domain_error& e) {
    error = e.what();
    code = kExitInput;
  } catch (const std::invalid_argument& e) {
    error = e.what();
    code = kExitInput;
  }
  if (code != 0) {
    std::cerr << "error: " << error << '\n';
    outputs.remove_all();
  }
  manifest.emit(manifest_path, outputs, code, error);
  return code;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw nf::ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotation design and simulation for two-sensor binary NOMA fusion"};
  app.set_version_flag("--version", std::string(nf::kToolVersion));
  app.require_subcommand(1);

  // design
  ParamFlags design_params;
  bool design_degrees = false;
  auto* design = app.add_subcommand("design", "closed-form optimal rotation and least planar bound (JSON)");
  design_params.add_to(design);
  design->add_flag("--degrees", design_degrees, "also report theta_star in degrees");

  // table1
  std::string table_config;
  std::string table_out;
  std::string table_manifest;
  bool table_simulate = false;
  bool table_degrees = false;
  nf::SimSettings table_sim;
  std::string table_smoothing = "pooled";
  auto* table = app.add_subcommand("table1", "optimal rotation per SNR and case (CSV)");
  table->add_option("--config", table_config, "case file; defaults to the two built-in cases");
  table->add_flag("--simulate", table_simulate, "also run the Monte Carlo sweep for theta_exp_star");
  table->add_option("--seed", table_sim.seed, "master seed");
  table->add_option("--trials", table_sim.trials, "trials per angle")->check(CLI::PositiveNumber);
  table->add_option("--bits", table_sim.bits, "source bits per trial")->check(CLI::PositiveNumber);
  table->add_option("--theta-points", table_sim.theta_points, "grid size over [0, pi/2]")
      ->check(CLI::PositiveNumber);
  table->add_option("--ma-window", table_sim.ma_window, "odd moving-average width");
  table->add_option("--smoothing", table_smoothing, "pooled | per-trial");
  table->add_option("--out", table_out, "write CSV here instead of stdout");
  table->add_option("--manifest", table_manifest, "write a run manifest (JSON)");
  table->add_flag("--degrees", table_degrees, "report angles in degrees");

  // sweep
  ParamFlags sweep_params;
  nf::SimSettings sweep_sim;
  std::string sweep_smoothing = "pooled";
  std::string sweep_prefix;
  std::string sweep_snr_list;
  std::string sweep_summary;
  std::string sweep_manifest;
  bool sweep_no_manifest = false;
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo theta sweep (CSV + JSON summary)");
  sweep->add_option("--eps1", sweep_params.eps1, "crossover probability of sensor 1");
  sweep->add_option("--eps2", sweep_params.eps2, "crossover probability of sensor 2");
  sweep->add_option("--p1", sweep_params.p1, "power of sensor 1");
  sweep->add_option("--p2", sweep_params.p2, "power of sensor 2");
  auto* sweep_n0 = sweep->add_option("--n0", sweep_params.n0, "noise power N0");
  auto* sweep_snr = sweep->add_option("--snr-db", sweep_params.snr_db, "geometric SNR in dB");
  auto* sweep_list = sweep->add_option("--snr-list", sweep_snr_list, "comma-separated SNRs in dB (curve mode)");
  auto* sweep_from = sweep->add_option("--from-summary", sweep_summary, "re-run the config embedded in a summary");
  sweep_n0->excludes(sweep_snr)->excludes(sweep_list)->excludes(sweep_from);
  sweep_snr->excludes(sweep_list)->excludes(sweep_from);
  sweep_list->excludes(sweep_from);
  sweep->add_option("--theta-points", sweep_sim.theta_points, "grid size over [0, pi/2]")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--trials", sweep_sim.trials, "trials per angle")->check(CLI::PositiveNumber);
  sweep->add_option("--bits", sweep_sim.bits, "source bits per trial")->check(CLI::PositiveNumber);
  auto* sweep_seed = sweep->add_option("--seed", sweep_sim.seed, "master seed");
  sweep->add_option("--ma-window", sweep_sim.ma_window, "odd moving-average width");
  sweep->add_option("--smoothing", sweep_smoothing, "pooled | per-trial");
  sweep->add_option("--out-prefix", sweep_prefix, "output path prefix")->required();
  sweep->add_option("--manifest", sweep_manifest, "manifest path (default <prefix>.manifest.json)");
  sweep->add_flag("--no-manifest", sweep_no_manifest, "skip the run manifest");
  sweep->callback([&] {
    if (sweep_summary.empty() && !sweep_seed->count()) throw CLI::ValidationError("--seed is required");
    if (sweep_summary.empty()) {
      for (const char* flag : {"--eps1", "--eps2", "--p1", "--p2"}) {
        if (!sweep->get_option(flag)->count()) throw CLI::ValidationError(std::string(flag) + " is required");
      }
      if (!sweep_params.n0 && !sweep_params.snr_db && sweep_snr_list.empty()) {
        throw CLI::ValidationError("one of --n0, --snr-db or --snr-list is required");
      }
    }
  });

  // regions
  ParamFlags region_params;
  std::string region_theta;
  nf::RasterBounds bounds{-4.0, 4.0, -4.0, 4.0};
  int nx = 400;
  int ny = 400;
  bool analytic = false;
  bool compare = false;
  double band = 1.0;
  std::string region_out;
  auto* regions = app.add_subcommand("regions", "rasterized decision regions (CSV x,y,bit)");
  region_params.add_to(regions);
  regions->add_option("--theta", region_theta, "rotation in radians; accepts pi/2 style")->required();
  regions->add_option("--x-min", bounds.x_min);
  regions->add_option("--x-max", bounds.x_max);
  regions->add_option("--y-min", bounds.y_min);
  regions->add_option("--y-max", bounds.y_max);
  regions->add_option("--nx", nx, "cells along x");
  regions->add_option("--ny", ny, "cells along y");
  regions->add_flag("--high-snr-analytic", analytic, "emit the limiting line-based region instead of ML");
  regions->add_flag("--compare", compare, "report ML vs limiting-region cell agreement");
  regions->add_option("--band", band, "boundary band excluded from --compare, in cells");
  regions->add_option("--out", region_out, "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  unsigned threads = 0;
  try {
    threads = threads_from_env();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }

  if (*design) {
    RunManifest manifest;
    manifest.command = "design";
    return run_guarded(manifest, "", [&](OutputSet&) {
      const auto d = nf::optimal_design(design_params.resolve());
      auto j = nf::design_json(d);
      if (design_degrees) j["theta_star_deg"] = d.theta_star * 180.0 / std::numbers::pi;
      std::cout << j.dump(2) << '\n';
    });
  }

  if (*table) {
    RunManifest manifest;
    manifest.command = "table1";
    return run_guarded(manifest, table_manifest, [&](OutputSet& outputs) {
      nf::TableConfig cfg = nf::default_table_config();
      if (!table_config.empty()) {
        std::istringstream in(read_file(table_config));
        cfg = nf::parse_table_config(in);
      }
      std::optional<nf::SimSettings> sim;
      if (table_simulate) {
        table_sim.smoothing = nf::smoothing_from_string(table_smoothing);
        table_sim.threads = threads;
        sim = table_sim;
        manifest.seed = table_sim.seed;
      }
      manifest.parameters = {{"config", table_config.empty() ? "builtin" : table_config},
                             {"snr_db", cfg.snr_db},
                             {"simulate", table_simulate}};
      if (sim) {
        manifest.parameters["trials"] = sim->trials;
        manifest.parameters["bits"] = sim->bits;
        manifest.parameters["theta_points"] = sim->theta_points;
        manifest.parameters["ma_window"] = sim->ma_window;
        manifest.parameters["smoothing"] = nf::to_string(sim->smoothing);
      }
      std::ostringstream csv;
      nf::write_table1_csv(csv, nf::table1(cfg, sim), table_degrees);
      if (table_out.empty()) {
        std::cout << csv.str();
      } else {
        outputs.write(table_out, csv.str());
      }
    });
  }

  if (*sweep) {
    RunManifest manifest;
    manifest.command = "sweep";
    const std::string manifest_path =
        sweep_no_manifest ? "" : (sweep_manifest.empty() ? sweep_prefix + ".manifest.json" : sweep_manifest);
    return run_guarded(manifest, manifest_path, [&](OutputSet& outputs) {
      sweep_sim.threads = threads;
      sweep_sim.smoothing = nf::smoothing_from_string(sweep_smoothing);
      if (!sweep_summary.empty()) {
        json summary;
        try {
          summary = json::parse(read_file(sweep_summary));
        } catch (const json::exception& e) {
          throw nf::ConfigError(std::string("cannot parse summary: ") + e.what());
        }
        if (!summary.contains("config")) throw nf::ConfigError("summary has no embedded config");
        auto config = nf::sim_config_from_json(summary.at("config"));
        config.threads = threads;
        manifest.seed = config.seed;
        manifest.parameters = nf::sim_config_json(config);
        const auto result = nf::sweep(config);
        std::ostringstream csv;
        nf::write_sweep_csv(csv, result);
        outputs.write(sweep_prefix + ".csv", csv.str());
        outputs.write(sweep_prefix + ".json", nf::sweep_summary_json(result).dump(2) + "\n");
        return;
      }

      manifest.seed = sweep_sim.seed;
      if (!sweep_snr_list.empty()) {
        const auto snrs = parse_list(sweep_snr_list, "snr");
        if (snrs.empty()) throw nf::ConfigError("--snr-list is empty");
        const nf::CaseDef c{"cli", sweep_params.eps1, sweep_params.eps2, sweep_params.p1, sweep_params.p2};
        std::vector<nf::SnrCurvePoint> points;
        json summaries = json::array();
        for (double snr : snrs) {
          points.push_back(nf::snr_curve_point(c, snr, sweep_sim));
          auto s = nf::sweep_summary_json(points.back().sweep);
          s["overlap"] = points.back().overlaps();
          summaries.push_back(std::move(s));
        }
        manifest.parameters = {{"eps1", c.eps1}, {"eps2", c.eps2}, {"p1", c.p1}, {"p2", c.p2},
                               {"snr_list", snrs}, {"theta_points", sweep_sim.theta_points},
                               {"trials", sweep_sim.trials}, {"bits", sweep_sim.bits},
                               {"ma_window", sweep_sim.ma_window}, {"smoothing", sweep_smoothing}};
        std::ostringstream csv;
        nf::write_snr_curve_csv(csv, points);
        outputs.write(sweep_prefix + "_curve.csv", csv.str());
        json doc = {{"schema_version", nf::kSchemaVersion}, {"seed", sweep_sim.seed}, {"points", summaries}};
        outputs.write(sweep_prefix + ".json", doc.dump(2) + "\n");
        return;
      }

      const auto config = sweep_sim.config_for(sweep_params.resolve());
      manifest.parameters = nf::sim_config_json(config);
      const auto result = nf::sweep(config);
      std::ostringstream csv;
      nf::write_sweep_csv(csv, result);
      outputs.write(sweep_prefix + ".csv", csv.str());
      outputs.write(sweep_prefix + ".json", nf::sweep_summary_json(result).dump(2) + "\n");
    });
  }

  if (*regions) {
    RunManifest manifest;
    manifest.command = "regions";
    return run_guarded(manifest, "", [&](OutputSet& outputs) {
      const auto params = region_params.resolve();
      const double theta = parse_angle(region_theta);
      nf::validate_raster_spec(bounds, nx, ny);
      std::optional<nf::HighSnrRegion> limit;
      if (analytic || compare) limit = nf::high_snr_region(params, theta);
      const auto raster = analytic ? nf::rasterize_high_snr(*limit, bounds, nx, ny)
                                   : nf::rasterize_regions(params, theta, bounds, nx, ny);
      std::ostringstream csv;
      raster.write_csv(csv);
      if (region_out.empty()) {
        std::cout << csv.str();
      } else {
        outputs.write(region_out, csv.str());
      }
      if (compare) {
        const auto ml = analytic ? nf::rasterize_regions(params, theta, bounds, nx, ny) : raster;
        const auto agreement = nf::compare_with_high_snr(ml, *limit, band);
        const json j = {{"agreement", agreement.fraction()},
                        {"compared", agreement.compared},
                        {"excluded", agreement.excluded}};
        (region_out.empty() ? std::cerr : std::cout) << j.dump() << '\n';
      }
    });
  }
  return 0;
}
