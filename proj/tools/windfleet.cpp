/* Copyright 2026 The windfleet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "windfleet/config.hpp"
#include "windfleet/csv.hpp"
#include "windfleet/feasibility.hpp"
#include "windfleet/metrics.hpp"
#include "windfleet/model_validation.hpp"
#include "windfleet/workload.hpp"

namespace fs = std::filesystem;
using namespace windfleet;

namespace {

std::ofstream open_out(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

// Writes to `path`, or stdout when it is empty or "-".
template <typename F>
void emit(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
  } else {
    auto out = open_out(path);
    write(out);
  }
}

GeoPoint parse_point(const std::string& text) {
  const auto f = split_csv_line(text);
  if (f.size() != 2) throw std::invalid_argument("expected 'lat,lon', got '" + text + "'");
  return {parse_double(f[0], "lat"), parse_double(f[1], "lon")};
}

ExperimentConfig config_or_preset(const std::string& file) {
  if (fs::exists(file)) return load_config(file);
  for (const auto& name : preset_names()) {
    if (name == file) return preset(name);
  }
  throw ConfigError("config file '" + file + "' not found (presets: desk-scale, paper-testbed)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"windfleet: power-following LLM serving across renewable sites"};
  app.require_subcommand(1);

  // gen-workload
  auto* gw = app.add_subcommand("gen-workload", "Generate a Poisson request trace");
  std::string gw_type = "conversation";
  double gw_rps = 0.0;
  double gw_duration = 0.0;
  std::uint64_t gw_seed = 1;
  std::string gw_out;
  gw->add_option("--type", gw_type, "coding, conversation or mixed")
      ->check(CLI::IsMember({"coding", "conversation", "mixed"}));
  gw->add_option("--rps", gw_rps, "Mean arrival rate")->required()->check(CLI::PositiveNumber);
  gw->add_option("--duration", gw_duration, "Trace length in seconds")->required()->check(CLI::NonNegativeNumber);
  gw->add_option("--seed", gw_seed, "RNG seed");
  gw->add_option("--out", gw_out, "Output CSV (stdout if omitted)");

  // gen-power
  auto* gp = app.add_subcommand("gen-power", "Generate per-site power availability");
  int gp_sites = 3;
  std::string gp_profile = "paper-drop";
  double gp_peak = 0.0;
  double gp_pct = 100.0;
  double gp_duration = 7200.0;
  double gp_granularity = 900.0;
  std::vector<double> gp_shares;
  std::string gp_out;
  gp->add_option("--sites", gp_sites, "Number of sites")->check(CLI::PositiveNumber);
  gp->add_option("--profile", gp_profile, "paper-drop or constant")
      ->check(CLI::IsMember({"paper-drop", "constant"}));
  gp->add_option("--fleet-peak", gp_peak, "Fleet-wide watts at the provisioning percentile")
      ->required()
      ->check(CLI::PositiveNumber);
  gp->add_option("--percentile", gp_pct, "Provisioning percentile")->check(CLI::Range(0.0, 100.0));
  gp->add_option("--duration", gp_duration, "Trace length in seconds")->check(CLI::PositiveNumber);
  gp->add_option("--granularity", gp_granularity, "Sample spacing in seconds")->check(CLI::PositiveNumber);
  gp->add_option("--shares", gp_shares, "Per-site capacity shares (default 2,1,...,1)")->delimiter(',');
  gp->add_option("--out", gp_out, "Output CSV (stdout if omitted)");

  // run
  auto* run = app.add_subcommand("run", "Run one experiment");
  std::string run_config;
  std::optional<std::string> run_controller;
  std::optional<std::string> run_router;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_type;
  std::optional<double> run_rps;
  std::optional<double> run_duration;
  std::string run_out;
  run->add_option("--config", run_config, "Config file or preset name")->required();
  run->add_option("--controller", run_controller, "slc, maxflops, downclock, idle or powercap")
      ->check(CLI::IsMember({"slc", "maxflops", "downclock", "idle", "powercap"}));
  run->add_option("--router", run_router, "xwind, static, livecap, latency or capfreq")
      ->check(CLI::IsMember({"xwind", "static", "livecap", "latency", "capfreq"}));
  run->add_option("--seed", run_seed, "Workload seed");
  run->add_option("--type", run_type, "Workload type override")
      ->check(CLI::IsMember({"coding", "conversation", "mixed"}));
  run->add_option("--rps", run_rps, "Arrival rate override")->check(CLI::PositiveNumber);
  run->add_option("--duration", run_duration, "Trace length override")->check(CLI::NonNegativeNumber);
  run->add_option("--out", run_out, "Output directory")->required();

  // validate-model
  auto* vm = app.add_subcommand("validate-model", "Check the frequency trends of every profile a config uses");
  std::string vm_config;
  std::string vm_out;
  std::uint64_t vm_seed = 1;
  vm->add_option("--config", vm_config, "Config file or preset name")->required();
  vm->add_option("--out", vm_out, "Directory for per-profile curve CSVs");
  vm->add_option("--seed", vm_seed, "Probe trace seed");

  // feasibility
  auto* fe = app.add_subcommand("feasibility", "Generation-side analytics");
  fe->require_subcommand(1);
  auto* fa = fe->add_subcommand("availability", "Availability vs provisioning percentile");
  std::string fa_series;
  std::vector<double> fa_pcts{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  double fa_theta = 0.7;
  std::string fa_out;
  fa->add_option("--series", fa_series, "Wide CSV 'time,<site>...'")->required()->check(CLI::ExistingFile);
  fa->add_option("--percentiles", fa_pcts, "Comma-separated percentiles")->delimiter(',');
  fa->add_option("--theta", fa_theta, "Fraction of provisioned power that counts as available");
  fa->add_option("--out", fa_out, "Output CSV (stdout if omitted)");

  auto* fc = fe->add_subcommand("cov", "Per-site CoV and aggregate CoV reduction");
  std::string fc_series;
  fc->add_option("--series", fc_series, "Wide CSV")->required()->check(CLI::ExistingFile);

  auto* fr = fe->add_subcommand("autocorr", "Lag-1 autocorrelation per site");
  std::string fr_series;
  fr->add_option("--series", fr_series, "Wide CSV")->required()->check(CLI::ExistingFile);

  auto* ft = fe->add_subcommand("rtt", "Fiber round-trip estimate");
  std::string ft_coords;
  std::string ft_a;
  std::string ft_b;
  double ft_stretch = 1.5;
  double ft_index = 1.468;
  ft->add_option("--coords", ft_coords, "CSV 'label,lat,lon'; prints the pairwise matrix")
      ->check(CLI::ExistingFile);
  ft->add_option("--from", ft_a, "lat,lon");
  ft->add_option("--to", ft_b, "lat,lon");
  ft->add_option("--stretch", ft_stretch, "Path stretch over great-circle")->check(CLI::PositiveNumber);
  ft->add_option("--index", ft_index, "Fiber refractive index")->check(CLI::PositiveNumber);

  auto* fs_ = fe->add_subcommand("synth", "Synthetic wind-like generation series");
  int fs_sites = 3;
  std::size_t fs_len = 8760;
  double fs_phi = 0.9;
  double fs_rho = -0.3;
  std::uint64_t fs_seed = 1;
  std::string fs_out;
  fs_->add_option("--sites", fs_sites, "Number of sites")->check(CLI::PositiveNumber);
  fs_->add_option("--length", fs_len, "Samples per site")->check(CLI::PositiveNumber);
  fs_->add_option("--phi", fs_phi, "AR(1) coefficient")->check(CLI::Range(-0.999, 0.999));
  fs_->add_option("--cross-corr", fs_rho, "Cross-site innovation correlation");
  fs_->add_option("--seed", fs_seed, "RNG seed");
  fs_->add_option("--out", fs_out, "Output CSV (stdout if omitted)");

  // compare
  auto* cmp = app.add_subcommand("compare", "Rank run directories by P99 E2E");
  std::vector<std::string> cmp_dirs;
  std::string cmp_out;
  cmp->add_option("dirs", cmp_dirs, "Run directories")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--out", cmp_out, "Also write the table as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gw) {
      WorkloadSpec ws;
      ws.type = parse_workload_type(gw_type);
      ws.rps = gw_rps;
      ws.duration = gw_duration;
      ws.seed = gw_seed;
      const auto trace = generate_trace(ws);
      emit(gw_out, [&](std::ostream& os) { save_trace(trace, os); });
      std::cerr << trace.size() << " requests\n";
    } else if (*gp) {
      std::vector<PowerTrace> shapes;
      if (gp_profile == "paper-drop") {
        shapes = paper_drop_profile(gp_sites, gp_duration, gp_granularity);
      } else {
        for (int i = 0; i < gp_sites; ++i) shapes.push_back(constant_trace(i, 1.0, gp_duration, gp_granularity));
      }
      if (gp_shares.empty()) {
        gp_shares.assign(gp_sites, 1.0);
        if (gp_sites > 1) gp_shares[0] = 2.0;
      }
      const auto traces = fleet_power(shapes, gp_shares, gp_peak, gp_pct);
      emit(gp_out, [&](std::ostream& os) { save_power_csv(traces, os); });
    } else if (*run) {
      auto config = config_or_preset(run_config);
      if (run_controller) config.engine.controller = parse_controller(*run_controller);
      if (run_router) config.engine.router = parse_router(*run_router);
      if (run_seed) config.workload.seed = *run_seed;
      if (run_type) config.workload.type = parse_workload_type(*run_type);
      if (run_rps) config.workload.rps = *run_rps;
      if (run_duration) config.workload.duration = *run_duration;
      config.validate();
      const auto artifacts = run_experiment(config);
      write_artifacts(artifacts, run_out);
      std::cout << to_string(config.engine.controller) << '/' << to_string(config.engine.router)
                << " seed " << config.workload.seed << '\n'
                << format_summary(summarize(artifacts.result.records));
    } else if (*vm) {
      const auto config = config_or_preset(vm_config);
      std::set<std::string> seen;
      bool ok = true;
      for (const auto& site : config.sites) {
        if (!seen.insert(site.profile).second) continue;
        const auto& pc = config.profiles.at(site.profile);
        ValidationOptions opt;
        opt.probe_rps = pc.probe_rps;
        opt.seed = vm_seed;
        const auto report = validate_model(pc.profile, opt);
        std::cout << site.profile << " @ " << pc.probe_rps << " rps: power "
                  << (report.power_monotone ? "pass" : "FAIL") << ", tbt " << (report.tbt_monotone ? "pass" : "FAIL")
                  << ", kv " << (report.kv_congestion ? "pass" : "FAIL") << " (kv rise "
                  << format_double(report.kv_rise) << ")\n";
        for (const auto& v : report.violations) std::cout << "  " << v << '\n';
        if (!vm_out.empty()) {
          auto out = open_out((fs::path(vm_out) / (site.profile + "_curve.csv")).string());
          write_validation_csv(report, out);
        }
        ok = ok && report.passed();
      }
      return ok ? 0 : 3;
    } else if (*fa) {
      const auto sites = load_series_csv(fa_series);
      const auto curve = availability_curve(sites, fa_pcts, fa_theta);
      emit(fa_out, [&](std::ostream& os) {
        os << "percentile,availability\n";
        for (const auto& p : curve) os << format_double(p.percentile) << ',' << format_double(p.availability) << '\n';
      });
    } else if (*fc) {
      const auto sites = load_series_csv(fc_series);
      std::cout << "site,cov\n";
      for (const auto& s : sites) std::cout << s.label << ',' << format_double(cov(s.values)) << '\n';
      std::cout << "cov_reduction," << format_double(cov_reduction(sites)) << '\n';
    } else if (*fr) {
      const auto sites = load_series_csv(fr_series);
      std::cout << "site,lag1_autocorr\n";
      for (const auto& s : sites) std::cout << s.label << ',' << format_double(lag1_autocorr(s.values)) << '\n';
    } else if (*ft) {
      if (!ft_coords.empty()) {
        const auto pts = load_coordinates_csv(ft_coords);
        std::cout << "from,to,rtt_ms\n";
        for (std::size_t i = 0; i < pts.size(); ++i) {
          for (std::size_t j = i + 1; j < pts.size(); ++j) {
            std::cout << pts[i].label << ',' << pts[j].label << ','
                      << format_double(fiber_rtt(pts[i].point, pts[j].point, ft_stretch, ft_index)) << '\n';
          }
        }
      } else if (!ft_a.empty() && !ft_b.empty()) {
        std::cout << format_double(fiber_rtt(parse_point(ft_a), parse_point(ft_b), ft_stretch, ft_index))
                  << '\n';
      } else {
        std::cerr << "rtt: give --coords FILE or both --from and --to\n";
        return 2;
      }
    } else if (*fs_) {
      const auto sites = synthetic_wind_sites(fs_sites, fs_len, fs_phi, fs_rho, fs_seed);
      emit(fs_out, [&](std::ostream& os) { save_series_csv(sites, os); });
    } else if (*cmp) {
      std::vector<fs::path> dirs(cmp_dirs.begin(), cmp_dirs.end());
      const auto rows = compare(dirs);
      std::cout << format_comparison(rows);
      if (!cmp_out.empty()) {
        auto out = open_out(cmp_out);
        out << "run,dir,p95_e2e_s,p99_e2e_s,p999_e2e_s,p99_queue_s\n";
        for (const auto& r : rows) {
          if (r.summary.empty) continue;
          const auto& e = r.summary.row(Metric::kE2e);
          out << r.label << ',' << r.dir.string() << ',' << format_double(e.p95) << ','
              << format_double(e.p99) << ',' << format_double(e.p999) << ','
              << format_double(r.summary.row(Metric::kQueue).p99) << '\n';
        }
      }
    }
  } catch (const SimulationError& e) {
    std::cerr << "simulation invariant violated: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
