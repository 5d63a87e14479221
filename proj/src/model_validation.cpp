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

#include "windfleet/model_validation.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "windfleet/csv.hpp"
#include "windfleet/engine.hpp"
#include "windfleet/stats.hpp"

namespace windfleet {

namespace {

CurvePoint probe(const GpuProfile& profile, MHz f, const std::vector<Request>& trace,
                 Seconds duration) {
  SimulationInput in;
  SiteSpec site;
  site.name = "probe";
  site.nodes = 1;
  site.profile = profile;
  in.sites.push_back(site);
  const Watts ample = 2.0 * node_power(NodeState::kActive, profile.grid.max(), profile.power);
  in.power.push_back(constant_trace(0, ample, std::max<Seconds>(duration, 1.0)));
  in.trace = trace;
  in.params.router = RouterKind::kStatic;
  in.params.record_iterations = true;
  in.script.push_back({0.0, 0, SiteConfig{1, f, 0}, 0});
  auto result = run_simulation(std::move(in));

  CurvePoint p;
  p.frequency = f;
  p.power = node_power(NodeState::kActive, f, profile.power);
  std::vector<double> tbt;
  std::vector<double> kv;
  for (const auto& it : result.iterations) {
    kv.push_back(it.kv_util);
    tbt.insert(tbt.end(), static_cast<std::size_t>(it.running), it.duration);
  }
  p.tbt_p99 = tbt.empty() ? 0.0 : nearest_rank_percentile(tbt, 99.0);
  p.kv_p99 = kv.empty() ? 0.0 : nearest_rank_percentile(kv, 99.0);
  return p;
}

std::string at(MHz f) { return format_double(f) + " MHz"; }

}  // namespace

ValidationReport validate_model(const GpuProfile& profile, const ValidationOptions& options) {
  WorkloadSpec ws;
  ws.rps = options.probe_rps;
  ws.duration = options.duration;
  ws.type = options.workload;
  ws.seed = options.seed;
  const auto trace = generate_trace(ws);

  ValidationReport report;
  for (std::size_t i = 0; i < profile.grid.size(); ++i) {
    report.points.push_back(probe(profile, profile.grid[i], trace, options.duration));
  }
  const auto& pts = report.points;
  const double slack = 1.0 + options.monotone_slack;

  report.power_monotone = true;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].power < pts[i - 1].power) {
      report.power_monotone = false;
      report.violations.push_back("power: decreases from " + at(pts[i - 1].frequency) + " to " +
                                  at(pts[i].frequency));
    }
  }

  report.tbt_monotone = true;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].tbt_p99 > pts[i - 1].tbt_p99 * slack) {
      report.tbt_monotone = false;
      report.violations.push_back("tbt: P99 rises from " + at(pts[i - 1].frequency) + " to " +
                                  at(pts[i].frequency));
    }
  }

  bool kv_monotone = true;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].kv_p99 > pts[i - 1].kv_p99 * slack) {
      kv_monotone = false;
      report.violations.push_back("kv: P99 rises from " + at(pts[i - 1].frequency) + " to " +
                                  at(pts[i].frequency));
    }
  }
  // KV scales with residence time, so with no congestion it tracks the base
  // step; congestion must push it further.
  auto normalized = [&](const CurvePoint& p) {
    return p.kv_p99 / step_time(p.frequency, 0.0, profile.latency);
  };
  const double top = normalized(pts.back());
  double rise = 0.0;
  if (top > 0.0) {
    for (const auto& p : pts) rise = std::max(rise, normalized(p) / top);
  }
  report.kv_rise = rise;
  const bool rises = rise >= options.rise_ratio;
  if (!rises) {
    std::ostringstream os;
    os << "kv: no super-linear rise (max ratio " << format_double(rise) << " < "
       << format_double(options.rise_ratio) << ")";
    report.violations.push_back(os.str());
  }
  report.kv_congestion = kv_monotone && rises;
  return report;
}

void write_validation_csv(const ValidationReport& report, std::ostream& out) {
  out << "frequency_mhz,power_w,tbt_p99_s,kv_p99\n";
  for (const auto& p : report.points) {
    out << format_double(p.frequency) << ',' << format_double(p.power) << ','
        << format_double(p.tbt_p99) << ',' << format_double(p.kv_p99) << '\n';
  }
}

}  // namespace windfleet
