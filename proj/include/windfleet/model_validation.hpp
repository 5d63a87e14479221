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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "windfleet/perf_model.hpp"
#include "windfleet/workload.hpp"

namespace windfleet {

struct ValidationOptions {
  double probe_rps = 4.0;
  Seconds duration = 600.0;
  std::uint64_t seed = 1;
  WorkloadType workload = WorkloadType::kConversation;
  // Relative slack on the monotonicity checks; the probe is stochastic.
  double monotone_slack = 0.02;
  // Minimum growth of P99 KV per unit of uncongested step time, relative to F_max.
  double rise_ratio = 1.3;
};

struct CurvePoint {
  MHz frequency = 0.0;
  Watts power = 0.0;
  Seconds tbt_p99 = 0.0;
  double kv_p99 = 0.0;
};

struct ValidationReport {
  std::vector<CurvePoint> points;
  bool power_monotone = false;
  bool tbt_monotone = false;
  bool kv_congestion = false;
  double kv_rise = 0.0;
  std::vector<std::string> violations;

  bool passed() const { return power_monotone && tbt_monotone && kv_congestion; }
};

// Single instance, one scripted frequency per grid point, same arrival trace
// at every point.
ValidationReport validate_model(const GpuProfile& profile, const ValidationOptions& options = {});

void write_validation_csv(const ValidationReport& report, std::ostream& out);

}  // namespace windfleet
