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

#include <string>
#include <string_view>
#include <vector>

#include "windfleet/core_types.hpp"
#include "windfleet/perf_model.hpp"

namespace windfleet {

enum class ControllerKind { kSlc, kMaxFlops, kDownclock, kIdle, kPowerCap };

std::string_view to_string(ControllerKind kind);
ControllerKind parse_controller(std::string_view text);
const std::vector<ControllerKind>& all_controllers();

struct SlcThresholds {
  double kv_max = 0.20;
  Seconds l_max = 0.100;
  double q_max = 5.0;
  MHz delta_f = 60.0;
  Seconds cycle = 180.0;
  Seconds presignal_lead = 5.0;

  void validate(const FrequencyGrid& grid) const;
};

// One entry per feasible node count 1..n_max, each at its highest frequency
// (with boosts). Empty when a single node at F_min does not fit.
std::vector<SiteConfig> candidate_configs(Watts budget, int n_max, const PowerTable& table,
                                          const FrequencyGrid& grid);

// argmax of N * f_effective; ties go to higher N, then higher f.
// Returns a zero-node config for an empty list.
SiteConfig max_capacity_product(const std::vector<SiteConfig>& configs, MHz step);

struct SlcStep {
  SiteConfig config;
  ControllerState state;
  bool congested = false;
};

// Reactive site-level controller over an explicit feasible set.
SlcStep slc_reactive_select(const std::vector<SiteConfig>& feasible, const Telemetry& telemetry,
                            const ControllerState& state, const SlcThresholds& thresholds,
                            const FrequencyGrid& grid);

SlcStep slc_reactive_step(Watts budget, int n_max, const Telemetry& telemetry,
                          const ControllerState& state, const SlcThresholds& thresholds,
                          const GpuProfile& profile);

SiteConfig slc_maxflops_step(Watts budget, int n_max, const PowerTable& table,
                             const FrequencyGrid& grid);

struct DownclockStep {
  SiteConfig config;
  // Set when all n_max nodes do not fit even at F_min; the engine must shed
  // nodes (see forced_fallback_config).
  bool budget_violation = false;
};

DownclockStep slc_downclock_step(Watts budget, int n_max, const PowerTable& table,
                                 const FrequencyGrid& grid);

// Largest node count at F_min that fits; the last-resort config when a
// baseline without a node knob cannot meet its budget.
SiteConfig forced_fallback_config(Watts budget, int n_max, const PowerTable& table,
                                  const FrequencyGrid& grid);

struct IdleStep {
  SiteConfig config;
  // Inactive nodes kept idling (overhead only); the remainder is shut down
  // when the budget cannot pay the idle tax for all of them.
  int idle_nodes = 0;
};

IdleStep slc_idle_step(Watts budget, int n_max, const PowerTable& table, const FrequencyGrid& grid);

struct PowerCapStep {
  SiteConfig config;
  // Per-node dynamic power limit.
  Watts cap = 0.0;
  bool budget_violation = false;
};

// Frequency a capped node settles at for a given utilization.
MHz powercap_frequency(Watts cap, double util_estimate, double u_min, const PowerTable& table,
                       const FrequencyGrid& grid);

PowerCapStep slc_powercap_step(Watts budget, int n_max, const PowerTable& table,
                               const FrequencyGrid& grid, double util_estimate, double u_min);

}  // namespace windfleet
