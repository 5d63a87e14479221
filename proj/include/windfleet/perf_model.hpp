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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "windfleet/core_types.hpp"

namespace windfleet {

// Frequency -> peak dynamic power, built from the peak-load envelope.
// Node-level overhead (CPU, NIC, cooling share) is paid whenever a node is
// powered, idle or not.
class PowerTable {
 public:
  struct Knot {
    MHz frequency;
    Watts power;
  };

  PowerTable(std::vector<Knot> knots, Watts overhead_per_node);

  const std::vector<Knot>& knots() const { return knots_; }
  Watts overhead_per_node() const { return overhead_; }
  MHz min_frequency() const { return knots_.front().frequency; }
  MHz max_frequency() const { return knots_.back().frequency; }

  // True if powers never decrease between consecutive knots.
  bool is_monotone() const;

 private:
  std::vector<Knot> knots_;
  Watts overhead_;
};

struct LatencyModel {
  // Uncongested decode step: a + b / f.
  double step_intercept_s = 0.0;
  double step_slope_s_mhz = 0.0;
  // Congestion multiplier 1 + gain * max(0, u - knee)^exponent.
  double kv_knee = 0.25;
  double congestion_exponent = 2.0;
  double congestion_gain = 0.0;
  // Prefill throughput per MHz of clock.
  double prefill_rate_coeff = 1.0;

  double congestion_multiplier(double kv_util) const;
};

struct InstanceCapacity {
  std::int64_t kv_capacity_tokens = 1;
  int max_concurrent_requests = 1;
};

// Everything the simulator needs to know about one GPU generation.
struct GpuProfile {
  std::string name;
  FrequencyGrid grid;
  PowerTable power;
  LatencyModel latency;
  InstanceCapacity capacity;

  // Throws std::invalid_argument on inconsistent parameters.
  void validate() const;
};

GpuProfile a100_profile();
GpuProfile h100_profile();
GpuProfile profile_by_name(const std::string& name);

// Piecewise-linear interpolation of the envelope. Throws std::out_of_range
// outside the table.
Watts peak_power(MHz f, const PowerTable& table);

// Highest grid frequency whose peak dynamic power fits in `watts`.
std::optional<MHz> max_frequency_within(Watts watts, const PowerTable& table,
                                        const FrequencyGrid& grid);

// Largest uniform frequency for N nodes plus the number of nodes that can be
// lifted one grid step. nullopt when N nodes do not fit even at F_min.
std::optional<SiteConfig> max_config_frequency(Watts budget, int nodes, const PowerTable& table,
                                               const FrequencyGrid& grid);

enum class NodeState { kShutdown, kIdle, kActive };

Watts node_power(NodeState state, MHz f, const PowerTable& table);

// Modeled draw of a configuration, ignoring nodes outside the active set.
Watts config_power(const SiteConfig& config, const PowerTable& table, const FrequencyGrid& grid);

Seconds step_time(MHz f, double kv_util, const LatencyModel& model);
Seconds prefill_time(std::int64_t prefill_tokens, MHz f, const LatencyModel& model);

// Tolerance used in every budget comparison; absorbs summation-order noise.
inline constexpr Watts kBudgetEpsilon = 1e-6;

}  // namespace windfleet
