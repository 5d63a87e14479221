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

#include "windfleet/perf_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace windfleet {

PowerTable::PowerTable(std::vector<Knot> knots, Watts overhead_per_node)
    : knots_(std::move(knots)), overhead_(overhead_per_node) {
  if (knots_.empty()) throw std::invalid_argument("power table has no knots");
  if (overhead_ < 0.0) throw std::invalid_argument("node overhead must be non-negative");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (knots_[i].power < 0.0) throw std::invalid_argument("power table entry is negative");
    if (i > 0 && !(knots_[i].frequency > knots_[i - 1].frequency)) {
      throw std::invalid_argument("power table frequencies must be strictly increasing");
    }
  }
}

bool PowerTable::is_monotone() const {
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (knots_[i].power < knots_[i - 1].power) return false;
  }
  return true;
}

double LatencyModel::congestion_multiplier(double kv_util) const {
  const double excess = kv_util - kv_knee;
  if (excess <= 0.0 || congestion_gain <= 0.0) return 1.0;
  return 1.0 + congestion_gain * std::pow(excess, congestion_exponent);
}

void GpuProfile::validate() const {
  if (std::abs(power.min_frequency() - grid.min()) > 1e-9 ||
      std::abs(power.max_frequency() - grid.max()) > 1e-9) {
    throw std::invalid_argument(name + ": power table must span the frequency grid");
  }
  if (!(latency.step_slope_s_mhz > 0.0)) {
    throw std::invalid_argument(name + ": step time must strictly decrease with frequency");
  }
  if (!(step_time(grid.max(), 0.0, latency) > 0.0)) {
    throw std::invalid_argument(name + ": step time at F_max must be positive");
  }
  if (!(latency.kv_knee > 0.0 && latency.kv_knee < 1.0)) {
    throw std::invalid_argument(name + ": kv_knee must lie in (0, 1)");
  }
  if (latency.congestion_exponent < 1.0 || latency.congestion_gain < 0.0) {
    throw std::invalid_argument(name + ": congestion exponent >= 1 and gain >= 0 required");
  }
  if (!(latency.prefill_rate_coeff > 0.0)) {
    throw std::invalid_argument(name + ": prefill_rate_coeff must be positive");
  }
  if (capacity.kv_capacity_tokens < 1 || capacity.max_concurrent_requests < 1) {
    throw std::invalid_argument(name + ": instance capacities must be >= 1");
  }
}

namespace {

// Convex envelope sampled on the grid, rounded to 0.1 W.
std::vector<PowerTable::Knot> convex_envelope(const FrequencyGrid& grid, Watts at_min,
                                              Watts at_max, double shape) {
  std::vector<PowerTable::Knot> knots;
  for (MHz f : grid.levels()) {
    const double x = (f - grid.min()) / (grid.max() - grid.min());
    const double w = at_min + (at_max - at_min) * std::pow(x, shape);
    knots.push_back({f, std::round(w * 10.0) / 10.0});
  }
  return knots;
}

}  // namespace

GpuProfile a100_profile() {
  FrequencyGrid grid(510.0, 1410.0, 60.0);
  // 240 W node overhead plus 572 W dynamic at F_max gives 812 W per node
  // (one eighth of a 6.5 kW DGX); idle is ~30% of that.
  PowerTable power(convex_envelope(grid, 150.0, 572.0, 2.0), 240.0);
  LatencyModel latency;
  // 50 ms per token at F_max, 2.5x that at F_min.
  latency.step_intercept_s = 0.0075;
  latency.step_slope_s_mhz = 59.925;
  latency.kv_knee = 0.05;
  latency.congestion_exponent = 1.0;
  latency.congestion_gain = 2.0;
  latency.prefill_rate_coeff = 20.0;
  InstanceCapacity capacity{150000, 256};
  GpuProfile profile{"a100", grid, power, latency, capacity};
  profile.validate();
  return profile;
}

GpuProfile h100_profile() {
  FrequencyGrid grid(600.0, 1980.0, 60.0);
  PowerTable power(convex_envelope(grid, 220.0, 900.0, 2.0), 375.0);
  LatencyModel latency;
  latency.step_intercept_s = 0.0104;
  latency.step_slope_s_mhz = 38.74;
  latency.kv_knee = 0.05;
  latency.congestion_exponent = 1.0;
  latency.congestion_gain = 2.0;
  latency.prefill_rate_coeff = 40.0;
  InstanceCapacity capacity{150000, 256};
  GpuProfile profile{"h100", grid, power, latency, capacity};
  profile.validate();
  return profile;
}

GpuProfile profile_by_name(const std::string& name) {
  if (name == "a100") return a100_profile();
  if (name == "h100") return h100_profile();
  throw std::invalid_argument("unknown GPU profile '" + name + "' (expected a100 or h100)");
}

Watts peak_power(MHz f, const PowerTable& table) {
  const auto& knots = table.knots();
  const double tol = 1e-9;
  if (f < knots.front().frequency - tol || f > knots.back().frequency + tol) {
    throw std::out_of_range("frequency " + std::to_string(f) + " MHz outside power table");
  }
  if (f <= knots.front().frequency) return knots.front().power;
  if (f >= knots.back().frequency) return knots.back().power;
  auto hi = std::upper_bound(knots.begin(), knots.end(), f,
                             [](MHz v, const PowerTable::Knot& k) { return v < k.frequency; });
  auto lo = std::prev(hi);
  const double t = (f - lo->frequency) / (hi->frequency - lo->frequency);
  return lo->power + t * (hi->power - lo->power);
}

std::optional<MHz> max_frequency_within(Watts watts, const PowerTable& table,
                                        const FrequencyGrid& grid) {
  for (std::size_t i = grid.size(); i-- > 0;) {
    if (peak_power(grid[i], table) <= watts + kBudgetEpsilon) return grid[i];
  }
  return std::nullopt;
}

std::optional<SiteConfig> max_config_frequency(Watts budget, int nodes, const PowerTable& table,
                                               const FrequencyGrid& grid) {
  if (nodes < 1) throw std::invalid_argument("max_config_frequency needs at least one node");
  const double n = nodes;
  const Watts overhead = table.overhead_per_node();
  std::optional<std::size_t> best;
  for (std::size_t i = grid.size(); i-- > 0;) {
    if (n * (overhead + peak_power(grid[i], table)) <= budget + kBudgetEpsilon) {
      best = i;
      break;
    }
  }
  if (!best) return std::nullopt;

  SiteConfig config{nodes, grid[*best], 0};
  if (*best + 1 < grid.size()) {
    const Watts base = peak_power(grid[*best], table);
    const Watts boosted = peak_power(grid[*best + 1], table);
    for (int k = nodes; k > 0; --k) {
      const Watts total = (n - k) * base + k * boosted + n * overhead;
      if (total <= budget + kBudgetEpsilon) {
        config.boosted_nodes = k;
        break;
      }
    }
  }
  return config;
}

Watts node_power(NodeState state, MHz f, const PowerTable& table) {
  switch (state) {
    case NodeState::kShutdown:
      return 0.0;
    case NodeState::kIdle:
      return table.overhead_per_node();
    case NodeState::kActive:
      return table.overhead_per_node() + peak_power(f, table);
  }
  return 0.0;
}

Watts config_power(const SiteConfig& config, const PowerTable& table, const FrequencyGrid& grid) {
  if (config.active_nodes <= 0) return 0.0;
  const int plain = config.active_nodes - config.boosted_nodes;
  Watts total = plain * node_power(NodeState::kActive, config.base_frequency, table);
  if (config.boosted_nodes > 0) {
    total += config.boosted_nodes *
             node_power(NodeState::kActive, config.base_frequency + grid.step(), table);
  }
  return total;
}

Seconds step_time(MHz f, double kv_util, const LatencyModel& model) {
  const Seconds base = model.step_intercept_s + model.step_slope_s_mhz / f;
  return base * model.congestion_multiplier(kv_util);
}

Seconds prefill_time(std::int64_t prefill_tokens, MHz f, const LatencyModel& model) {
  return static_cast<double>(prefill_tokens) / (model.prefill_rate_coeff * f);
}

}  // namespace windfleet
