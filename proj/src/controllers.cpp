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

#include "windfleet/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace windfleet {

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kSlc:
      return "slc";
    case ControllerKind::kMaxFlops:
      return "maxflops";
    case ControllerKind::kDownclock:
      return "downclock";
    case ControllerKind::kIdle:
      return "idle";
    case ControllerKind::kPowerCap:
      return "powercap";
  }
  return "unknown";
}

ControllerKind parse_controller(std::string_view text) {
  for (ControllerKind kind : all_controllers()) {
    if (text == to_string(kind)) return kind;
  }
  throw std::invalid_argument("unknown controller '" + std::string(text) +
                              "' (expected slc|maxflops|downclock|idle|powercap)");
}

const std::vector<ControllerKind>& all_controllers() {
  static const std::vector<ControllerKind> kinds = {
      ControllerKind::kSlc, ControllerKind::kMaxFlops, ControllerKind::kDownclock,
      ControllerKind::kPowerCap, ControllerKind::kIdle};
  return kinds;
}

void SlcThresholds::validate(const FrequencyGrid& grid) const {
  if (!(kv_max > 0.0 && l_max > 0.0 && q_max > 0.0 && delta_f > 0.0 && cycle > 0.0 &&
        presignal_lead > 0.0)) {
    throw std::invalid_argument("controller thresholds must all be strictly positive");
  }
  if (std::abs(delta_f - grid.step()) > 1e-9) {
    throw std::invalid_argument("delta_f must equal the frequency grid step");
  }
  if (presignal_lead >= cycle) {
    throw std::invalid_argument("presignal lead must be shorter than the decision cycle");
  }
}

std::vector<SiteConfig> candidate_configs(Watts budget, int n_max, const PowerTable& table,
                                          const FrequencyGrid& grid) {
  if (n_max < 1) throw std::invalid_argument("candidate_configs needs n_max >= 1");
  std::vector<SiteConfig> out;
  for (int n = 1; n <= n_max; ++n) {
    auto config = max_config_frequency(budget, n, table, grid);
    // Peak power is monotone, so larger N cannot become feasible again.
    if (!config) break;
    out.push_back(*config);
  }
  return out;
}

SiteConfig max_capacity_product(const std::vector<SiteConfig>& configs, MHz step) {
  SiteConfig best;
  double best_product = -1.0;
  for (const auto& c : configs) {
    const double product = c.capacity_product(step);
    const bool better =
        product > best_product + 1e-9 ||
        (std::abs(product - best_product) <= 1e-9 &&
         (c.active_nodes > best.active_nodes ||
          (c.active_nodes == best.active_nodes &&
           c.effective_frequency(step) > best.effective_frequency(step))));
    if (better) {
      best = c;
      best_product = product;
    }
  }
  return best;
}

SlcStep slc_reactive_select(const std::vector<SiteConfig>& feasible, const Telemetry& telemetry,
                            const ControllerState& state, const SlcThresholds& thresholds,
                            const FrequencyGrid& grid) {
  SlcStep out;
  out.state = state;
  out.congested = telemetry.queue_depth > thresholds.q_max;
  if (feasible.empty()) {
    out.config = SiteConfig{};
    return out;
  }

  if (!out.congested) {
    MHz& floor = out.state.f_floor;
    if (telemetry.kv_util > thresholds.kv_max) {
      floor += 2.0 * thresholds.delta_f;
    } else if (telemetry.tbt > thresholds.l_max) {
      floor += thresholds.delta_f;
    } else if (telemetry.tbt < thresholds.l_max && telemetry.kv_util < thresholds.kv_max &&
               telemetry.queue_depth < thresholds.q_max / 2.0) {
      floor -= thresholds.delta_f;
    }
    floor = std::clamp(floor, grid.min(), grid.max());
  }

  std::vector<SiteConfig> filtered;
  for (const auto& c : feasible) {
    const bool keep = out.congested ? c.active_nodes >= state.n_curr
                                    : c.base_frequency >= out.state.f_floor - 1e-9;
    if (keep) filtered.push_back(c);
  }
  out.config = max_capacity_product(filtered.empty() ? feasible : filtered, grid.step());
  out.state.n_curr = out.config.active_nodes;
  out.state.current = out.config;
  return out;
}

SlcStep slc_reactive_step(Watts budget, int n_max, const Telemetry& telemetry,
                          const ControllerState& state, const SlcThresholds& thresholds,
                          const GpuProfile& profile) {
  return slc_reactive_select(candidate_configs(budget, n_max, profile.power, profile.grid),
                             telemetry, state, thresholds, profile.grid);
}

SiteConfig slc_maxflops_step(Watts budget, int n_max, const PowerTable& table,
                             const FrequencyGrid& grid) {
  return max_capacity_product(candidate_configs(budget, n_max, table, grid), grid.step());
}

DownclockStep slc_downclock_step(Watts budget, int n_max, const PowerTable& table,
                                 const FrequencyGrid& grid) {
  if (n_max < 1) throw std::invalid_argument("downclock needs n_max >= 1");
  const Watts per_node = budget / n_max - table.overhead_per_node();
  if (auto f = max_frequency_within(per_node, table, grid)) {
    return {SiteConfig{n_max, *f, 0}, false};
  }
  return {SiteConfig{n_max, grid.min(), 0}, true};
}

SiteConfig forced_fallback_config(Watts budget, int n_max, const PowerTable& table,
                                  const FrequencyGrid& grid) {
  const Watts per_node = node_power(NodeState::kActive, grid.min(), table);
  int n = static_cast<int>(std::floor((budget + kBudgetEpsilon) / per_node));
  n = std::clamp(n, 0, n_max);
  if (n == 0) return SiteConfig{};
  return SiteConfig{n, grid.min(), 0};
}

IdleStep slc_idle_step(Watts budget, int n_max, const PowerTable& table, const FrequencyGrid& grid) {
  if (n_max < 1) throw std::invalid_argument("idle controller needs n_max >= 1");
  const Watts active = node_power(NodeState::kActive, grid.max(), table);
  const Watts idle = node_power(NodeState::kIdle, grid.max(), table);
  int n = n_max;
  while (n > 0 && n * active + (n_max - n) * idle > budget + kBudgetEpsilon) --n;
  IdleStep out;
  out.config = n > 0 ? SiteConfig{n, grid.max(), 0} : SiteConfig{};
  const Watts spare = budget - n * active;
  int idle_nodes = n_max - n;
  if (idle > 0.0 && idle_nodes * idle > spare + kBudgetEpsilon) {
    idle_nodes = std::max(0, static_cast<int>(std::floor((spare + kBudgetEpsilon) / idle)));
  }
  out.idle_nodes = idle_nodes;
  return out;
}

MHz powercap_frequency(Watts cap, double util_estimate, double u_min, const PowerTable& table,
                       const FrequencyGrid& grid) {
  const double util = std::max(util_estimate, u_min);
  if (auto f = max_frequency_within(cap / util, table, grid)) return *f;
  return grid.min();
}

PowerCapStep slc_powercap_step(Watts budget, int n_max, const PowerTable& table,
                               const FrequencyGrid& grid, double util_estimate, double u_min) {
  if (n_max < 1) throw std::invalid_argument("power capping needs n_max >= 1");
  PowerCapStep out;
  int n = n_max;
  if (budget / n_max - table.overhead_per_node() < peak_power(grid.min(), table) - kBudgetEpsilon) {
    out.budget_violation = true;
    n = forced_fallback_config(budget, n_max, table, grid).active_nodes;
  }
  if (n == 0) return out;
  out.cap = budget / n - table.overhead_per_node();
  out.config =
      SiteConfig{n, powercap_frequency(out.cap, util_estimate, u_min, table, grid), 0};
  return out;
}

}  // namespace windfleet
