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

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "windfleet/core_types.hpp"

namespace windfleet {

enum class RouterKind { kXWind, kStatic, kLiveCapacity, kLatencyOnly, kCapFreq };

std::string_view to_string(RouterKind kind);
RouterKind parse_router(std::string_view text);
const std::vector<RouterKind>& all_routers();

struct RouterParams {
  double alpha = 0.3;
  double delta = 0.5;
  Seconds reactive_interval = 15.0;
  Seconds probe_interval = 1.0;

  void validate() const;
};

struct SiteSnapshot {
  int site_id = 0;
  int active_nodes = 0;
  MHz frequency = 0.0;
  // Observed TBT; 0 means no tokens were observed in the window.
  Seconds latency = 0.0;
};

// True when any site's node count or frequency differs.
bool capacity_changed(const std::vector<SiteSnapshot>& prev, const std::vector<SiteSnapshot>& curr);

// Weights proportional to c * f, scaled so they sum to the active node count.
RoutingWeights proactive_update(const std::vector<SiteSnapshot>& curr);

// Penalizes sites slower than the mean EMA latency by the clipped ratio, then
// renormalizes to sum(c). Sites without a latency estimate (<= 0) are left
// alone; an all-zero mean leaves the weights unchanged.
RoutingWeights reactive_update(const RoutingWeights& weights, const std::vector<double>& ema,
                               const std::vector<int>& active_nodes, const RouterParams& params);

// First observation initializes the average.
double ema_update(std::optional<double> smoothed, double observation, double alpha);

// Rescales so the weights sum to `target`; zero-sum input stays zero.
void normalize_to(RoutingWeights& weights, double target);

// Smooth weighted round-robin: deterministic, starvation free, and within one
// of the exact share over any window of frozen weights.
class WeightedRoundRobin {
 public:
  // nullopt when no site has positive weight.
  std::optional<int> pick(const RoutingWeights& weights);
  void reset() { credit_.clear(); }

 private:
  std::vector<double> credit_;
};

// Weights for the single-signal routers. `ema` holds per-site smoothed TBT.
RoutingWeights ablation_weights(RouterKind kind, const std::vector<SiteSnapshot>& snapshots,
                                const std::vector<int>& provisioned, const std::vector<double>& ema);

// Router state: weights, latency averages, and probe history. Owned by the
// engine and mutated on probe ticks and arrivals.
class Router {
 public:
  Router(RouterKind kind, RouterParams params, std::vector<int> provisioned);

  RouterKind kind() const { return kind_; }
  const RouterParams& params() const { return params_; }

  // Feeds one probe. Returns true when the weights were recomputed.
  bool probe(Seconds now, const std::vector<SiteSnapshot>& snapshots);

  // Same, but site latencies are only queried through `latency_of` when a
  // latency-driven update is due.
  bool probe(Seconds now, std::vector<SiteSnapshot> snapshots,
             const std::function<Seconds(int)>& latency_of);

  std::optional<int> dispatch() { return rr_.pick(weights_); }
  // Only sites with serving[s] set are eligible.
  std::optional<int> dispatch(const std::vector<bool>& serving);

  const RoutingWeights& weights() const { return weights_; }
  const std::vector<double>& ema() const { return ema_; }
  const std::vector<SiteSnapshot>& last_snapshots() const { return prev_; }

 private:
  void update_ema(const std::vector<SiteSnapshot>& snapshots);
  bool wants_latency(Seconds now, const std::vector<SiteSnapshot>& snapshots) const;

  RouterKind kind_;
  RouterParams params_;
  std::vector<int> provisioned_;
  RoutingWeights weights_;
  std::vector<double> ema_;
  std::vector<bool> ema_seeded_;
  std::vector<SiteSnapshot> prev_;
  bool has_prev_ = false;
  Seconds last_update_ = 0.0;
  WeightedRoundRobin rr_;
  RoutingWeights masked_;
};

}  // namespace windfleet
