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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace windfleet {

// Simulation clock, seconds since the start of the run.
using Seconds = double;
using MHz = double;
using Watts = double;

enum class WorkloadTag { kCoding, kConversation, kMixedOrigin };

std::string_view to_string(WorkloadTag tag);
WorkloadTag parse_workload_tag(std::string_view text);

struct Request {
  std::int64_t id = 0;
  Seconds arrival_time = 0.0;
  std::int32_t prefill_tokens = 1;
  std::int32_t decode_tokens = 1;
  WorkloadTag workload_tag = WorkloadTag::kConversation;

  bool operator==(const Request&) const = default;
};

// Lifecycle of one served request. Timestamps are filled in by the engine.
struct RequestRecord {
  Request request;
  int site_id = -1;
  int instance_id = -1;
  Seconds enqueue_time = 0.0;
  Seconds dequeue_time = 0.0;
  Seconds first_token_time = 0.0;
  Seconds completion_time = 0.0;

  Seconds queue_time() const { return dequeue_time - enqueue_time; }
  Seconds e2e() const { return completion_time - request.arrival_time; }
  Seconds ttft() const { return first_token_time - request.arrival_time; }
  // Mean gap between consecutive tokens; a single-token decode reports 0.
  Seconds mean_tbt() const;
  bool timestamps_ordered() const;
};

struct SiteConfig {
  int active_nodes = 0;
  MHz base_frequency = 0.0;
  int boosted_nodes = 0;

  // Boost-weighted mean frequency over the active nodes.
  MHz effective_frequency(MHz step) const;
  double capacity_product(MHz step) const {
    return active_nodes * effective_frequency(step);
  }

  bool operator==(const SiteConfig&) const = default;
};

struct Telemetry {
  double kv_util = 0.0;
  double queue_depth = 0.0;
  Seconds tbt = 0.0;
};

class FrequencyGrid {
 public:
  FrequencyGrid(MHz f_min, MHz f_max, MHz step);

  MHz min() const { return f_min_; }
  MHz max() const { return f_max_; }
  MHz step() const { return step_; }
  std::size_t size() const { return levels_.size(); }
  const std::vector<MHz>& levels() const { return levels_; }
  MHz operator[](std::size_t i) const { return levels_[i]; }

  // Index of the exact grid member, if `f` is one.
  std::optional<std::size_t> index_of(MHz f) const;
  bool contains(MHz f) const { return index_of(f).has_value(); }

 private:
  MHz f_min_;
  MHz f_max_;
  MHz step_;
  std::vector<MHz> levels_;
};

// Nearest grid member; ties resolve toward the higher frequency.
MHz clamp_frequency(MHz f, const FrequencyGrid& grid);

struct ControllerState {
  MHz f_floor = 0.0;
  int n_curr = 0;
  SiteConfig current;
};

// Per-site traffic shares. Sums to the total active node count after every
// router update.
struct RoutingWeights {
  std::vector<double> w;

  double total() const;
  std::size_t size() const { return w.size(); }
};

}  // namespace windfleet
