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

#include "windfleet/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace windfleet {

std::string_view to_string(WorkloadTag tag) {
  switch (tag) {
    case WorkloadTag::kCoding:
      return "coding";
    case WorkloadTag::kConversation:
      return "conversation";
    case WorkloadTag::kMixedOrigin:
      return "mixed-origin";
  }
  return "unknown";
}

WorkloadTag parse_workload_tag(std::string_view text) {
  if (text == "coding") return WorkloadTag::kCoding;
  if (text == "conversation") return WorkloadTag::kConversation;
  if (text == "mixed-origin" || text == "mixed") return WorkloadTag::kMixedOrigin;
  throw std::invalid_argument("unknown workload tag '" + std::string(text) + "'");
}

Seconds RequestRecord::mean_tbt() const {
  if (request.decode_tokens <= 1) return 0.0;
  return (completion_time - first_token_time) / (request.decode_tokens - 1);
}

bool RequestRecord::timestamps_ordered() const {
  return request.arrival_time <= enqueue_time && enqueue_time <= dequeue_time &&
         dequeue_time <= first_token_time && first_token_time <= completion_time;
}

MHz SiteConfig::effective_frequency(MHz step) const {
  if (active_nodes <= 0) return 0.0;
  return base_frequency + step * static_cast<double>(boosted_nodes) / active_nodes;
}

FrequencyGrid::FrequencyGrid(MHz f_min, MHz f_max, MHz step)
    : f_min_(f_min), f_max_(f_max), step_(step) {
  if (!(step > 0.0)) throw std::invalid_argument("frequency grid step must be positive");
  if (!(f_min > 0.0) || f_max < f_min) {
    throw std::invalid_argument("frequency grid needs 0 < f_min <= f_max");
  }
  const double span = (f_max - f_min) / step;
  const auto n = static_cast<std::size_t>(std::llround(span));
  if (std::abs(span - static_cast<double>(n)) > 1e-9) {
    throw std::invalid_argument("frequency grid span is not a multiple of the step");
  }
  levels_.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) levels_.push_back(f_min + step * static_cast<double>(i));
}

std::optional<std::size_t> FrequencyGrid::index_of(MHz f) const {
  const double pos = (f - f_min_) / step_;
  const auto i = std::llround(pos);
  if (i < 0 || static_cast<std::size_t>(i) >= levels_.size()) return std::nullopt;
  if (std::abs(pos - static_cast<double>(i)) > 1e-9) return std::nullopt;
  return static_cast<std::size_t>(i);
}

MHz clamp_frequency(MHz f, const FrequencyGrid& grid) {
  if (f <= grid.min()) return grid.min();
  if (f >= grid.max()) return grid.max();
  // floor(x + 0.5) rounds half-way cases up.
  const double pos = (f - grid.min()) / grid.step();
  auto i = static_cast<std::size_t>(std::floor(pos + 0.5));
  i = std::min(i, grid.size() - 1);
  return grid[i];
}

double RoutingWeights::total() const { return std::accumulate(w.begin(), w.end(), 0.0); }

}  // namespace windfleet
