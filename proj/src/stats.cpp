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

#include "windfleet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace windfleet {

double nearest_rank_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("percentile must be in [0, 100]");
  const double n = static_cast<double>(sorted.size());
  // The small slack keeps exact products such as 20/100 * 5 from rounding up.
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double nearest_rank_percentile(std::span<const double> values, double p) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return nearest_rank_sorted(sorted, p);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  const double m = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

double weighted_median(std::vector<std::pair<double, double>>& samples) {
  if (samples.empty()) throw std::invalid_argument("weighted_median of an empty set");
  double total = 0.0;
  for (const auto& [value, weight] : samples) total += weight;
  if (!(total > 0.0)) throw std::invalid_argument("weighted_median needs positive total weight");
  const double target = 0.5 * total;
  auto by_value = [](const auto& a, const auto& b) { return a.first < b.first; };

  std::size_t lo = 0;
  std::size_t hi = samples.size();
  double below = 0.0;
  while (true) {
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(samples.begin() + lo, samples.begin() + mid, samples.begin() + hi, by_value);
    double left = 0.0;
    for (std::size_t i = lo; i < mid; ++i) left += samples[i].second;
    if (mid > lo && below + left >= target) {
      hi = mid;
    } else if (below + left + samples[mid].second >= target || mid + 1 == hi) {
      return samples[mid].first;
    } else {
      below += left + samples[mid].second;
      lo = mid + 1;
    }
  }
}

}  // namespace windfleet
