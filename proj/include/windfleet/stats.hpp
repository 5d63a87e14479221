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

#include <span>
#include <utility>
#include <vector>

namespace windfleet {

// The ceil(p/100 * n)-th smallest value (rank clamped to [1, n]).
// Throws std::invalid_argument for empty input or p outside [0, 100].
double nearest_rank_percentile(std::span<const double> values, double p);

// Same, for data already sorted ascending.
double nearest_rank_sorted(std::span<const double> sorted, double p);

double mean(std::span<const double> values);
// Population standard deviation.
double stddev(std::span<const double> values);

// Lower weighted median of (value, weight) pairs: the smallest value whose
// cumulative weight reaches half the total. Reorders `samples`. Throws for
// empty input or non-positive total weight.
double weighted_median(std::vector<std::pair<double, double>>& samples);

}  // namespace windfleet
