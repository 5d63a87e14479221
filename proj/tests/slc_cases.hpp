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
#include <vector>

#include "windfleet/core_types.hpp"

namespace windfleet::testing {

// Hand-traced controller steps on the 510..1410/60 grid with KV_max 0.2,
// L_max 100 ms and Q_max 5.
struct SlcCase {
  std::string name;
  std::vector<SiteConfig> feasible;
  Telemetry telemetry;
  MHz floor_before;
  int n_curr_before;
  MHz floor_after;
  SiteConfig expected;
  bool congested;
};

inline std::vector<SiteConfig> ladder() {
  // Products 1410, 2820, 3150, 3240.
  return {{1, 1410, 0}, {2, 1410, 0}, {3, 1050, 0}, {4, 810, 0}};
}

inline std::vector<SlcCase> slc_cases() {
  return {
      {"benign lowers the floor", ladder(), {0.10, 1.0, 0.05}, 780, 4, 720, {4, 810, 0}, false},
      {"kv breach raises floor by two steps", ladder(), {0.25, 1.0, 0.05}, 780, 4, 900, {3, 1050, 0}, false},
      {"congestion keeps node count", ladder(), {0.50, 6.0, 0.30}, 780, 4, 780, {4, 810, 0}, true},
      {"tbt breach raises floor by one step", ladder(), {0.10, 1.0, 0.15}, 780, 4, 840, {3, 1050, 0}, false},
      {"floor clamps at F_max", ladder(), {0.25, 1.0, 0.05}, 1350, 3, 1410, {2, 1410, 0}, false},
      {"floor clamps at F_min", ladder(), {0.10, 1.0, 0.05}, 510, 2, 510, {4, 810, 0}, false},
      {"tbt at threshold holds floor", ladder(), {0.10, 1.0, 0.10}, 900, 3, 900, {3, 1050, 0}, false},
      {"kv at threshold holds floor", ladder(), {0.20, 1.0, 0.05}, 780, 4, 780, {4, 810, 0}, false},
      {"moderate queue holds floor", ladder(), {0.10, 3.0, 0.05}, 900, 3, 900, {3, 1050, 0}, false},
      {"congestion falls back when no N fits", ladder(), {0.10, 5.5, 0.05}, 780, 5, 780, {4, 810, 0}, true},
      {"kv wins over tbt", ladder(), {0.30, 1.0, 0.20}, 600, 4, 720, {4, 810, 0}, false},
      {"floor above all candidates falls back", {{3, 810, 0}, {4, 690, 0}}, {0.25, 1.0, 0.05}, 900, 4, 1020, {4, 690, 0}, false},
      {"tie goes to more nodes", {{2, 1170, 0}, {3, 780, 0}}, {0.10, 1.0, 0.05}, 510, 2, 510, {3, 780, 0}, false},
      {"boost counts toward the product", {{3, 1050, 0}, {4, 750, 3}}, {0.10, 1.0, 0.05}, 600, 3, 540, {4, 750, 3}, false},
  };
}

}  // namespace windfleet::testing
