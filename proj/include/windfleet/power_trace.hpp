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

#include <iosfwd>
#include <string>
#include <vector>

#include "windfleet/core_types.hpp"

namespace windfleet {

// Per-site power availability sampled at a fixed forecast granularity and
// linearly interpolated in between.
class PowerTrace {
 public:
  PowerTrace(int site_id, std::vector<Seconds> times, std::vector<Watts> power);

  int site_id() const { return site_id_; }
  const std::vector<Seconds>& times() const { return times_; }
  const std::vector<Watts>& power() const { return power_; }
  Seconds start() const { return times_.front(); }
  Seconds end() const { return times_.back(); }
  // Sample spacing; 0 for a single-sample trace.
  Seconds granularity() const;

 private:
  int site_id_;
  std::vector<Seconds> times_;
  std::vector<Watts> power_;
};

// Throws std::out_of_range outside [start, end].
Watts budget_at(const PowerTrace& trace, Seconds t);

// Like budget_at, but holds the first/last sample outside the span.
Watts budget_at_held(const PowerTrace& trace, Seconds t);

// Minimum of the held interpolant over [t0, t1]. Linear pieces attain their
// minimum at an endpoint, so only the interval ends and interior samples
// need checking.
Watts min_budget_over(const PowerTrace& trace, Seconds t0, Seconds t1);

// Multiplies the trace so its nearest-rank `percentile` maps to `peak`.
PowerTrace scale_to_fleet(const PowerTrace& trace, Watts peak, double percentile);

// CSV `time_s,site_id,power_w`, several sites per file, sorted by site id.
std::vector<PowerTrace> load_power_csv(std::istream& in);
std::vector<PowerTrace> load_power_csv(const std::string& path);
void save_power_csv(const std::vector<PowerTrace>& traces, std::ostream& out);
void save_power_csv(const std::vector<PowerTrace>& traces, const std::string& path);

// Synthetic complementary sites with a sustained ~50% drop at site 0 from
// mid-trace on and a ~20% dip at one smaller site. Values are fractions of
// each site's peak (max 1.0); scale before use.
std::vector<PowerTrace> paper_drop_profile(int sites, Seconds duration, Seconds granularity = 900.0);

// Constant availability, handy for tests.
PowerTrace constant_trace(int site_id, Watts power, Seconds duration, Seconds granularity = 900.0);

}  // namespace windfleet
