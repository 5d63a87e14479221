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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "slc_cases.hpp"
#include "windfleet/controllers.hpp"

using namespace windfleet;

namespace {

const SlcThresholds kTh{};

// Straight transcription of the decision rule, kept apart from the library.
struct OracleOut {
  SiteConfig config;
  MHz floor;
  int n_curr;
  bool congested;
};

OracleOut oracle(const std::vector<SiteConfig>& t, const Telemetry& tel, MHz floor, int n_curr,
                 const FrequencyGrid& g) {
  const bool pi = tel.queue_depth > kTh.q_max;
  if (t.empty()) return {{}, floor, n_curr, pi};
  if (!pi) {
    if (tel.kv_util > kTh.kv_max) floor += 120;
    else if (tel.tbt > kTh.l_max) floor += 60;
    else if (tel.tbt < kTh.l_max && tel.kv_util < kTh.kv_max && tel.queue_depth < 2.5) floor -= 60;
    floor = std::min(std::max(floor, g.min()), g.max());
  }
  std::vector<SiteConfig> s;
  for (const auto& c : t) {
    if (pi ? c.active_nodes >= n_curr : c.base_frequency >= floor) s.push_back(c);
  }
  const auto& pool = s.empty() ? t : s;
  SiteConfig best = pool.front();
  auto prod = [](const SiteConfig& c) { return c.active_nodes * c.base_frequency + 60.0 * c.boosted_nodes; };
  for (const auto& c : pool) {
    const double pc = prod(c), pb = prod(best);
    if (pc > pb + 1e-9 || (std::abs(pc - pb) <= 1e-9 &&
                           (c.active_nodes > best.active_nodes ||
                            (c.active_nodes == best.active_nodes && c.base_frequency > best.base_frequency)))) {
      best = c;
    }
  }
  return {best, floor, best.active_nodes, pi};
}

Telemetry random_telemetry(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  Telemetry t;
  t.kv_util = u(rng) < 0.2 ? 0.2 : u(rng) * 0.5;
  t.queue_depth = u(rng) < 0.1 ? 5.0 : u(rng) * 10;
  t.tbt = u(rng) < 0.1 ? 0.1 : u(rng) * 0.3;
  return t;
}

}  // namespace

TEST_CASE("hand-traced controller steps") {
  const auto p = a100_profile();
  for (const auto& c : testing::slc_cases()) {
    CAPTURE(c.name);
    ControllerState s{c.floor_before, c.n_curr_before, {}};
    const auto out = slc_reactive_select(c.feasible, c.telemetry, s, kTh, p.grid);
    CHECK(out.config == c.expected);
    CHECK(out.state.f_floor == c.floor_after);
    CHECK(out.state.n_curr == c.expected.active_nodes);
    CHECK(out.congested == c.congested);
  }
}

TEST_CASE("empty feasible set leaves state untouched") {
  const auto p = a100_profile();
  ControllerState s{780, 3, {3, 930, 0}};
  const auto out = slc_reactive_step(100.0, 4, {0.5, 1, 0.05}, s, kTh, p);
  CHECK(out.config.active_nodes == 0);
  CHECK(out.state.f_floor == 780);
  CHECK(out.state.n_curr == 3);
}

TEST_CASE("maxflops prefers the larger product") {
  const auto g = a100_profile().grid;
  CHECK(max_capacity_product({{4, 810, 0}, {3, 1050, 0}}, 60) == SiteConfig{4, 810, 0});
  CHECK(max_capacity_product({{3, 780, 0}, {2, 1170, 0}}, 60) == SiteConfig{3, 780, 0});
  CHECK(max_capacity_product({}, 60).active_nodes == 0);
  const auto p = a100_profile();
  CHECK(slc_maxflops_step(1e6, 4, p.power, p.grid) == SiteConfig{4, 1410, 0});
}

TEST_CASE("candidate_configs corners") {
  const auto p = a100_profile();
  const Watts node_max = 240 + peak_power(1410, p.power);
  auto all = candidate_configs(4 * node_max, 4, p.power, p.grid);
  CHECK(std::find(all.begin(), all.end(), SiteConfig{4, 1410, 0}) != all.end());
  CHECK(candidate_configs(240 + peak_power(510, p.power) - 1, 4, p.power, p.grid).empty());

  const Watts three = 3 * (240 + peak_power(930, p.power));
  const auto c = candidate_configs(three, 4, p.power, p.grid);
  REQUIRE(c.size() == 3);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i].active_nodes == static_cast<int>(i) + 1);
  CHECK(c[2].base_frequency == 930);
  CHECK(c[2].boosted_nodes == 0);
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i].base_frequency <= c[i - 1].base_frequency);
}

TEST_CASE("downclock keeps every node") {
  const auto p = a100_profile();
  const Watts full = 4 * (240 + peak_power(1410, p.power));
  auto d = slc_downclock_step(full, 4, p.power, p.grid);
  CHECK(d.config == SiteConfig{4, 1410, 0});
  CHECK_FALSE(d.budget_violation);
  d = slc_downclock_step(full / 2, 4, p.power, p.grid);
  const auto half = *max_config_frequency(full / 2, 4, p.power, p.grid);
  CHECK(d.config.active_nodes == 4);
  CHECK(d.config.base_frequency == half.base_frequency);
  CHECK(d.config.boosted_nodes == 0);
  d = slc_downclock_step(4 * (240 + peak_power(510, p.power)) - 1, 4, p.power, p.grid);
  CHECK(d.budget_violation);
  const auto fb = forced_fallback_config(4 * (240 + peak_power(510, p.power)) - 1, 4, p.power, p.grid);
  CHECK(fb == SiteConfig{3, 510, 0});
}

TEST_CASE("idle controller counts whole nodes") {
  const auto p = a100_profile();
  const Watts act = 240 + peak_power(1410, p.power);
  CHECK(slc_idle_step(1e6, 4, p.power, p.grid).config == SiteConfig{4, 1410, 0});
  auto i = slc_idle_step(4 * 240, 4, p.power, p.grid);
  CHECK(i.config.active_nodes == 0);
  CHECK(i.idle_nodes == 4);
  for (int k = 0; k < 4; ++k) {
    const Watts b = k * act + (4 - k) * 240 + 0.5 * (act - 240);
    i = slc_idle_step(b, 4, p.power, p.grid);
    CHECK(i.config.active_nodes == k);
    CHECK(i.idle_nodes == 4 - k);
  }
}

TEST_CASE("power capping tracks utilization") {
  const auto p = a100_profile();
  const Watts full = 4 * (240 + peak_power(1410, p.power));
  for (double frac : {0.5, 0.6, 0.75}) {
    const Watts b = frac * full;
    const auto dc = slc_downclock_step(b, 4, p.power, p.grid).config;
    CHECK(slc_powercap_step(b, 4, p.power, p.grid, 1.0, 0.25).config.base_frequency == dc.base_frequency);
    CHECK(slc_powercap_step(b, 4, p.power, p.grid, 0.5, 0.25).config.base_frequency >= dc.base_frequency);
  }
  CHECK(powercap_frequency(peak_power(1410, p.power), 0.3, 0.25, p.power, p.grid) == 1410);
  CHECK(powercap_frequency(10.0, 1.0, 0.25, p.power, p.grid) == 510);
  CHECK(slc_powercap_step(4 * 300, 4, p.power, p.grid, 1.0, 0.25).budget_violation);
}

TEST_CASE("reactive controller matches the reference over fuzzed inputs") {
  const auto p = a100_profile();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> budget(0, 4 * 812 * 1.1);
  std::uniform_int_distribution<int> level(0, 15);
  std::uniform_int_distribution<int> nodes(0, 5);
  for (int i = 0; i < 20000; ++i) {
    const Watts b = budget(rng);
    const auto t = random_telemetry(rng);
    const MHz floor = p.grid[level(rng)];
    const int n_curr = nodes(rng);
    const auto feasible = candidate_configs(b, 4, p.power, p.grid);
    const auto got = slc_reactive_step(b, 4, t, {floor, n_curr, {}}, kTh, p);
    const auto want = oracle(feasible, t, floor, n_curr, p.grid);
    REQUIRE(got.config == want.config);
    REQUIRE(got.state.f_floor == want.floor);
    REQUIRE(got.state.n_curr == (feasible.empty() ? n_curr : want.n_curr));
    REQUIRE(got.congested == want.congested);
  }
}

TEST_CASE("controller invariants under fuzzing") {
  const auto p = a100_profile();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> frac(0.0, 1.1);
  ControllerState s{p.grid.min(), 4, {}};
  for (int i = 0; i < 20000; ++i) {
    const Watts b = frac(rng) * 8 * 812;
    const auto t = random_telemetry(rng);
    const auto out = slc_reactive_step(b, 8, t, s, kTh, p);
    // Budget.
    CHECK(config_power(out.config, p.power, p.grid) <= b + kBudgetEpsilon);
    CHECK(config_power(slc_maxflops_step(b, 8, p.power, p.grid), p.power, p.grid) <= b + kBudgetEpsilon);
    const auto idle = slc_idle_step(b, 8, p.power, p.grid);
    CHECK(config_power(idle.config, p.power, p.grid) + idle.idle_nodes * 240 <= b + kBudgetEpsilon);
    // Floor stays on the grid range.
    CHECK(out.state.f_floor >= p.grid.min());
    CHECK(out.state.f_floor <= p.grid.max());
    // Never shed capacity under congestion when a larger N fits.
    if (out.congested) {
      const auto feasible = candidate_configs(b, 8, p.power, p.grid);
      const bool any = std::any_of(feasible.begin(), feasible.end(),
                                   [&](const SiteConfig& c) { return c.active_nodes >= s.n_curr; });
      if (any) CHECK(out.config.active_nodes >= s.n_curr);
    }
    // Determinism.
    CHECK(slc_reactive_step(b, 8, t, s, kTh, p).config == out.config);
    if (out.config.active_nodes > 0) s = out.state;
  }
}

TEST_CASE("floor hysteresis is asymmetric") {
  const auto p = a100_profile();
  const auto feasible = candidate_configs(1e6, 4, p.power, p.grid);
  ControllerState s{930, 4, {}};
  CHECK(slc_reactive_select(feasible, {0.1, 1, 0.05}, s, kTh, p.grid).state.f_floor == 870);
  CHECK(slc_reactive_select(feasible, {0.3, 1, 0.05}, s, kTh, p.grid).state.f_floor == 1050);
  CHECK(slc_reactive_select(feasible, {0.1, 1, 0.2}, s, kTh, p.grid).state.f_floor == 990);
  // Each benign condition alone is not enough.
  CHECK(slc_reactive_select(feasible, {0.1, 3, 0.05}, s, kTh, p.grid).state.f_floor == 930);
  CHECK(slc_reactive_select(feasible, {0.2, 1, 0.05}, s, kTh, p.grid).state.f_floor == 930);
  CHECK(slc_reactive_select(feasible, {0.1, 1, 0.1}, s, kTh, p.grid).state.f_floor == 930);
  // Congestion freezes the floor.
  CHECK(slc_reactive_select(feasible, {0.9, 9, 0.9}, s, kTh, p.grid).state.f_floor == 930);
}

TEST_CASE("thresholds validate against the grid") {
  const auto g = a100_profile().grid;
  SlcThresholds t;
  CHECK_NOTHROW(t.validate(g));
  t.delta_f = 30;
  CHECK_THROWS(t.validate(g));
  t = {};
  t.q_max = 0;
  CHECK_THROWS(t.validate(g));
}

TEST_CASE("controller names round-trip") {
  for (auto k : all_controllers()) CHECK(parse_controller(to_string(k)) == k);
  CHECK_THROWS(parse_controller("bogus"));
}
