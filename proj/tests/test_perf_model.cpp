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

#include <cmath>

#include "windfleet/model_validation.hpp"
#include "windfleet/perf_model.hpp"

using namespace windfleet;

namespace {

PowerTable small_table() {
  return PowerTable({{810, 200}, {870, 230}, {930, 250}, {990, 280}}, 240);
}

}  // namespace

TEST_CASE("peak_power is exact at knots and linear between them") {
  const auto t = small_table();
  CHECK(peak_power(930, t) == 250);
  CHECK(peak_power(900, t) == doctest::Approx(240));
  CHECK(peak_power(810, t) == 200);
  CHECK_THROWS_AS(peak_power(800, t), std::out_of_range);
  CHECK_THROWS_AS(peak_power(1000, t), std::out_of_range);
}

TEST_CASE("power table construction checks") {
  CHECK_THROWS(PowerTable({}, 240));
  CHECK_THROWS(PowerTable({{900, 1}, {900, 2}}, 240));
  CHECK_FALSE(PowerTable({{900, 5}, {960, 4}}, 240).is_monotone());
}

TEST_CASE("default tables are monotone and anchored") {
  for (const auto& p : {a100_profile(), h100_profile()}) {
    CHECK(p.power.is_monotone());
    for (std::size_t i = 1; i < p.grid.size(); ++i) {
      CHECK(peak_power(p.grid[i], p.power) >= peak_power(p.grid[i - 1], p.power));
    }
  }
  const auto a = a100_profile();
  CHECK(node_power(NodeState::kIdle, 930, a.power) == 240);
  CHECK(node_power(NodeState::kShutdown, 930, a.power) == 0);
  const Watts full = node_power(NodeState::kActive, 1410, a.power);
  CHECK(full == doctest::Approx(240 + peak_power(1410, a.power)));
  CHECK(full == doctest::Approx(6500.0 / 8.0).epsilon(0.01));
  CHECK(240 / full == doctest::Approx(0.3).epsilon(0.05 / 0.3));
}

TEST_CASE("max_config_frequency corner budgets") {
  const auto a = a100_profile();
  const Watts node_max = 240 + peak_power(1410, a.power);
  auto c = max_config_frequency(4 * node_max, 4, a.power, a.grid);
  REQUIRE(c);
  CHECK(c->base_frequency == 1410);
  CHECK(c->boosted_nodes == 0);
  CHECK_FALSE(max_config_frequency(4 * (240 + peak_power(510, a.power)) - 1, 4, a.power, a.grid));
  CHECK_THROWS(max_config_frequency(1e6, 0, a.power, a.grid));
}

TEST_CASE("max_config_frequency picks the boosted pair for a hand-built budget") {
  const auto a = a100_profile();
  for (MHz f : {810.0, 930.0, 1290.0}) {
    const int n = 4;
    const Watts budget = n * 240 + (n - 1) * peak_power(f, a.power) + peak_power(f + 60, a.power);
    const auto c = max_config_frequency(budget, n, a.power, a.grid);
    REQUIRE(c);
    CHECK(c->base_frequency == f);
    CHECK(c->boosted_nodes == 1);
  }
}

TEST_CASE("max_config_frequency never exceeds its budget") {
  const auto a = a100_profile();
  for (int n = 1; n <= 16; ++n) {
    for (Watts b = 0; b <= 16 * 812 + 100; b += 37.3) {
      const auto c = max_config_frequency(b, n, a.power, a.grid);
      if (!c) {
        CHECK(n * (240 + peak_power(510, a.power)) > b);
        continue;
      }
      CHECK(config_power(*c, a.power, a.grid) <= b + kBudgetEpsilon);
      // Nothing higher fits.
      if (c->base_frequency < 1410 && c->boosted_nodes < n) {
        const SiteConfig more{n, c->base_frequency, c->boosted_nodes + 1};
        CHECK(config_power(more, a.power, a.grid) > b);
      }
    }
  }
}

TEST_CASE("step_time below and above the knee") {
  LatencyModel m;
  m.step_intercept_s = 0.01;
  m.step_slope_s_mhz = 30;
  m.kv_knee = 0.3;
  m.congestion_exponent = 2;
  m.congestion_gain = 20;
  const double base = 0.01 + 30.0 / 1000.0;
  CHECK(step_time(1000, 0.0, m) == doctest::Approx(base));
  CHECK(step_time(1000, 0.3, m) == doctest::Approx(base));
  CHECK(step_time(1000, 0.4, m) == doctest::Approx(1.2 * base));
  CHECK(step_time(900, 0.1, m) > step_time(1000, 0.1, m));
}

TEST_CASE("step_time is monotone over the default profiles") {
  for (const auto& p : {a100_profile(), h100_profile()}) {
    for (double u = 0.0; u <= 1.0; u += 0.01) {
      for (std::size_t i = 1; i < p.grid.size(); ++i) {
        CHECK(step_time(p.grid[i], u, p.latency) <= step_time(p.grid[i - 1], u, p.latency));
      }
      CHECK(step_time(p.grid[3], u + 0.01, p.latency) >= step_time(p.grid[3], u, p.latency));
    }
  }
}

TEST_CASE("prefill_time is linear in tokens and inverse in frequency") {
  LatencyModel m;
  m.prefill_rate_coeff = 10;
  CHECK(prefill_time(1000, 1000, m) == doctest::Approx(0.1));
  CHECK(prefill_time(2000, 1000, m) == doctest::Approx(2 * prefill_time(1000, 1000, m)));
  CHECK(prefill_time(1000, 2000, m) == doctest::Approx(0.5 * prefill_time(1000, 1000, m)));
}

TEST_CASE("profile validation rejects inconsistent parameters") {
  auto p = a100_profile();
  p.latency.kv_knee = 0.0;
  CHECK_THROWS(p.validate());
  p = a100_profile();
  p.latency.congestion_exponent = 0.5;
  CHECK_THROWS(p.validate());
  p = a100_profile();
  p.grid = FrequencyGrid(570, 1410, 60);
  CHECK_THROWS(p.validate());
  CHECK_THROWS(profile_by_name("v100"));
}

TEST_CASE("validate_model gate on the default profile") {
  const auto report = validate_model(a100_profile(), {});
  CHECK(report.power_monotone);
  CHECK(report.tbt_monotone);
  CHECK(report.kv_congestion);
  CHECK(report.points.size() == a100_profile().grid.size());
}

TEST_CASE("validate_model fails the KV check without the congestion term") {
  auto p = a100_profile();
  p.latency.congestion_gain = 0.0;
  const auto report = validate_model(p, {});
  CHECK(report.power_monotone);
  CHECK_FALSE(report.kv_congestion);
  CHECK_FALSE(report.passed());
}

TEST_CASE("validate_model fails the power check on a decreasing table") {
  auto p = a100_profile();
  auto knots = p.power.knots();
  std::swap(knots[5].power, knots[6].power);
  p.power = PowerTable(knots, 240);
  const auto report = validate_model(p, {});
  CHECK_FALSE(report.power_monotone);
  CHECK_FALSE(report.violations.empty());
}
