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
#include <deque>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "windfleet/controllers.hpp"
#include "windfleet/core_types.hpp"
#include "windfleet/perf_model.hpp"
#include "windfleet/power_trace.hpp"
#include "windfleet/router.hpp"

namespace windfleet {

struct SiteSpec {
  std::string name;
  int nodes = 1;
  GpuProfile profile = a100_profile();
  SlcThresholds thresholds;
};

struct EngineParams {
  ControllerKind controller = ControllerKind::kSlc;
  RouterKind router = RouterKind::kXWind;
  RouterParams router_params;
  // Victims still running this long after an enact are preempted.
  Seconds drain_grace = 60.0;
  Seconds telemetry_window = 15.0;
  Seconds telemetry_step = 1.0;
  Seconds power_tick = 1.0;
  double powercap_u_min = 0.25;
  // Abort if requests are still in flight past this time; 0 picks a bound
  // from the trace length.
  Seconds horizon = 0.0;
  bool check_invariants = false;
  bool record_iterations = false;

  void validate() const;
};

// Replaces the controller at one site: the config is announced
// presignal_lead before enact_time and applied at enact_time.
struct ScriptedConfig {
  Seconds enact_time = 0.0;
  int site = 0;
  SiteConfig config;
  int idle_nodes = 0;
};

struct SimulationInput {
  std::vector<SiteSpec> sites;
  // One trace per site, matched by site_id == site index.
  std::vector<PowerTrace> power;
  std::vector<Request> trace;
  EngineParams params;
  std::vector<ScriptedConfig> script;
};

struct DecisionRow {
  Seconds time = 0.0;
  Seconds enact_time = 0.0;
  int site = 0;
  Watts budget = 0.0;
  SiteConfig config;
  int idle_nodes = 0;
  Watts cap = 0.0;
  MHz f_floor = 0.0;
  bool congested = false;
  Telemetry telemetry;
  bool scripted = false;
};

struct WeightRow {
  Seconds time = 0.0;
  int site = 0;
  double weight = 0.0;
};

struct PowerRow {
  Seconds time = 0.0;
  int site = 0;
  Watts budget = 0.0;
  Watts draw = 0.0;
};

struct IterationRow {
  Seconds start = 0.0;
  Seconds duration = 0.0;
  int site = 0;
  int instance = 0;
  int running = 0;
  double kv_util = 0.0;
  MHz frequency = 0.0;
};

struct SimulationResult {
  // Indexed like the input trace.
  std::vector<RequestRecord> records;
  std::vector<DecisionRow> decisions;
  std::vector<WeightRow> weights;
  std::vector<PowerRow> power;
  std::vector<IterationRow> iterations;
  Seconds end_time = 0.0;
  std::int64_t preemptions = 0;
  std::int64_t events = 0;
};

// Raised when an engine invariant breaks (power violation, capacity
// overflow, runaway horizon). Never expected in a correct run.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InstanceStatus { kOff, kIdle, kActive, kDraining };

std::string_view to_string(InstanceStatus status);

struct InstanceView {
  InstanceStatus status = InstanceStatus::kOff;
  MHz frequency = 0.0;
  std::vector<std::int64_t> waiting;
  std::vector<std::int64_t> running;
  std::int64_t kv_tokens_in_use = 0;
};

// Event-driven simulator. run_simulation covers the usual case; the class
// exists so tests can stop mid-run and inspect instance state.
class Simulator {
 public:
  explicit Simulator(SimulationInput input);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // Processes every event with time <= t.
  void run_until(Seconds t);
  // Runs until every request has completed.
  void run();
  bool finished() const;
  Seconds now() const;

  int site_count() const;
  int instance_count(int site) const;
  InstanceView instance(int site, int index) const;
  SiteConfig enacted_config(int site) const;
  Telemetry site_telemetry(int site) const;
  const Router& router() const;
  std::size_t router_backlog() const;

  SimulationResult take_result();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SimulationResult run_simulation(SimulationInput input);

void write_records_csv(const SimulationResult& result, std::ostream& out);
void write_decisions_csv(const SimulationResult& result, std::ostream& out);
void write_weights_csv(const SimulationResult& result, std::ostream& out);
void write_power_csv(const SimulationResult& result, std::ostream& out);

// CSV text of the four logs, keyed by file name.
std::map<std::string, std::string> serialize_logs(const SimulationResult& result);

}  // namespace windfleet
