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

#include "windfleet/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <utility>

#include "windfleet/csv.hpp"
#include "windfleet/stats.hpp"
#include "windfleet/workload.hpp"

namespace windfleet {

void EngineParams::validate() const {
  router_params.validate();
  if (!(drain_grace > 0.0)) throw std::invalid_argument("drain_grace must be positive");
  if (!(telemetry_step > 0.0)) throw std::invalid_argument("telemetry_step must be positive");
  if (!(telemetry_window >= telemetry_step)) {
    throw std::invalid_argument("telemetry_window must be >= telemetry_step");
  }
  if (!(power_tick > 0.0)) throw std::invalid_argument("power_tick must be positive");
  if (!(powercap_u_min > 0.0 && powercap_u_min <= 1.0)) {
    throw std::invalid_argument("powercap_u_min must be in (0, 1]");
  }
  if (horizon < 0.0) throw std::invalid_argument("horizon must be >= 0");
}

std::string_view to_string(InstanceStatus status) {
  switch (status) {
    case InstanceStatus::kOff:
      return "off";
    case InstanceStatus::kIdle:
      return "idle";
    case InstanceStatus::kActive:
      return "active";
    case InstanceStatus::kDraining:
      return "draining";
  }
  return "unknown";
}

namespace {

enum class EventKind {
  kPowerTick,
  kDecision,
  kEnact,
  kDrainGrace,
  kArrival,
  kIteration,
  kTelemetry,
  kProbe
};

int priority(EventKind kind) {
  switch (kind) {
    case EventKind::kPowerTick:
      return 0;
    case EventKind::kDecision:
      return 1;
    case EventKind::kEnact:
    case EventKind::kDrainGrace:
      return 2;
    case EventKind::kArrival:
      return 3;
    case EventKind::kIteration:
      return 4;
    case EventKind::kTelemetry:
      return 5;
    case EventKind::kProbe:
      return 6;
  }
  return 7;
}

struct Event {
  Seconds time;
  int prio;
  std::uint64_t seq;
  EventKind kind;
  int site;
  int index;
  std::uint64_t epoch;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.prio != b.prio) return a.prio > b.prio;
    return a.seq > b.seq;
  }
};

struct Running {
  std::int64_t end_iter;
  std::int32_t req;
};

struct RunningLater {
  bool operator()(const Running& a, const Running& b) const {
    if (a.end_iter != b.end_iter) return a.end_iter > b.end_iter;
    return a.req > b.req;
  }
};

struct Sample {
  bool valid = false;
  double kv = 0.0;
  double waiting = 0.0;
  double busy = 0.0;
  MHz frequency = 0.0;
  std::vector<std::pair<double, double>> tbt;
};

struct Instance {
  InstanceStatus status = InstanceStatus::kOff;
  MHz frequency = 0.0;
  std::deque<std::int32_t> waiting;
  std::vector<Running> running;  // heap under RunningLater
  std::int64_t iter = 0;
  std::int64_t sum_prefill = 0;
  std::int64_t sum_start = 0;
  std::int64_t reserved = 0;
  bool in_iteration = false;
  Seconds iteration_start = 0.0;
  std::uint64_t epoch = 0;

  Seconds busy_accum = 0.0;
  Seconds busy_mark = 0.0;

  std::vector<Sample> ring;
  std::vector<std::pair<double, double>> open_tbt;

  std::int64_t kv_in_use() const {
    return sum_prefill + static_cast<std::int64_t>(running.size()) * iter - sum_start;
  }
  std::size_t load() const { return running.size() + waiting.size(); }
};

struct Pending {
  SiteConfig config;
  int idle_nodes = 0;
  Watts cap = 0.0;
  Seconds enact_time = 0.0;
};

struct Site {
  SiteSpec spec;
  const PowerTrace* trace = nullptr;
  std::vector<Instance> instances;
  ControllerState controller;
  SiteConfig config;
  int idle_nodes = 0;
  Watts cap = 0.0;
  Watts cap_in_effect = 0.0;
  bool started = false;
  std::optional<Pending> pending;
  bool draining = false;
  std::uint64_t drain_epoch = 0;
  std::size_t rr = 0;
  bool scripted = false;
  std::vector<ScriptedConfig> script;
};

}  // namespace

struct Simulator::Impl {
  SimulationInput in;
  std::vector<Site> sites;
  Router router;
  std::priority_queue<Event, std::vector<Event>, Later> events;
  std::uint64_t seq = 0;
  Seconds now = 0.0;
  std::size_t next_arrival = 0;
  std::size_t completed = 0;
  std::deque<std::int32_t> backlog;
  std::int64_t telemetry_ticks = 0;
  std::size_t window_slots = 1;
  Seconds horizon = 0.0;
  std::vector<bool> serving;
  SimulationResult result;

  static std::vector<int> provisioned(const SimulationInput& input) {
    std::vector<int> out;
    for (const auto& s : input.sites) out.push_back(s.nodes);
    return out;
  }

  explicit Impl(SimulationInput input)
      : in(std::move(input)), router(in.params.router, in.params.router_params, provisioned(in)) {
    in.params.validate();
    if (in.sites.empty()) throw std::invalid_argument("simulation needs at least one site");
    validate_trace(in.trace);
    window_slots = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(in.params.telemetry_window / in.params.telemetry_step)));

    sites.resize(in.sites.size());
    for (std::size_t s = 0; s < in.sites.size(); ++s) {
      Site& site = sites[s];
      site.spec = in.sites[s];
      if (site.spec.nodes < 1) throw std::invalid_argument("every site needs at least one node");
      site.spec.profile.validate();
      site.spec.thresholds.validate(site.spec.profile.grid);
      if (!(in.params.drain_grace < site.spec.thresholds.cycle)) {
        throw std::invalid_argument("drain_grace must be shorter than the control cycle");
      }
      for (const auto& trace : in.power) {
        if (trace.site_id() == static_cast<int>(s)) site.trace = &trace;
      }
      if (!site.trace) {
        throw std::invalid_argument("no power trace for site " + std::to_string(s));
      }
      site.instances.resize(static_cast<std::size_t>(site.spec.nodes));
      for (auto& inst : site.instances) {
        inst.ring.resize(window_slots);
        inst.frequency = site.spec.profile.grid.min();
      }
      site.controller.f_floor = site.spec.profile.grid.min();
    }
    serving.assign(sites.size(), false);

    for (const auto& entry : in.script) {
      if (entry.site < 0 || entry.site >= static_cast<int>(sites.size())) {
        throw std::invalid_argument("scripted config names an unknown site");
      }
      const auto& spec = sites[static_cast<std::size_t>(entry.site)].spec;
      if (entry.config.active_nodes < 0 || entry.config.active_nodes > spec.nodes ||
          entry.idle_nodes < 0 || entry.config.active_nodes + entry.idle_nodes > spec.nodes) {
        throw std::invalid_argument("scripted config exceeds the site's node count");
      }
      if (entry.config.active_nodes > 0 && !spec.profile.grid.contains(entry.config.base_frequency)) {
        throw std::invalid_argument("scripted frequency is not on the grid");
      }
      sites[static_cast<std::size_t>(entry.site)].scripted = true;
      sites[static_cast<std::size_t>(entry.site)].script.push_back(entry);
    }
    for (auto& site : sites) {
      std::stable_sort(site.script.begin(), site.script.end(),
                       [](const auto& a, const auto& b) { return a.enact_time < b.enact_time; });
      if (site.scripted && site.script.front().enact_time != 0.0) {
        throw std::invalid_argument("a scripted site needs a config at time 0");
      }
    }

    std::int64_t min_kv = std::numeric_limits<std::int64_t>::max();
    for (const auto& site : sites) {
      min_kv = std::min(min_kv, site.spec.profile.capacity.kv_capacity_tokens);
    }
    result.records.resize(in.trace.size());
    for (std::size_t i = 0; i < in.trace.size(); ++i) {
      const auto& r = in.trace[i];
      if (static_cast<std::int64_t>(r.prefill_tokens) + r.decode_tokens > min_kv) {
        throw std::invalid_argument("request " + std::to_string(r.id) +
                                    " does not fit in the smallest KV cache");
      }
      result.records[i].request = r;
      result.records[i].enqueue_time = r.arrival_time;
    }

    const Seconds last = in.trace.empty() ? 0.0 : in.trace.back().arrival_time;
    horizon = in.params.horizon > 0.0 ? in.params.horizon : 4.0 * last + 36000.0;

    push(0.0, EventKind::kPowerTick);
    push(in.params.telemetry_step, EventKind::kTelemetry);
    push(0.0, EventKind::kProbe);
    for (std::size_t s = 0; s < sites.size(); ++s) {
      if (sites[s].scripted) {
        for (std::size_t k = 0; k < sites[s].script.size(); ++k) {
          const Seconds at = std::max(
              0.0, sites[s].script[k].enact_time - sites[s].spec.thresholds.presignal_lead);
          push(at, EventKind::kDecision, static_cast<int>(s), static_cast<int>(k));
        }
      } else {
        push(0.0, EventKind::kDecision, static_cast<int>(s), -1);
      }
    }
    schedule_next_arrival();
  }

  void push(Seconds t, EventKind kind, int site = -1, int index = -1, std::uint64_t epoch = 0) {
    events.push(Event{t, priority(kind), seq++, kind, site, index, epoch});
  }

  void schedule_next_arrival() {
    if (next_arrival < in.trace.size()) {
      push(in.trace[next_arrival].arrival_time, EventKind::kArrival);
    }
  }

  bool done() const { return completed == in.trace.size(); }

  // ---- telemetry -------------------------------------------------------

  const Sample* slot(const Instance& inst, std::size_t age) const {
    if (static_cast<std::int64_t>(age) >= telemetry_ticks) return nullptr;
    const auto idx = static_cast<std::size_t>(telemetry_ticks - 1 - static_cast<std::int64_t>(age));
    return &inst.ring[idx % window_slots];
  }

  template <typename F>
  std::optional<double> window_mean(const Instance& inst, F field) const {
    double sum = 0.0;
    int n = 0;
    for (std::size_t age = 0; age < window_slots; ++age) {
      const Sample* s = slot(inst, age);
      if (!s) break;
      if (!s->valid) continue;
      sum += field(*s);
      ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
  }

  double kv_util(const Site& site, const Instance& inst) const {
    return static_cast<double>(inst.kv_in_use()) /
           static_cast<double>(site.spec.profile.capacity.kv_capacity_tokens);
  }

  Seconds site_tbt(const Site& site) const {
    std::vector<std::pair<double, double>> samples;
    for (const auto& inst : site.instances) {
      for (std::size_t age = 0; age < window_slots; ++age) {
        const Sample* s = slot(inst, age);
        if (!s) break;
        samples.insert(samples.end(), s->tbt.begin(), s->tbt.end());
      }
    }
    if (samples.empty()) return 0.0;
    return weighted_median(samples);
  }

  Telemetry telemetry(const Site& site) const {
    Telemetry t;
    int active = 0;
    double kv = 0.0;
    double queue = 0.0;
    for (const auto& inst : site.instances) {
      if (inst.status != InstanceStatus::kActive) continue;
      ++active;
      kv += window_mean(inst, [](const Sample& s) { return s.kv; }).value_or(kv_util(site, inst));
      queue += window_mean(inst, [](const Sample& s) { return s.waiting; })
                   .value_or(static_cast<double>(inst.waiting.size()));
    }
    if (active > 0) {
      t.kv_util = kv / active;
      t.queue_depth = queue / active;
    }
    t.tbt = site_tbt(site);
    return t;
  }

  double busy_estimate(const Site& site) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& inst : site.instances) {
      if (inst.status != InstanceStatus::kActive) continue;
      sum += window_mean(inst, [](const Sample& s) { return s.busy; }).value_or(1.0);
      ++n;
    }
    return n > 0 ? sum / n : 1.0;
  }

  MHz observed_frequency(const Site& site) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& inst : site.instances) {
      if (inst.status != InstanceStatus::kActive) continue;
      sum += window_mean(inst, [](const Sample& s) { return s.frequency; }).value_or(inst.frequency);
      ++n;
    }
    return n > 0 ? sum / n : 0.0;
  }

  void account_busy(Instance& inst) {
    if (inst.in_iteration) {
      inst.busy_accum += now - inst.busy_mark;
      inst.busy_mark = now;
    }
  }

  void on_telemetry() {
    const Seconds step = in.params.telemetry_step;
    const std::size_t idx = static_cast<std::size_t>(telemetry_ticks) % window_slots;
    for (auto& site : sites) {
      const bool capped = capped_site(site);
      for (auto& inst : site.instances) {
        account_busy(inst);
        const double busy = std::clamp(inst.busy_accum / step, 0.0, 1.0);
        inst.busy_accum = 0.0;
        Sample& sample = inst.ring[idx];
        sample.valid = inst.status == InstanceStatus::kActive;
        sample.kv = kv_util(site, inst);
        sample.waiting = static_cast<double>(inst.waiting.size());
        sample.busy = busy;
        sample.frequency = inst.frequency;
        sample.tbt.swap(inst.open_tbt);
        inst.open_tbt.clear();

        if (capped && (inst.status == InstanceStatus::kActive ||
                       inst.status == InstanceStatus::kDraining)) {
          const auto& profile = site.spec.profile;
          // A node whose last-second demand overshot the cap is throttled to
          // the floor; otherwise it settles where the cap allows.
          if (busy * peak_power(inst.frequency, profile.power) > site.cap_in_effect) {
            inst.frequency = profile.grid.min();
          } else {
            inst.frequency = powercap_frequency(site.cap_in_effect, busy, in.params.powercap_u_min,
                                                profile.power, profile.grid);
          }
        }
      }
    }
    ++telemetry_ticks;
    if (!done() || now == 0.0) push(now + step, EventKind::kTelemetry);
  }

  // ---- power -----------------------------------------------------------

  bool capped_site(const Site& site) const {
    return in.params.controller == ControllerKind::kPowerCap && !site.scripted;
  }

  Watts site_draw(const Site& site) const {
    const auto& table = site.spec.profile.power;
    const bool capped = capped_site(site);
    Watts draw = 0.0;
    for (const auto& inst : site.instances) {
      switch (inst.status) {
        case InstanceStatus::kOff:
          break;
        case InstanceStatus::kIdle:
          draw += node_power(NodeState::kIdle, inst.frequency, table);
          break;
        case InstanceStatus::kActive:
        case InstanceStatus::kDraining: {
          Watts dynamic = peak_power(inst.frequency, table);
          if (capped) dynamic = std::min(dynamic, site.cap_in_effect);
          draw += table.overhead_per_node() + dynamic;
          break;
        }
      }
    }
    return draw;
  }

  void on_power_tick() {
    for (std::size_t s = 0; s < sites.size(); ++s) {
      const Site& site = sites[s];
      const Watts budget = budget_at_held(*site.trace, now);
      const Watts draw = site_draw(site);
      result.power.push_back({now, static_cast<int>(s), budget, draw});
      if (draw > budget + kBudgetEpsilon) {
        std::ostringstream msg;
        msg << "power violation at t=" << now << " site " << s << ": draw " << draw
            << " W exceeds budget " << budget << " W (N=" << site.config.active_nodes
            << ", f=" << site.config.base_frequency << " MHz)";
        throw SimulationError(msg.str());
      }
    }
    if (!done()) push(now + in.params.power_tick, EventKind::kPowerTick);
  }

  // ---- control ---------------------------------------------------------

  void on_decision(int s, int script_index) {
    Site& site = sites[static_cast<std::size_t>(s)];
    const auto& th = site.spec.thresholds;
    const auto& profile = site.spec.profile;
    DecisionRow row;
    row.time = now;
    row.site = s;
    row.telemetry = telemetry(site);
    Pending next;

    if (script_index >= 0) {
      const auto& entry = site.script[static_cast<std::size_t>(script_index)];
      next.config = entry.config;
      next.idle_nodes = entry.idle_nodes;
      next.enact_time = entry.enact_time;
      row.scripted = true;
      row.budget = budget_at_held(*site.trace, entry.enact_time);
    } else {
      next.enact_time = site.started ? now + th.presignal_lead : now;
      site.started = true;
      const Watts budget = min_budget_over(*site.trace, next.enact_time,
                                           next.enact_time + th.cycle + in.params.drain_grace);
      row.budget = budget;
      const int n_max = site.spec.nodes;
      switch (in.params.controller) {
        case ControllerKind::kSlc: {
          const auto step =
              slc_reactive_step(budget, n_max, row.telemetry, site.controller, th, profile);
          site.controller = step.state;
          next.config = step.config;
          row.congested = step.congested;
          break;
        }
        case ControllerKind::kMaxFlops:
          next.config = slc_maxflops_step(budget, n_max, profile.power, profile.grid);
          break;
        case ControllerKind::kDownclock: {
          const auto step = slc_downclock_step(budget, n_max, profile.power, profile.grid);
          next.config = step.budget_violation
                            ? forced_fallback_config(budget, n_max, profile.power, profile.grid)
                            : step.config;
          break;
        }
        case ControllerKind::kIdle: {
          const auto step = slc_idle_step(budget, n_max, profile.power, profile.grid);
          next.config = step.config;
          next.idle_nodes = step.idle_nodes;
          break;
        }
        case ControllerKind::kPowerCap: {
          const auto step = slc_powercap_step(budget, n_max, profile.power, profile.grid,
                                              busy_estimate(site), in.params.powercap_u_min);
          next.config = step.config;
          next.cap = step.cap;
          break;
        }
      }
      row.f_floor = site.controller.f_floor;
      push(next.enact_time + th.cycle - th.presignal_lead, EventKind::kDecision, s, -1);
    }

    row.enact_time = next.enact_time;
    row.config = next.config;
    row.idle_nodes = next.idle_nodes;
    row.cap = next.cap;
    result.decisions.push_back(row);
    site.pending = next;
    push(next.enact_time, EventKind::kEnact, s);
  }

  // Powers non-working instances: the first idle-count of them idle, the rest off.
  void assign_standby(Site& site, int idle) {
    int left = idle;
    for (auto& inst : site.instances) {
      if (inst.status == InstanceStatus::kActive || inst.status == InstanceStatus::kDraining) {
        continue;
      }
      inst.status = left > 0 ? InstanceStatus::kIdle : InstanceStatus::kOff;
      if (left > 0) --left;
    }
  }

  void apply_frequencies(Site& site) {
    const auto& grid = site.spec.profile.grid;
    if (site.draining) return;
    int boosted = site.config.boosted_nodes;
    for (auto& inst : site.instances) {
      if (inst.status != InstanceStatus::kActive) continue;
      MHz f = site.config.base_frequency;
      if (boosted > 0) {
        f += grid.step();
        --boosted;
      }
      inst.frequency = f;
    }
    site.cap_in_effect = site.cap;
  }

  int active_count(const Site& site) const {
    int n = 0;
    for (const auto& inst : site.instances) n += inst.status == InstanceStatus::kActive;
    return n;
  }

  void on_enact(int s) {
    Site& site = sites[static_cast<std::size_t>(s)];
    if (!site.pending) return;
    const Pending next = *site.pending;
    site.pending.reset();
    if (site.draining) finish_drain(site, /*preempt=*/true);

    const SiteConfig old = site.config;
    const Watts old_cap = site.cap;
    const int old_idle = site.idle_nodes;
    site.config = next.config;
    site.idle_nodes = next.idle_nodes;
    site.cap = next.cap;

    const int target = next.config.active_nodes;
    int active = active_count(site);
    bool gained = false;

    if (target < active) {
      std::vector<int> order;
      for (int i = 0; i < static_cast<int>(site.instances.size()); ++i) {
        if (site.instances[static_cast<std::size_t>(i)].status == InstanceStatus::kActive) {
          order.push_back(i);
        }
      }
      // Lowest load first; among equals the highest index goes.
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const auto la = site.instances[static_cast<std::size_t>(a)].load();
        const auto lb = site.instances[static_cast<std::size_t>(b)].load();
        if (la != lb) return la < lb;
        return a > b;
      });
      std::vector<int> victims(order.begin(), order.begin() + (active - target));
      std::sort(victims.begin(), victims.end());
      std::vector<std::int32_t> orphans;
      for (int v : victims) {
        auto& inst = site.instances[static_cast<std::size_t>(v)];
        inst.status = InstanceStatus::kDraining;
        orphans.insert(orphans.end(), inst.waiting.begin(), inst.waiting.end());
        inst.waiting.clear();
      }
      serving[static_cast<std::size_t>(s)] = target > 0;
      for (auto req : orphans) {
        if (target > 0) {
          enqueue_local(site, s, req, /*front=*/false);
        } else {
          route(req);
        }
      }
      bool any_running = false;
      for (int v : victims) {
        auto& inst = site.instances[static_cast<std::size_t>(v)];
        if (inst.running.empty() && !inst.in_iteration) {
          inst.status = InstanceStatus::kOff;
        } else {
          any_running = true;
        }
      }
      if (any_running) {
        site.draining = true;
        ++site.drain_epoch;
        push(now + in.params.drain_grace, EventKind::kDrainGrace, s, -1, site.drain_epoch);
      }
    } else if (target > active) {
      for (auto status : {InstanceStatus::kDraining, InstanceStatus::kIdle, InstanceStatus::kOff}) {
        for (auto& inst : site.instances) {
          if (active == target) break;
          if (inst.status != status) continue;
          inst.status = InstanceStatus::kActive;
          ++active;
          gained = true;
        }
      }
    }

    if (site.draining) {
      const MHz f = std::min(old.base_frequency, next.config.base_frequency);
      for (auto& inst : site.instances) {
        if (inst.status == InstanceStatus::kActive || inst.status == InstanceStatus::kDraining) {
          inst.frequency = f;
        }
      }
      site.cap_in_effect = std::min(old_cap, next.cap);
      assign_standby(site, std::min(old_idle, next.idle_nodes));
    } else {
      apply_frequencies(site);
      assign_standby(site, next.idle_nodes);
    }

    serving[static_cast<std::size_t>(s)] = active_count(site) > 0;
    if (gained) flush_backlog();
  }

  void finish_drain(Site& site, bool preempt) {
    const int s = static_cast<int>(&site - sites.data());
    if (preempt) {
      std::vector<std::int32_t> restart;
      for (auto& inst : site.instances) {
        if (inst.status != InstanceStatus::kDraining) continue;
        for (const auto& r : inst.running) restart.push_back(r.req);
        inst.running.clear();
        inst.sum_prefill = inst.sum_start = inst.reserved = 0;
        account_busy(inst);
        inst.in_iteration = false;
        ++inst.epoch;
        inst.status = InstanceStatus::kOff;
      }
      std::sort(restart.begin(), restart.end());
      result.preemptions += static_cast<std::int64_t>(restart.size());
      for (auto req : restart) {
        auto& rec = result.records[static_cast<std::size_t>(req)];
        rec.dequeue_time = rec.first_token_time = 0.0;
        rec.instance_id = -1;
      }
      // Restarted work goes ahead of queued work, oldest first.
      const bool survivors = active_count(site) > 0;
      for (auto it = restart.rbegin(); it != restart.rend(); ++it) {
        if (survivors) {
          enqueue_local(site, s, *it, /*front=*/true);
        } else {
          backlog.push_front(*it);
        }
      }
      if (!survivors) flush_backlog();
    }
    site.draining = false;
    ++site.drain_epoch;
    apply_frequencies(site);
    assign_standby(site, site.idle_nodes);
    for (std::size_t i = 0; i < site.instances.size(); ++i) wake(s, static_cast<int>(i));
  }

  void on_drain_grace(int s, std::uint64_t epoch) {
    Site& site = sites[static_cast<std::size_t>(s)];
    if (!site.draining || site.drain_epoch != epoch) return;
    finish_drain(site, /*preempt=*/true);
  }

  void victim_drained(Site& site, Instance& inst) {
    inst.status = InstanceStatus::kOff;
    for (const auto& other : site.instances) {
      if (other.status == InstanceStatus::kDraining) return;
    }
    finish_drain(site, /*preempt=*/false);
  }

  // ---- dispatch --------------------------------------------------------

  void enqueue_local(Site& site, int s, std::int32_t req, bool front) {
    const std::size_t n = site.instances.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (site.rr + k) % n;
      auto& inst = site.instances[i];
      if (inst.status != InstanceStatus::kActive) continue;
      site.rr = (i + 1) % n;
      if (front) {
        inst.waiting.push_front(req);
      } else {
        inst.waiting.push_back(req);
      }
      result.records[static_cast<std::size_t>(req)].site_id = s;
      wake(s, static_cast<int>(i));
      return;
    }
    throw SimulationError("enqueue at a site with no active instance");
  }

  void wake(int s, int i) {
    auto& inst = sites[static_cast<std::size_t>(s)].instances[static_cast<std::size_t>(i)];
    if (inst.in_iteration || inst.status != InstanceStatus::kActive || inst.waiting.empty()) {
      return;
    }
    inst.in_iteration = true;
    inst.iteration_start = now;
    inst.busy_mark = now;
    ++inst.epoch;
    push(now, EventKind::kIteration, s, i, inst.epoch);
  }

  bool route(std::int32_t req) {
    const auto site = router.dispatch(serving);
    if (!site) {
      backlog.push_back(req);
      return false;
    }
    enqueue_local(sites[static_cast<std::size_t>(*site)], *site, req, /*front=*/false);
    return true;
  }

  void flush_backlog() {
    while (!backlog.empty()) {
      const auto site = router.dispatch(serving);
      if (!site) return;
      const auto req = backlog.front();
      backlog.pop_front();
      enqueue_local(sites[static_cast<std::size_t>(*site)], *site, req, /*front=*/false);
    }
  }

  void on_arrival() {
    const auto req = static_cast<std::int32_t>(next_arrival++);
    schedule_next_arrival();
    if (!backlog.empty()) {
      backlog.push_back(req);
      flush_backlog();
    } else {
      route(req);
    }
  }

  // ---- instances -------------------------------------------------------

  void on_iteration(int s, int i, std::uint64_t epoch) {
    Site& site = sites[static_cast<std::size_t>(s)];
    Instance& inst = site.instances[static_cast<std::size_t>(i)];
    if (inst.epoch != epoch) return;
    const auto& profile = site.spec.profile;

    if (!inst.running.empty()) {
      const Seconds gap = now - inst.iteration_start;
      ++inst.iter;
      inst.open_tbt.emplace_back(gap, static_cast<double>(inst.running.size()));
      while (!inst.running.empty() && inst.running.front().end_iter <= inst.iter) {
        std::pop_heap(inst.running.begin(), inst.running.end(), RunningLater{});
        const Running done_req = inst.running.back();
        inst.running.pop_back();
        auto& rec = result.records[static_cast<std::size_t>(done_req.req)];
        const auto& r = rec.request;
        rec.completion_time = now;
        inst.sum_prefill -= r.prefill_tokens;
        inst.sum_start -= done_req.end_iter - r.decode_tokens;
        inst.reserved -= static_cast<std::int64_t>(r.prefill_tokens) + r.decode_tokens;
        ++completed;
      }
    }

    Seconds cursor = now;
    if (inst.status == InstanceStatus::kActive) {
      const auto& cap = profile.capacity;
      while (!inst.waiting.empty() &&
             static_cast<int>(inst.running.size()) < cap.max_concurrent_requests) {
        const auto req = inst.waiting.front();
        auto& rec = result.records[static_cast<std::size_t>(req)];
        const auto& r = rec.request;
        const std::int64_t need = static_cast<std::int64_t>(r.prefill_tokens) + r.decode_tokens;
        if (inst.reserved + need > cap.kv_capacity_tokens) break;
        inst.waiting.pop_front();
        inst.reserved += need;
        rec.site_id = s;
        rec.instance_id = i;
        rec.dequeue_time = cursor;
        cursor += prefill_time(r.prefill_tokens, inst.frequency, profile.latency);
        rec.first_token_time = cursor;
        inst.sum_prefill += r.prefill_tokens;
        inst.sum_start += inst.iter;
        inst.running.push_back({inst.iter + r.decode_tokens, req});
        std::push_heap(inst.running.begin(), inst.running.end(), RunningLater{});
      }
    }

    if (in.params.check_invariants) check_instance(site, inst);

    if (!inst.running.empty()) {
      const double u = kv_util(site, inst);
      const Seconds step = step_time(inst.frequency, u, profile.latency);
      if (!inst.in_iteration) inst.busy_mark = now;
      inst.in_iteration = true;
      inst.iteration_start = now;
      ++inst.epoch;
      push(cursor + step, EventKind::kIteration, s, i, inst.epoch);
      if (in.params.record_iterations) {
        result.iterations.push_back({now, cursor + step - now, s, i,
                                     static_cast<int>(inst.running.size()), u, inst.frequency});
      }
    } else {
      account_busy(inst);
      inst.in_iteration = false;
      if (inst.status == InstanceStatus::kDraining) victim_drained(site, inst);
    }
  }

  void check_instance(const Site& site, const Instance& inst) const {
    const auto& cap = site.spec.profile.capacity;
    if (inst.kv_in_use() > cap.kv_capacity_tokens || inst.reserved > cap.kv_capacity_tokens) {
      throw SimulationError("KV capacity exceeded");
    }
    if (static_cast<int>(inst.running.size()) > cap.max_concurrent_requests) {
      throw SimulationError("concurrency limit exceeded");
    }
    if (inst.status == InstanceStatus::kDraining && !inst.waiting.empty()) {
      throw SimulationError("draining instance holds waiting requests");
    }
  }

  // ---- router ----------------------------------------------------------

  void on_probe() {
    std::vector<SiteSnapshot> snapshots;
    snapshots.reserve(sites.size());
    for (std::size_t s = 0; s < sites.size(); ++s) {
      const Site& site = sites[s];
      const MHz step = site.spec.profile.grid.step();
      SiteSnapshot snap;
      snap.site_id = static_cast<int>(s);
      if (site.pending) {
        snap.active_nodes = site.pending->config.active_nodes;
        snap.frequency = site.pending->config.effective_frequency(step);
      } else if (capped_site(site)) {
        snap.active_nodes = active_count(site);
        snap.frequency = observed_frequency(site);
      } else {
        snap.active_nodes = active_count(site);
        double sum = 0.0;
        for (const auto& inst : site.instances) {
          if (inst.status == InstanceStatus::kActive) sum += inst.frequency;
        }
        snap.frequency = snap.active_nodes > 0 ? sum / snap.active_nodes : 0.0;
      }
      snapshots.push_back(snap);
    }
    const bool updated = router.probe(now, std::move(snapshots), [this](int s) {
      return site_tbt(sites[static_cast<std::size_t>(s)]);
    });
    if (updated) {
      const auto& w = router.weights();
      for (std::size_t s = 0; s < w.size(); ++s) {
        result.weights.push_back({now, static_cast<int>(s), w.w[s]});
      }
    }
    if (!done()) push(now + in.params.router_params.probe_interval, EventKind::kProbe);
  }

  // ---- loop ------------------------------------------------------------

  void step() {
    const Event ev = events.top();
    events.pop();
    now = ev.time;
    if (now > horizon) {
      std::ostringstream msg;
      msg << "simulation passed its horizon (" << horizon << " s) with "
          << in.trace.size() - completed << " requests outstanding";
      throw SimulationError(msg.str());
    }
    ++result.events;
    switch (ev.kind) {
      case EventKind::kPowerTick:
        on_power_tick();
        break;
      case EventKind::kDecision:
        on_decision(ev.site, ev.index);
        break;
      case EventKind::kEnact:
        on_enact(ev.site);
        break;
      case EventKind::kDrainGrace:
        on_drain_grace(ev.site, ev.epoch);
        break;
      case EventKind::kArrival:
        on_arrival();
        break;
      case EventKind::kIteration:
        on_iteration(ev.site, ev.index, ev.epoch);
        break;
      case EventKind::kTelemetry:
        on_telemetry();
        break;
      case EventKind::kProbe:
        on_probe();
        break;
    }
    if (done()) result.end_time = std::max(result.end_time, now);
  }

  bool finished() const { return done() && (events.empty() || events.top().time > 0.0); }

  void run_until(Seconds t) {
    while (!events.empty() && events.top().time <= t) {
      if (done() && events.top().time > 0.0) break;
      step();
    }
  }

  void run() {
    while (!events.empty()) {
      if (done() && events.top().time > 0.0) break;
      step();
    }
    if (!done()) throw SimulationError("event queue drained with requests outstanding");
  }
};

Simulator::Simulator(SimulationInput input) : impl_(std::make_unique<Impl>(std::move(input))) {}
Simulator::~Simulator() = default;

void Simulator::run_until(Seconds t) { impl_->run_until(t); }
void Simulator::run() { impl_->run(); }
bool Simulator::finished() const { return impl_->finished(); }
Seconds Simulator::now() const { return impl_->now; }
int Simulator::site_count() const { return static_cast<int>(impl_->sites.size()); }

int Simulator::instance_count(int site) const {
  return static_cast<int>(impl_->sites.at(static_cast<std::size_t>(site)).instances.size());
}

InstanceView Simulator::instance(int site, int index) const {
  const auto& s = impl_->sites.at(static_cast<std::size_t>(site));
  const auto& inst = s.instances.at(static_cast<std::size_t>(index));
  InstanceView view;
  view.status = inst.status;
  view.frequency = inst.frequency;
  for (auto req : inst.waiting) {
    view.waiting.push_back(impl_->in.trace[static_cast<std::size_t>(req)].id);
  }
  std::vector<std::int32_t> running;
  for (const auto& r : inst.running) running.push_back(r.req);
  std::sort(running.begin(), running.end());
  for (auto req : running) view.running.push_back(impl_->in.trace[static_cast<std::size_t>(req)].id);
  view.kv_tokens_in_use = inst.kv_in_use();
  return view;
}

SiteConfig Simulator::enacted_config(int site) const {
  return impl_->sites.at(static_cast<std::size_t>(site)).config;
}

Telemetry Simulator::site_telemetry(int site) const {
  return impl_->telemetry(impl_->sites.at(static_cast<std::size_t>(site)));
}

const Router& Simulator::router() const { return impl_->router; }
std::size_t Simulator::router_backlog() const { return impl_->backlog.size(); }

SimulationResult Simulator::take_result() { return std::move(impl_->result); }

SimulationResult run_simulation(SimulationInput input) {
  Simulator sim(std::move(input));
  sim.run();
  return sim.take_result();
}

void write_records_csv(const SimulationResult& result, std::ostream& out) {
  out << "request_id,arrival_s,prefill_tokens,decode_tokens,tag,site,instance,enqueue_s,dequeue_s,"
         "first_token_s,completion_s\n";
  for (const auto& r : result.records) {
    out << r.request.id << ',' << format_double(r.request.arrival_time) << ','
        << r.request.prefill_tokens << ',' << r.request.decode_tokens << ','
        << to_string(r.request.workload_tag) << ',' << r.site_id << ',' << r.instance_id << ','
        << format_double(r.enqueue_time) << ',' << format_double(r.dequeue_time) << ','
        << format_double(r.first_token_time) << ',' << format_double(r.completion_time) << '\n';
  }
}

void write_decisions_csv(const SimulationResult& result, std::ostream& out) {
  out << "time_s,enact_s,site,budget_w,active_nodes,frequency_mhz,boosted_nodes,idle_nodes,cap_w,"
         "f_floor_mhz,congested,kv_util,queue_depth,tbt_s,scripted\n";
  for (const auto& d : result.decisions) {
    out << format_double(d.time) << ',' << format_double(d.enact_time) << ',' << d.site << ','
        << format_double(d.budget) << ',' << d.config.active_nodes << ','
        << format_double(d.config.base_frequency) << ',' << d.config.boosted_nodes << ','
        << d.idle_nodes << ',' << format_double(d.cap) << ',' << format_double(d.f_floor) << ','
        << (d.congested ? 1 : 0) << ',' << format_double(d.telemetry.kv_util) << ','
        << format_double(d.telemetry.queue_depth) << ',' << format_double(d.telemetry.tbt) << ','
        << (d.scripted ? 1 : 0) << '\n';
  }
}

void write_weights_csv(const SimulationResult& result, std::ostream& out) {
  out << "time_s,site,weight\n";
  for (const auto& w : result.weights) {
    out << format_double(w.time) << ',' << w.site << ',' << format_double(w.weight) << '\n';
  }
}

void write_power_csv(const SimulationResult& result, std::ostream& out) {
  out << "time_s,site,budget_w,draw_w\n";
  for (const auto& p : result.power) {
    out << format_double(p.time) << ',' << p.site << ',' << format_double(p.budget) << ','
        << format_double(p.draw) << '\n';
  }
}

std::map<std::string, std::string> serialize_logs(const SimulationResult& result) {
  std::map<std::string, std::string> out;
  std::ostringstream records, decisions, weights, power;
  write_records_csv(result, records);
  write_decisions_csv(result, decisions);
  write_weights_csv(result, weights);
  write_power_csv(result, power);
  out["records.csv"] = records.str();
  out["decisions.csv"] = decisions.str();
  out["weights.csv"] = weights.str();
  out["power.csv"] = power.str();
  return out;
}

}  // namespace windfleet
