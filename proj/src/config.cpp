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

#include "windfleet/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "windfleet/csv.hpp"

namespace windfleet {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& k : allowed) list += (list.empty() ? "" : ", ") + k;
      throw ConfigError(where + ": unknown key '" + key + "' (allowed: " + list + ")");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::string_view to_string(PowerShape shape) {
  return shape == PowerShape::kPaperDrop ? "paper-drop" : "constant";
}

PowerShape parse_shape(const std::string& text) {
  if (text == "paper-drop") return PowerShape::kPaperDrop;
  if (text == "constant") return PowerShape::kConstant;
  throw ConfigError("power.profile: unknown '" + text + "' (expected paper-drop or constant)");
}

ProfileConfig profile_from_json(const json& j, const std::string& where) {
  only_keys(j, where, {"base", "probe_rps", "grid", "power", "latency", "capacity"});
  std::string base = "a100";
  read(j, "base", base, where);
  ProfileConfig pc;
  try {
    pc.profile = profile_by_name(base);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ".base: " + e.what());
  }
  if (base == "h100") pc.probe_rps = 8.0;
  read(j, "probe_rps", pc.probe_rps, where);
  auto& p = pc.profile;
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    only_keys(g, where + ".grid", {"min_mhz", "max_mhz", "step_mhz"});
    MHz lo = p.grid.min(), hi = p.grid.max(), step = p.grid.step();
    read(g, "min_mhz", lo, where + ".grid");
    read(g, "max_mhz", hi, where + ".grid");
    read(g, "step_mhz", step, where + ".grid");
    try {
      p.grid = FrequencyGrid(lo, hi, step);
    } catch (const std::exception& e) {
      throw ConfigError(where + ".grid: " + e.what());
    }
  }
  if (j.contains("power")) {
    const auto& pw = j["power"];
    only_keys(pw, where + ".power", {"knots", "overhead_w"});
    auto knots = p.power.knots();
    Watts overhead = p.power.overhead_per_node();
    if (pw.contains("knots")) {
      knots.clear();
      for (const auto& k : pw["knots"]) {
        if (!k.is_array() || k.size() != 2) {
          throw ConfigError(where + ".power.knots: each knot is [frequency_mhz, watts]");
        }
        knots.push_back({k[0].get<double>(), k[1].get<double>()});
      }
    }
    read(pw, "overhead_w", overhead, where + ".power");
    try {
      p.power = PowerTable(knots, overhead);
    } catch (const std::exception& e) {
      throw ConfigError(where + ".power: " + e.what());
    }
  }
  if (j.contains("latency")) {
    const auto& l = j["latency"];
    const std::string w = where + ".latency";
    only_keys(l, w, {"step_intercept_s", "step_slope_s_mhz", "kv_knee", "congestion_exponent",
                     "congestion_gain", "prefill_rate_coeff"});
    read(l, "step_intercept_s", p.latency.step_intercept_s, w);
    read(l, "step_slope_s_mhz", p.latency.step_slope_s_mhz, w);
    read(l, "kv_knee", p.latency.kv_knee, w);
    read(l, "congestion_exponent", p.latency.congestion_exponent, w);
    read(l, "congestion_gain", p.latency.congestion_gain, w);
    read(l, "prefill_rate_coeff", p.latency.prefill_rate_coeff, w);
  }
  if (j.contains("capacity")) {
    const auto& c = j["capacity"];
    only_keys(c, where + ".capacity", {"kv_tokens", "max_concurrent_requests"});
    read(c, "kv_tokens", p.capacity.kv_capacity_tokens, where + ".capacity");
    read(c, "max_concurrent_requests", p.capacity.max_concurrent_requests, where + ".capacity");
  }
  p.name = base;
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return pc;
}

json profile_to_json(const ProfileConfig& pc) {
  const auto& p = pc.profile;
  json knots = json::array();
  for (const auto& k : p.power.knots()) knots.push_back({k.frequency, k.power});
  return {{"base", p.name},
          {"probe_rps", pc.probe_rps},
          {"grid", {{"min_mhz", p.grid.min()}, {"max_mhz", p.grid.max()}, {"step_mhz", p.grid.step()}}},
          {"power", {{"knots", knots}, {"overhead_w", p.power.overhead_per_node()}}},
          {"latency",
           {{"step_intercept_s", p.latency.step_intercept_s},
            {"step_slope_s_mhz", p.latency.step_slope_s_mhz},
            {"kv_knee", p.latency.kv_knee},
            {"congestion_exponent", p.latency.congestion_exponent},
            {"congestion_gain", p.latency.congestion_gain},
            {"prefill_rate_coeff", p.latency.prefill_rate_coeff}}},
          {"capacity",
           {{"kv_tokens", p.capacity.kv_capacity_tokens},
            {"max_concurrent_requests", p.capacity.max_concurrent_requests}}}};
}

const ProfileConfig& find_profile(const ExperimentConfig& c, const std::string& name) {
  auto it = c.profiles.find(name);
  if (it == c.profiles.end()) throw ConfigError("sites: unknown profile '" + name + "'");
  return it->second;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (sites.empty()) throw ConfigError("sites: at least one site is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto& s = sites[i];
    const std::string where = "sites[" + std::to_string(i) + "]";
    if (s.nodes < 1) throw ConfigError(where + ".nodes: must be at least 1");
    if (!names.insert(s.name).second) throw ConfigError(where + ".name: duplicate '" + s.name + "'");
    const auto& pc = find_profile(*this, s.profile);
    try {
      thresholds.validate(pc.profile.grid);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("thresholds: ") + e.what());
    }
  }
  for (const auto& [name, pc] : profiles) {
    if (!(pc.probe_rps > 0.0)) throw ConfigError("profiles." + name + ".probe_rps: must be positive");
  }
  try {
    engine.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("engine: ") + e.what());
  }
  if (!(engine.drain_grace < thresholds.cycle)) {
    throw ConfigError("engine.drain_grace_s: must be shorter than thresholds.cycle_s");
  }
  if (workload_file.empty()) {
    if (!(workload.rps > 0.0)) throw ConfigError("workload.rps: must be positive");
    if (!(workload.duration >= 0.0)) throw ConfigError("workload.duration_s: must be non-negative");
  }
  if (power.file.empty()) {
    if (!(power.percentile > 0.0 && power.percentile <= 100.0)) {
      throw ConfigError("power.percentile: must be in (0, 100]");
    }
    if (!(power.granularity > 0.0)) throw ConfigError("power.granularity_s: must be positive");
  }
}

ExperimentConfig config_from_json(const json& j) {
  only_keys(j, "config", {"name", "profiles", "sites", "thresholds", "controller", "router", "engine",
                          "workload", "power"});
  ExperimentConfig c;
  read(j, "name", c.name, "config");
  c.profiles["a100"] = ProfileConfig{a100_profile(), 4.0};
  c.profiles["h100"] = ProfileConfig{h100_profile(), 8.0};
  if (j.contains("profiles")) {
    if (!j["profiles"].is_object()) throw ConfigError("profiles: expected an object");
    for (const auto& [name, value] : j["profiles"].items()) {
      c.profiles[name] = profile_from_json(value, "profiles." + name);
    }
  }
  if (!j.contains("sites") || !j["sites"].is_array()) throw ConfigError("sites: expected an array");
  for (std::size_t i = 0; i < j["sites"].size(); ++i) {
    const auto& s = j["sites"][i];
    const std::string where = "sites[" + std::to_string(i) + "]";
    only_keys(s, where, {"name", "nodes", "profile"});
    ExperimentConfig::Site site;
    site.name = "site" + std::to_string(i);
    read(s, "name", site.name, where);
    read(s, "nodes", site.nodes, where);
    read(s, "profile", site.profile, where);
    c.sites.push_back(site);
  }
  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    only_keys(t, "thresholds", {"kv_max", "l_max_s", "q_max", "delta_f_mhz", "cycle_s",
                                "presignal_lead_s"});
    read(t, "kv_max", c.thresholds.kv_max, "thresholds");
    read(t, "l_max_s", c.thresholds.l_max, "thresholds");
    read(t, "q_max", c.thresholds.q_max, "thresholds");
    read(t, "delta_f_mhz", c.thresholds.delta_f, "thresholds");
    read(t, "cycle_s", c.thresholds.cycle, "thresholds");
    read(t, "presignal_lead_s", c.thresholds.presignal_lead, "thresholds");
  }
  try {
    if (j.contains("controller")) c.engine.controller = parse_controller(j["controller"].get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("controller: ") + e.what());
  }
  if (j.contains("router")) {
    const auto& r = j["router"];
    only_keys(r, "router", {"kind", "alpha", "delta", "reactive_interval_s", "probe_interval_s"});
    try {
      if (r.contains("kind")) c.engine.router = parse_router(r["kind"].get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("router.kind: ") + e.what());
    }
    read(r, "alpha", c.engine.router_params.alpha, "router");
    read(r, "delta", c.engine.router_params.delta, "router");
    read(r, "reactive_interval_s", c.engine.router_params.reactive_interval, "router");
    read(r, "probe_interval_s", c.engine.router_params.probe_interval, "router");
  }
  if (j.contains("engine")) {
    const auto& e = j["engine"];
    only_keys(e, "engine", {"drain_grace_s", "telemetry_window_s", "telemetry_step_s", "power_tick_s",
                            "powercap_u_min", "horizon_s", "check_invariants"});
    read(e, "drain_grace_s", c.engine.drain_grace, "engine");
    read(e, "telemetry_window_s", c.engine.telemetry_window, "engine");
    read(e, "telemetry_step_s", c.engine.telemetry_step, "engine");
    read(e, "power_tick_s", c.engine.power_tick, "engine");
    read(e, "powercap_u_min", c.engine.powercap_u_min, "engine");
    read(e, "horizon_s", c.engine.horizon, "engine");
    read(e, "check_invariants", c.engine.check_invariants, "engine");
  }
  if (j.contains("workload")) {
    const auto& w = j["workload"];
    only_keys(w, "workload", {"type", "rps", "duration_s", "seed", "file"});
    try {
      if (w.contains("type")) c.workload.type = parse_workload_type(w["type"].get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("workload.type: ") + e.what());
    }
    read(w, "rps", c.workload.rps, "workload");
    read(w, "duration_s", c.workload.duration, "workload");
    read(w, "seed", c.workload.seed, "workload");
    read(w, "file", c.workload_file, "workload");
  }
  if (j.contains("power")) {
    const auto& p = j["power"];
    only_keys(p, "power", {"profile", "percentile", "granularity_s", "file"});
    if (p.contains("profile")) c.power.shape = parse_shape(p["profile"].get<std::string>());
    read(p, "percentile", c.power.percentile, "power");
    read(p, "granularity_s", c.power.granularity, "power");
    read(p, "file", c.power.file, "power");
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json profiles = json::object();
  std::set<std::string> used;
  for (const auto& s : c.sites) used.insert(s.profile);
  for (const auto& name : used) profiles[name] = profile_to_json(find_profile(c, name));
  json sites = json::array();
  for (const auto& s : c.sites) sites.push_back({{"name", s.name}, {"nodes", s.nodes}, {"profile", s.profile}});
  const auto& t = c.thresholds;
  const auto& e = c.engine;
  json workload = {{"type", std::string(to_string(c.workload.type))},
                   {"rps", c.workload.rps},
                   {"duration_s", c.workload.duration},
                   {"seed", c.workload.seed}};
  if (!c.workload_file.empty()) workload = {{"file", c.workload_file}};
  json power = {{"profile", std::string(to_string(c.power.shape))},
                {"percentile", c.power.percentile},
                {"granularity_s", c.power.granularity}};
  if (!c.power.file.empty()) power = {{"file", c.power.file}};
  return {{"name", c.name},
          {"profiles", profiles},
          {"sites", sites},
          {"thresholds",
           {{"kv_max", t.kv_max},
            {"l_max_s", t.l_max},
            {"q_max", t.q_max},
            {"delta_f_mhz", t.delta_f},
            {"cycle_s", t.cycle},
            {"presignal_lead_s", t.presignal_lead}}},
          {"controller", std::string(to_string(e.controller))},
          {"router",
           {{"kind", std::string(to_string(e.router))},
            {"alpha", e.router_params.alpha},
            {"delta", e.router_params.delta},
            {"reactive_interval_s", e.router_params.reactive_interval},
            {"probe_interval_s", e.router_params.probe_interval}}},
          {"engine",
           {{"drain_grace_s", e.drain_grace},
            {"telemetry_window_s", e.telemetry_window},
            {"telemetry_step_s", e.telemetry_step},
            {"power_tick_s", e.power_tick},
            {"powercap_u_min", e.powercap_u_min},
            {"horizon_s", e.horizon},
            {"check_invariants", e.check_invariants}}},
          {"workload", workload},
          {"power", power}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto c = config_from_json(j);
  c.base_dir = path.parent_path();
  return c;
}

std::vector<std::string> preset_names() { return {"desk-scale", "paper-testbed"}; }

ExperimentConfig preset(const std::string& name) {
  json j;
  if (name == "desk-scale") {
    j = {{"name", name},
         {"sites", {{{"name", "west"}, {"nodes", 4}}, {{"name", "central"}, {"nodes", 2}},
                    {{"name", "east"}, {"nodes", 2}}}},
         {"workload", {{"type", "conversation"}, {"rps", 43.75}, {"duration_s", 7200}, {"seed", 1}}}};
  } else if (name == "paper-testbed") {
    j = {{"name", name},
         {"sites", {{{"name", "west"}, {"nodes", 16}}, {{"name", "central"}, {"nodes", 8}},
                    {{"name", "east"}, {"nodes", 8}}}},
         {"workload", {{"type", "conversation"}, {"rps", 175}, {"duration_s", 7200}, {"seed", 1}}}};
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected desk-scale or paper-testbed)");
  }
  return config_from_json(j);
}

std::vector<SiteSpec> site_specs(const ExperimentConfig& c) {
  std::vector<SiteSpec> out;
  for (const auto& s : c.sites) {
    SiteSpec spec;
    spec.name = s.name;
    spec.nodes = s.nodes;
    spec.profile = find_profile(c, s.profile).profile;
    spec.thresholds = c.thresholds;
    out.push_back(spec);
  }
  return out;
}

std::vector<PowerTrace> fleet_power(const std::vector<PowerTrace>& shapes,
                                    const std::vector<double>& shares, Watts fleet_peak,
                                    double percentile) {
  if (shapes.size() != shares.size()) throw std::invalid_argument("one share per site is required");
  double total = 0.0;
  for (double s : shares) {
    if (!(s > 0.0)) throw std::invalid_argument("site shares must be positive");
    total += s;
  }
  std::vector<PowerTrace> out;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    out.push_back(scale_to_fleet(shapes[i], fleet_peak * shares[i] / total, percentile));
  }
  return out;
}

std::vector<PowerTrace> build_power(const ExperimentConfig& c) {
  const int n = static_cast<int>(c.sites.size());
  if (!c.power.file.empty()) {
    auto traces = load_power_csv((c.base_dir / c.power.file).string());
    if (static_cast<int>(traces.size()) != n) {
      throw ConfigError("power.file: " + std::to_string(traces.size()) + " sites in trace, " +
                        std::to_string(n) + " in config");
    }
    for (int i = 0; i < n; ++i) {
      if (traces[i].site_id() != i) throw ConfigError("power.file: site ids must be 0.." + std::to_string(n - 1));
    }
    return traces;
  }
  const Seconds span = std::max<Seconds>(c.workload.duration, c.power.granularity);
  std::vector<PowerTrace> shapes;
  if (c.power.shape == PowerShape::kPaperDrop) {
    shapes = paper_drop_profile(n, span, c.power.granularity);
  } else {
    for (int i = 0; i < n; ++i) shapes.push_back(constant_trace(i, 1.0, span, c.power.granularity));
  }
  const auto specs = site_specs(c);
  std::vector<PowerTrace> out;
  for (int i = 0; i < n; ++i) {
    const auto& p = specs[i].profile;
    const Watts peak = specs[i].nodes * node_power(NodeState::kActive, p.grid.max(), p.power);
    out.push_back(scale_to_fleet(shapes[i], peak, c.power.percentile));
  }
  return out;
}

std::vector<Request> build_trace(const ExperimentConfig& c) {
  if (!c.workload_file.empty()) return load_trace((c.base_dir / c.workload_file).string());
  return generate_trace(c.workload);
}

SimulationInput build_input(const ExperimentConfig& c) {
  c.validate();
  SimulationInput in;
  in.sites = site_specs(c);
  in.power = build_power(c);
  in.trace = build_trace(c);
  in.params = c.engine;
  return in;
}

RunArtifacts run_experiment(const ExperimentConfig& c) {
  RunArtifacts out;
  out.result = run_simulation(build_input(c));
  out.files = serialize_logs(out.result);
  json hashes = json::object();
  for (const auto& [name, body] : out.files) hashes[name] = sha256_hex(body);
  json manifest = {{"tool", "windfleet"},
                   {"controller", std::string(to_string(c.engine.controller))},
                   {"router", std::string(to_string(c.engine.router))},
                   {"seed", c.workload.seed},
                   {"requests", out.result.records.size()},
                   {"preemptions", out.result.preemptions},
                   {"end_time_s", out.result.end_time},
                   {"sha256", hashes},
                   {"config", config_to_json(c)}};
  out.files["manifest.json"] = manifest.dump(2) + "\n";
  return out;
}

void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, body] : artifacts.files) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << body;
  }
}

}  // namespace windfleet
