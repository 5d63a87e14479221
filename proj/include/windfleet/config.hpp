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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "windfleet/engine.hpp"
#include "windfleet/workload.hpp"

namespace windfleet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProfileConfig {
  GpuProfile profile = a100_profile();
  double probe_rps = 4.0;
};

enum class PowerShape { kPaperDrop, kConstant };

struct PowerConfig {
  PowerShape shape = PowerShape::kPaperDrop;
  // Provisioning percentile mapped onto each site's full-fleet draw.
  double percentile = 100.0;
  Seconds granularity = 900.0;
  // When set, the trace is read from this CSV instead.
  std::string file;
};

struct ExperimentConfig {
  std::string name = "custom";
  std::map<std::string, ProfileConfig> profiles;
  struct Site {
    std::string name;
    int nodes = 1;
    std::string profile = "a100";
  };
  std::vector<Site> sites;
  SlcThresholds thresholds;
  EngineParams engine;
  WorkloadSpec workload;
  std::string workload_file;
  PowerConfig power;
  std::filesystem::path base_dir;

  // Throws ConfigError naming the offending key.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
// Relative trace paths resolve against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);

ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

std::vector<SiteSpec> site_specs(const ExperimentConfig& config);
// Per-site power traces scaled to the site's full-fleet draw at F_max.
std::vector<PowerTrace> build_power(const ExperimentConfig& config);
std::vector<Request> build_trace(const ExperimentConfig& config);
SimulationInput build_input(const ExperimentConfig& config);

// Splits a fleet-wide peak over sites in proportion to `shares`.
std::vector<PowerTrace> fleet_power(const std::vector<PowerTrace>& shapes,
                                    const std::vector<double>& shares, Watts fleet_peak,
                                    double percentile);

struct RunArtifacts {
  SimulationResult result;
  std::map<std::string, std::string> files;
};

// Runs the experiment and renders the four logs plus manifest.json, which
// records the resolved config and a SHA-256 of every log.
RunArtifacts run_experiment(const ExperimentConfig& config);
void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& dir);

}  // namespace windfleet
