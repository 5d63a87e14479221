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

#include "windfleet/router.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace windfleet {

std::string_view to_string(RouterKind kind) {
  switch (kind) {
    case RouterKind::kXWind:
      return "xwind";
    case RouterKind::kStatic:
      return "static";
    case RouterKind::kLiveCapacity:
      return "livecap";
    case RouterKind::kLatencyOnly:
      return "latency";
    case RouterKind::kCapFreq:
      return "capfreq";
  }
  return "unknown";
}

RouterKind parse_router(std::string_view text) {
  for (RouterKind kind : all_routers()) {
    if (text == to_string(kind)) return kind;
  }
  if (text == "live_capacity") return RouterKind::kLiveCapacity;
  if (text == "latency_only") return RouterKind::kLatencyOnly;
  if (text == "cap_freq") return RouterKind::kCapFreq;
  throw std::invalid_argument("unknown router '" + std::string(text) +
                              "' (expected xwind|static|livecap|latency|capfreq)");
}

const std::vector<RouterKind>& all_routers() {
  static const std::vector<RouterKind> kinds = {RouterKind::kXWind, RouterKind::kCapFreq,
                                                RouterKind::kLatencyOnly,
                                                RouterKind::kLiveCapacity, RouterKind::kStatic};
  return kinds;
}

void RouterParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("router alpha must be in (0, 1]");
  if (!(delta > 0.0)) throw std::invalid_argument("router delta must be positive");
  if (!(reactive_interval > 0.0 && probe_interval > 0.0)) {
    throw std::invalid_argument("router intervals must be positive");
  }
}

bool capacity_changed(const std::vector<SiteSnapshot>& prev,
                      const std::vector<SiteSnapshot>& curr) {
  if (prev.size() != curr.size()) return true;
  for (std::size_t i = 0; i < curr.size(); ++i) {
    if (prev[i].active_nodes != curr[i].active_nodes) return true;
    if (std::abs(prev[i].frequency - curr[i].frequency) > 1e-9) return true;
  }
  return false;
}

void normalize_to(RoutingWeights& weights, double target) {
  const double sum = weights.total();
  if (sum <= 0.0) {
    std::fill(weights.w.begin(), weights.w.end(), 0.0);
    return;
  }
  const double scale = target / sum;
  for (double& w : weights.w) w *= scale;
}

namespace {

int total_nodes(const std::vector<SiteSnapshot>& snapshots) {
  int total = 0;
  for (const auto& s : snapshots) total += std::max(0, s.active_nodes);
  return total;
}

}  // namespace

RoutingWeights proactive_update(const std::vector<SiteSnapshot>& curr) {
  RoutingWeights out;
  out.w.reserve(curr.size());
  for (const auto& s : curr) {
    out.w.push_back(s.active_nodes > 0 ? s.active_nodes * s.frequency : 0.0);
  }
  normalize_to(out, total_nodes(curr));
  return out;
}

RoutingWeights reactive_update(const RoutingWeights& weights, const std::vector<double>& ema,
                               const std::vector<int>& active_nodes, const RouterParams& params) {
  if (ema.size() != weights.size() || active_nodes.size() != weights.size()) {
    throw std::invalid_argument("reactive_update: vector sizes differ");
  }
  double sum = 0.0;
  int count = 0;
  for (std::size_t s = 0; s < ema.size(); ++s) {
    if (active_nodes[s] > 0 && ema[s] > 0.0) {
      sum += ema[s];
      ++count;
    }
  }
  if (count == 0 || sum <= 0.0) return weights;
  const double mean = sum / count;

  RoutingWeights out = weights;
  for (std::size_t s = 0; s < ema.size(); ++s) {
    if (active_nodes[s] <= 0 || ema[s] <= 0.0) continue;
    const double rho = std::clamp(ema[s] / mean, 1.0 - params.delta, 1.0 + params.delta);
    if (rho > 1.0) out.w[s] /= rho;
  }
  normalize_to(out, std::accumulate(active_nodes.begin(), active_nodes.end(), 0.0));
  return out;
}

double ema_update(std::optional<double> smoothed, double observation, double alpha) {
  if (!smoothed) return observation;
  return (1.0 - alpha) * *smoothed + alpha * observation;
}

std::optional<int> WeightedRoundRobin::pick(const RoutingWeights& weights) {
  if (credit_.size() != weights.size()) credit_.assign(weights.size(), 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s < weights.size(); ++s) {
    if (weights.w[s] > 0.0) {
      total += weights.w[s];
    } else {
      credit_[s] = 0.0;
    }
  }
  if (total <= 0.0) return std::nullopt;

  int best = -1;
  for (std::size_t s = 0; s < weights.size(); ++s) {
    if (weights.w[s] <= 0.0) continue;
    credit_[s] += weights.w[s];
    if (best < 0 || credit_[s] > credit_[best]) best = static_cast<int>(s);
  }
  credit_[best] -= total;
  return best;
}

RoutingWeights ablation_weights(RouterKind kind, const std::vector<SiteSnapshot>& snapshots,
                                const std::vector<int>& provisioned,
                                const std::vector<double>& ema) {
  RoutingWeights out;
  switch (kind) {
    case RouterKind::kStatic:
      out.w.assign(provisioned.begin(), provisioned.end());
      return out;
    case RouterKind::kLiveCapacity:
      for (const auto& s : snapshots) out.w.push_back(std::max(0, s.active_nodes));
      return out;
    case RouterKind::kCapFreq:
    case RouterKind::kXWind:
      return proactive_update(snapshots);
    case RouterKind::kLatencyOnly: {
      // Sites with no estimate yet get the mean of the known ones.
      double known_sum = 0.0;
      int known = 0;
      for (std::size_t s = 0; s < snapshots.size(); ++s) {
        if (snapshots[s].active_nodes > 0 && s < ema.size() && ema[s] > 0.0) {
          known_sum += ema[s];
          ++known;
        }
      }
      const double fallback = known > 0 ? known_sum / known : 1.0;
      for (std::size_t s = 0; s < snapshots.size(); ++s) {
        if (snapshots[s].active_nodes <= 0) {
          out.w.push_back(0.0);
          continue;
        }
        const double latency = (s < ema.size() && ema[s] > 0.0) ? ema[s] : fallback;
        out.w.push_back(1.0 / latency);
      }
      normalize_to(out, total_nodes(snapshots));
      return out;
    }
  }
  return out;
}

Router::Router(RouterKind kind, RouterParams params, std::vector<int> provisioned)
    : kind_(kind), params_(params), provisioned_(std::move(provisioned)) {
  params_.validate();
  const std::size_t n = provisioned_.size();
  ema_.assign(n, 0.0);
  ema_seeded_.assign(n, false);
  weights_.w.assign(provisioned_.begin(), provisioned_.end());
}

void Router::update_ema(const std::vector<SiteSnapshot>& snapshots) {
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    if (snapshots[s].latency <= 0.0) continue;
    ema_[s] = ema_update(ema_seeded_[s] ? std::optional<double>(ema_[s]) : std::nullopt,
                         snapshots[s].latency, params_.alpha);
    ema_seeded_[s] = true;
  }
}

bool Router::probe(Seconds now, const std::vector<SiteSnapshot>& snapshots) {
  if (snapshots.size() != provisioned_.size()) {
    throw std::invalid_argument("router probe: wrong number of sites");
  }
  const bool changed = !has_prev_ || capacity_changed(prev_, snapshots);
  const bool interval_elapsed = now - last_update_ >= params_.reactive_interval - 1e-9;
  bool updated = false;

  std::vector<int> counts;
  counts.reserve(snapshots.size());
  for (const auto& s : snapshots) counts.push_back(std::max(0, s.active_nodes));

  switch (kind_) {
    case RouterKind::kStatic:
      if (!has_prev_) {
        weights_ = ablation_weights(kind_, snapshots, provisioned_, ema_);
        updated = true;
      }
      break;
    case RouterKind::kLiveCapacity:
    case RouterKind::kCapFreq:
      if (changed) {
        weights_ = ablation_weights(kind_, snapshots, provisioned_, ema_);
        updated = true;
      }
      break;
    case RouterKind::kLatencyOnly:
      if (changed) {
        weights_ = ablation_weights(kind_, snapshots, provisioned_, ema_);
        updated = true;
      } else if (interval_elapsed) {
        update_ema(snapshots);
        weights_ = ablation_weights(kind_, snapshots, provisioned_, ema_);
        updated = true;
      }
      break;
    case RouterKind::kXWind:
      if (changed) {
        weights_ = proactive_update(snapshots);
        updated = true;
      } else if (interval_elapsed) {
        update_ema(snapshots);
        weights_ = reactive_update(weights_, ema_, counts, params_);
        updated = true;
      }
      break;
  }

  if (updated) last_update_ = now;
  prev_ = snapshots;
  has_prev_ = true;
  return updated;
}

bool Router::wants_latency(Seconds now, const std::vector<SiteSnapshot>& snapshots) const {
  if (kind_ != RouterKind::kXWind && kind_ != RouterKind::kLatencyOnly) return false;
  if (!has_prev_ || capacity_changed(prev_, snapshots)) return false;
  return now - last_update_ >= params_.reactive_interval - 1e-9;
}

bool Router::probe(Seconds now, std::vector<SiteSnapshot> snapshots,
                   const std::function<Seconds(int)>& latency_of) {
  if (wants_latency(now, snapshots)) {
    for (std::size_t s = 0; s < snapshots.size(); ++s) {
      snapshots[s].latency = latency_of(static_cast<int>(s));
    }
  }
  return probe(now, snapshots);
}

std::optional<int> Router::dispatch(const std::vector<bool>& serving) {
  if (serving.size() != weights_.size()) {
    throw std::invalid_argument("router dispatch: wrong mask size");
  }
  masked_.w.resize(weights_.size());
  for (std::size_t s = 0; s < weights_.size(); ++s) {
    masked_.w[s] = serving[s] ? weights_.w[s] : 0.0;
  }
  return rr_.pick(masked_);
}

}  // namespace windfleet
