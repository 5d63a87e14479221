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

#include "windfleet/power_trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "windfleet/csv.hpp"
#include "windfleet/stats.hpp"

namespace windfleet {

PowerTrace::PowerTrace(int site_id, std::vector<Seconds> times, std::vector<Watts> power)
    : site_id_(site_id), times_(std::move(times)), power_(std::move(power)) {
  const std::string who = "power trace for site " + std::to_string(site_id_);
  if (times_.empty() || times_.size() != power_.size()) {
    throw std::invalid_argument(who + ": needs matching, non-empty time and power columns");
  }
  for (std::size_t i = 0; i < power_.size(); ++i) {
    if (power_[i] < 0.0) throw std::invalid_argument(who + ": negative power sample");
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw std::invalid_argument(who + ": times must be strictly increasing");
    }
  }
  if (times_.size() > 2) {
    const double step = times_[1] - times_[0];
    for (std::size_t i = 2; i < times_.size(); ++i) {
      if (std::abs((times_[i] - times_[i - 1]) - step) > 1e-6 * std::max(1.0, step)) {
        throw std::invalid_argument(who + ": samples must be uniformly spaced");
      }
    }
  }
}

Seconds PowerTrace::granularity() const {
  return times_.size() < 2 ? 0.0 : times_[1] - times_[0];
}

Watts budget_at(const PowerTrace& trace, Seconds t) {
  if (t < trace.start() || t > trace.end()) {
    throw std::out_of_range("time " + format_double(t) + " s outside power trace span [" +
                            format_double(trace.start()) + ", " + format_double(trace.end()) + "]");
  }
  return budget_at_held(trace, t);
}

Watts budget_at_held(const PowerTrace& trace, Seconds t) {
  const auto& times = trace.times();
  const auto& power = trace.power();
  if (t <= times.front()) return power.front();
  if (t >= times.back()) return power.back();
  const auto hi = static_cast<std::size_t>(
      std::upper_bound(times.begin(), times.end(), t) - times.begin());
  const std::size_t lo = hi - 1;
  const double frac = (t - times[lo]) / (times[hi] - times[lo]);
  return power[lo] + frac * (power[hi] - power[lo]);
}

Watts min_budget_over(const PowerTrace& trace, Seconds t0, Seconds t1) {
  if (t1 < t0) std::swap(t0, t1);
  Watts lowest = std::min(budget_at_held(trace, t0), budget_at_held(trace, t1));
  const auto& times = trace.times();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > t0 && times[i] < t1) lowest = std::min(lowest, trace.power()[i]);
  }
  return lowest;
}

PowerTrace scale_to_fleet(const PowerTrace& trace, Watts peak, double percentile) {
  const auto& power = trace.power();
  if (*std::max_element(power.begin(), power.end()) <= 0.0) {
    throw std::invalid_argument("cannot scale an all-zero power trace");
  }
  const double reference = nearest_rank_percentile(power, percentile);
  if (reference <= 0.0) {
    throw std::invalid_argument("power trace percentile is zero; cannot scale");
  }
  const double factor = peak / reference;
  std::vector<Watts> scaled;
  scaled.reserve(power.size());
  for (Watts w : power) scaled.push_back(w * factor);
  return PowerTrace(trace.site_id(), trace.times(), std::move(scaled));
}

std::vector<PowerTrace> load_power_csv(std::istream& in) {
  std::map<int, std::pair<std::vector<Seconds>, std::vector<Watts>>> columns;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = "power trace line " + std::to_string(line_no);
    if (!header_seen) {
      if (line != "time_s,site_id,power_w") {
        throw std::invalid_argument(where + ": expected header 'time_s,site_id,power_w'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) throw std::invalid_argument(where + ": expected 3 fields");
    auto& column = columns[static_cast<int>(parse_int(fields[1], where))];
    column.first.push_back(parse_double(fields[0], where));
    column.second.push_back(parse_double(fields[2], where));
  }
  std::vector<PowerTrace> out;
  for (auto& [site, column] : columns) {
    out.emplace_back(site, std::move(column.first), std::move(column.second));
  }
  return out;
}

std::vector<PowerTrace> load_power_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open power trace '" + path + "'");
  return load_power_csv(in);
}

void save_power_csv(const std::vector<PowerTrace>& traces, std::ostream& out) {
  out << "time_s,site_id,power_w\n";
  for (const auto& trace : traces) {
    for (std::size_t i = 0; i < trace.times().size(); ++i) {
      out << format_double(trace.times()[i]) << ',' << trace.site_id() << ','
          << format_double(trace.power()[i]) << '\n';
    }
  }
}

void save_power_csv(const std::vector<PowerTrace>& traces, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write power trace '" + path + "'");
  save_power_csv(traces, out);
}

namespace {

// Shapes over eight forecast intervals; sampled by fraction of the duration.
constexpr double kDropShape[] = {1.00, 0.97, 1.00, 0.98, 0.95, 0.72, 0.50, 0.49, 0.50};
constexpr double kSteadyShape[] = {0.95, 1.00, 0.97, 0.99, 1.00, 0.98, 1.00, 0.97, 0.99};
constexpr double kDipShape[] = {1.00, 0.98, 0.85, 0.80, 0.82, 0.95, 1.00, 0.98, 1.00};
constexpr std::size_t kShapeLen = std::size(kDropShape);

double shape_at(const double* shape, double frac) {
  const double pos = std::clamp(frac, 0.0, 1.0) * static_cast<double>(kShapeLen - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= kShapeLen) return shape[kShapeLen - 1];
  const double t = pos - static_cast<double>(lo);
  return shape[lo] + t * (shape[lo + 1] - shape[lo]);
}

}  // namespace

std::vector<PowerTrace> paper_drop_profile(int sites, Seconds duration, Seconds granularity) {
  if (sites < 1) throw std::invalid_argument("power profile needs at least one site");
  if (!(duration > 0.0) || !(granularity > 0.0)) {
    throw std::invalid_argument("power profile needs positive duration and granularity");
  }
  const auto samples = static_cast<std::size_t>(std::ceil(duration / granularity - 1e-9)) + 1;
  std::vector<PowerTrace> out;
  for (int s = 0; s < sites; ++s) {
    const double* shape = s == 0 ? kDropShape : (s % 2 == 1 ? kSteadyShape : kDipShape);
    std::vector<Seconds> times;
    std::vector<Watts> power;
    for (std::size_t i = 0; i < samples; ++i) {
      const Seconds t = granularity * static_cast<double>(i);
      times.push_back(t);
      power.push_back(shape_at(shape, t / duration));
    }
    out.emplace_back(s, std::move(times), std::move(power));
  }
  return out;
}

PowerTrace constant_trace(int site_id, Watts power, Seconds duration, Seconds granularity) {
  const auto samples =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(duration / granularity)) + 1);
  std::vector<Seconds> times;
  for (std::size_t i = 0; i < samples; ++i) times.push_back(granularity * static_cast<double>(i));
  return PowerTrace(site_id, std::move(times), std::vector<Watts>(samples, power));
}

}  // namespace windfleet
