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

#include "windfleet/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "windfleet/csv.hpp"

namespace windfleet {

std::string_view to_string(WorkloadType type) {
  switch (type) {
    case WorkloadType::kCoding:
      return "coding";
    case WorkloadType::kConversation:
      return "conversation";
    case WorkloadType::kMixed:
      return "mixed";
  }
  return "unknown";
}

WorkloadType parse_workload_type(std::string_view text) {
  if (text == "coding") return WorkloadType::kCoding;
  if (text == "conversation") return WorkloadType::kConversation;
  if (text == "mixed") return WorkloadType::kMixed;
  throw std::invalid_argument("unknown workload type '" + std::string(text) +
                              "' (expected coding|conversation|mixed)");
}

// Means are tuned (after clamping) to prefill/decode ratios of ~114 for
// coding and ~16 for conversation.
LengthProfile default_coding_lengths() {
  return {{7.595, 0.8, 1, 16384}, {3.0, 0.6, 1, 2048}};
}

LengthProfile default_conversation_lengths() {
  return {{6.41, 0.9, 1, 16384}, {3.8, 0.7, 1, 2048}};
}

namespace {

std::int32_t sample_length(const LengthDistribution& dist, std::mt19937_64& rng) {
  std::lognormal_distribution<double> lengths(dist.mu, dist.sigma);
  const double x = std::round(lengths(rng));
  return static_cast<std::int32_t>(
      std::clamp(x, static_cast<double>(dist.min), static_cast<double>(dist.max)));
}

}  // namespace

std::vector<Request> generate_trace(const WorkloadSpec& spec) {
  if (!(spec.rps > 0.0)) throw std::invalid_argument("workload rps must be positive");
  if (spec.duration < 0.0) throw std::invalid_argument("workload duration must be >= 0");
  std::vector<Request> trace;
  if (spec.duration == 0.0) return trace;
  trace.reserve(static_cast<std::size_t>(spec.rps * spec.duration * 1.01) + 16);

  std::mt19937_64 rng(spec.seed);
  std::exponential_distribution<double> gaps(spec.rps);
  std::bernoulli_distribution coin(0.5);

  Seconds t = gaps(rng);
  std::int64_t id = 0;
  while (t < spec.duration) {
    Request r;
    r.id = id++;
    r.arrival_time = t;
    const LengthProfile* lengths = nullptr;
    switch (spec.type) {
      case WorkloadType::kCoding:
        lengths = &spec.coding;
        r.workload_tag = WorkloadTag::kCoding;
        break;
      case WorkloadType::kConversation:
        lengths = &spec.conversation;
        r.workload_tag = WorkloadTag::kConversation;
        break;
      case WorkloadType::kMixed:
        lengths = coin(rng) ? &spec.coding : &spec.conversation;
        r.workload_tag = WorkloadTag::kMixedOrigin;
        break;
    }
    r.prefill_tokens = sample_length(lengths->prefill, rng);
    r.decode_tokens = sample_length(lengths->decode, rng);
    trace.push_back(r);
    t += gaps(rng);
  }
  return trace;
}

void save_trace(const std::vector<Request>& trace, std::ostream& out) {
  out << "arrival_s,prefill_tokens,decode_tokens,tag\n";
  for (const auto& r : trace) {
    out << format_double(r.arrival_time) << ',' << r.prefill_tokens << ',' << r.decode_tokens
        << ',' << to_string(r.workload_tag) << '\n';
  }
}

void save_trace(const std::vector<Request>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file '" + path + "'");
  save_trace(trace, out);
}

void validate_trace(const std::vector<Request>& trace) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& r = trace[i];
    if (r.prefill_tokens < 1 || r.decode_tokens < 1) {
      throw std::invalid_argument("request " + std::to_string(r.id) +
                                  ": token counts must be >= 1");
    }
    if (r.arrival_time < 0.0) {
      throw std::invalid_argument("request " + std::to_string(r.id) + ": negative arrival time");
    }
    if (i > 0 && r.arrival_time < trace[i - 1].arrival_time) {
      throw std::invalid_argument("request " + std::to_string(r.id) +
                                  ": arrival times must be non-decreasing");
    }
  }
}

std::vector<Request> load_trace(std::istream& in) {
  std::vector<Request> trace;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "arrival_s,prefill_tokens,decode_tokens,tag") {
        throw std::invalid_argument("trace line " + std::to_string(line_no) +
                                    ": expected header 'arrival_s,prefill_tokens,decode_tokens,tag'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_csv_line(line);
    const auto where = "trace line " + std::to_string(line_no);
    if (fields.size() != 4) throw std::invalid_argument(where + ": expected 4 fields");
    Request r;
    r.id = static_cast<std::int64_t>(trace.size());
    r.arrival_time = parse_double(fields[0], where);
    r.prefill_tokens = static_cast<std::int32_t>(parse_int(fields[1], where));
    r.decode_tokens = static_cast<std::int32_t>(parse_int(fields[2], where));
    try {
      r.workload_tag = parse_workload_tag(fields[3]);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
    if (r.prefill_tokens < 1 || r.decode_tokens < 1) {
      throw std::invalid_argument(where + ": token counts must be >= 1");
    }
    if (!trace.empty() && r.arrival_time < trace.back().arrival_time) {
      throw std::invalid_argument(where + ": arrival times must be non-decreasing");
    }
    trace.push_back(r);
  }
  validate_trace(trace);
  return trace;
}

std::vector<Request> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
  return load_trace(in);
}

}  // namespace windfleet
