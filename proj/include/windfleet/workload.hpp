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
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "windfleet/core_types.hpp"

namespace windfleet {

enum class WorkloadType { kCoding, kConversation, kMixed };

std::string_view to_string(WorkloadType type);
WorkloadType parse_workload_type(std::string_view text);

// Log-normal token-length distribution clamped to [min, max].
struct LengthDistribution {
  double mu = 0.0;
  double sigma = 1.0;
  std::int32_t min = 1;
  std::int32_t max = 1;
};

struct LengthProfile {
  LengthDistribution prefill;
  LengthDistribution decode;
};

LengthProfile default_coding_lengths();
LengthProfile default_conversation_lengths();

struct WorkloadSpec {
  double rps = 1.0;
  Seconds duration = 0.0;
  WorkloadType type = WorkloadType::kConversation;
  LengthProfile coding = default_coding_lengths();
  LengthProfile conversation = default_conversation_lengths();
  std::uint64_t seed = 1;
};

// Poisson arrivals over [0, duration). Never consults simulation state.
std::vector<Request> generate_trace(const WorkloadSpec& spec);

// Text format: header `arrival_s,prefill_tokens,decode_tokens,tag`, one
// request per line. Request ids are the zero-based line order.
void save_trace(const std::vector<Request>& trace, std::ostream& out);
void save_trace(const std::vector<Request>& trace, const std::string& path);
std::vector<Request> load_trace(std::istream& in);
std::vector<Request> load_trace(const std::string& path);

// Checks token counts and arrival ordering; throws std::invalid_argument.
void validate_trace(const std::vector<Request>& trace);

}  // namespace windfleet
