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
#include <string>
#include <string_view>
#include <vector>

namespace windfleet {

// Shortest representation that parses back to the same double.
std::string format_double(double value);

std::vector<std::string> split_csv_line(std::string_view line);

// Both throw std::invalid_argument prefixed with `where`.
double parse_double(std::string_view text, const std::string& where);
std::int64_t parse_int(std::string_view text, const std::string& where);

std::string sha256_hex(std::string_view data);

}  // namespace windfleet
