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

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "windfleet/core_types.hpp"

namespace windfleet {

double percentile(std::span<const double> values, double p);

enum class Metric { kE2e, kQueue, kTtft, kTbt };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

inline constexpr std::array<Metric, 4> kAllMetrics{Metric::kE2e, Metric::kQueue, Metric::kTtft,
                                                   Metric::kTbt};

std::vector<double> metric_values(std::span<const RequestRecord> records, Metric metric);

struct MetricRow {
  Metric metric = Metric::kE2e;
  double p95 = 0.0;
  double p99 = 0.0;
  double p999 = 0.0;
  double mean = 0.0;
};

struct Summary {
  bool empty = true;
  std::size_t count = 0;
  std::vector<MetricRow> rows;

  const MetricRow& row(Metric metric) const;
};

Summary summarize(std::span<const RequestRecord> records);

// Plain-text table; an empty summary prints a single marker line.
std::string format_summary(const Summary& summary);
void write_summary_csv(const Summary& summary, std::ostream& out);

struct CdfPoint {
  double value;
  double fraction;
};

std::vector<CdfPoint> cdf(std::span<const RequestRecord> records, Metric metric);
void write_cdf_csv(std::span<const CdfPoint> points, std::ostream& out);
void export_cdf(std::span<const RequestRecord> records, Metric metric,
                const std::filesystem::path& path);

std::vector<RequestRecord> read_records_csv(std::istream& in);
std::vector<RequestRecord> load_records_csv(const std::filesystem::path& path);

struct ComparisonRow {
  std::string label;
  std::filesystem::path dir;
  Summary summary;
};

// Loads records.csv from each run directory and sorts ascending by P99 E2E.
// The label comes from the run manifest when one is present.
std::vector<ComparisonRow> compare(const std::vector<std::filesystem::path>& run_dirs);
std::string format_comparison(std::span<const ComparisonRow> rows);

}  // namespace windfleet
