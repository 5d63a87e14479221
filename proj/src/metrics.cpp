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

#include "windfleet/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "windfleet/csv.hpp"
#include "windfleet/stats.hpp"

namespace windfleet {

double percentile(std::span<const double> values, double p) {
  return nearest_rank_percentile(values, p);
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kE2e: return "e2e";
    case Metric::kQueue: return "queue";
    case Metric::kTtft: return "ttft";
    case Metric::kTbt: return "tbt";
  }
  return "?";
}

Metric parse_metric(std::string_view text) {
  for (Metric m : kAllMetrics) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown metric '" + std::string(text) +
                              "' (expected e2e, queue, ttft or tbt)");
}

std::vector<double> metric_values(std::span<const RequestRecord> records, Metric metric) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    switch (metric) {
      case Metric::kE2e: out.push_back(r.e2e()); break;
      case Metric::kQueue: out.push_back(r.queue_time()); break;
      case Metric::kTtft: out.push_back(r.ttft()); break;
      case Metric::kTbt: out.push_back(r.mean_tbt()); break;
    }
  }
  return out;
}

const MetricRow& Summary::row(Metric metric) const {
  for (const auto& r : rows) {
    if (r.metric == metric) return r;
  }
  throw std::out_of_range("summary has no row for " + std::string(to_string(metric)));
}

Summary summarize(std::span<const RequestRecord> records) {
  Summary s;
  s.count = records.size();
  if (records.empty()) return s;
  s.empty = false;
  for (Metric m : kAllMetrics) {
    auto values = metric_values(records, m);
    std::sort(values.begin(), values.end());
    s.rows.push_back({m, nearest_rank_sorted(values, 95.0), nearest_rank_sorted(values, 99.0),
                      nearest_rank_sorted(values, 99.9), mean(values)});
  }
  return s;
}

std::string format_summary(const Summary& summary) {
  if (summary.empty) return "(no requests)\n";
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "%-8s %12s %12s %12s %12s\n", "metric", "p95_s", "p99_s",
                "p99.9_s", "mean_s");
  os << "requests: " << summary.count << '\n' << line;
  for (const auto& r : summary.rows) {
    std::snprintf(line, sizeof line, "%-8s %12.4f %12.4f %12.4f %12.4f\n",
                  std::string(to_string(r.metric)).c_str(), r.p95, r.p99, r.p999, r.mean);
    os << line;
  }
  return os.str();
}

void write_summary_csv(const Summary& summary, std::ostream& out) {
  out << "metric,p95_s,p99_s,p999_s,mean_s\n";
  for (const auto& r : summary.rows) {
    out << to_string(r.metric) << ',' << format_double(r.p95) << ',' << format_double(r.p99) << ','
        << format_double(r.p999) << ',' << format_double(r.mean) << '\n';
  }
}

std::vector<CdfPoint> cdf(std::span<const RequestRecord> records, Metric metric) {
  auto values = metric_values(records, metric);
  std::sort(values.begin(), values.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    // Collapse ties onto their last rank.
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

void write_cdf_csv(std::span<const CdfPoint> points, std::ostream& out) {
  out << "value_s,fraction\n";
  for (const auto& p : points) out << format_double(p.value) << ',' << format_double(p.fraction) << '\n';
}

void export_cdf(std::span<const RequestRecord> records, Metric metric,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto points = cdf(records, metric);
  write_cdf_csv(points, out);
}

std::vector<RequestRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("records: missing header");
  std::vector<RequestRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = "records line " + std::to_string(lineno);
    if (f.size() != 11) throw std::invalid_argument(where + ": expected 11 fields");
    RequestRecord r;
    r.request.id = parse_int(f[0], where);
    r.request.arrival_time = parse_double(f[1], where);
    r.request.prefill_tokens = static_cast<std::int32_t>(parse_int(f[2], where));
    r.request.decode_tokens = static_cast<std::int32_t>(parse_int(f[3], where));
    r.request.workload_tag = parse_workload_tag(f[4]);
    r.site_id = static_cast<int>(parse_int(f[5], where));
    r.instance_id = static_cast<int>(parse_int(f[6], where));
    r.enqueue_time = parse_double(f[7], where);
    r.dequeue_time = parse_double(f[8], where);
    r.first_token_time = parse_double(f[9], where);
    r.completion_time = parse_double(f[10], where);
    out.push_back(r);
  }
  return out;
}

std::vector<RequestRecord> load_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_records_csv(in);
}

namespace {

std::string run_label(const std::filesystem::path& dir) {
  const auto manifest = dir / "manifest.json";
  std::ifstream in(manifest);
  if (in) {
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_discarded() && j.contains("controller") && j.contains("router")) {
      return j["controller"].get<std::string>() + "/" + j["router"].get<std::string>();
    }
  }
  return dir.filename().string();
}

}  // namespace

std::vector<ComparisonRow> compare(const std::vector<std::filesystem::path>& run_dirs) {
  if (run_dirs.empty()) throw std::invalid_argument("compare needs at least one run directory");
  std::vector<ComparisonRow> rows;
  for (const auto& dir : run_dirs) {
    const auto records = load_records_csv(dir / "records.csv");
    rows.push_back({run_label(dir), dir, summarize(records)});
  }
  auto key = [](const ComparisonRow& r) {
    return r.summary.empty ? std::numeric_limits<double>::infinity()
                           : r.summary.row(Metric::kE2e).p99;
  };
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const auto& a, const auto& b) { return key(a) < key(b); });
  return rows;
}

std::string format_comparison(std::span<const ComparisonRow> rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %12s %12s %12s %12s\n", "run", "p95_e2e_s", "p99_e2e_s",
                "p99.9_e2e_s", "p99_queue_s");
  os << line;
  for (const auto& r : rows) {
    if (r.summary.empty) {
      std::snprintf(line, sizeof line, "%-24s %12s\n", r.label.c_str(), "(no requests)");
    } else {
      const auto& e = r.summary.row(Metric::kE2e);
      std::snprintf(line, sizeof line, "%-24s %12.4f %12.4f %12.4f %12.4f\n", r.label.c_str(),
                    e.p95, e.p99, e.p999, r.summary.row(Metric::kQueue).p99);
    }
    os << line;
  }
  return os.str();
}

}  // namespace windfleet
