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

#include "windfleet/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "windfleet/csv.hpp"
#include "windfleet/stats.hpp"

namespace windfleet {

CappedSeries percentile_cap(const std::vector<double>& series, double p) {
  CappedSeries out;
  out.cap = nearest_rank_percentile(series, p);
  out.values.reserve(series.size());
  for (double v : series) out.values.push_back(std::min(v, out.cap));
  return out;
}

std::vector<AvailabilityPoint> availability_curve(const std::vector<GenerationSeries>& sites,
                                                  const std::vector<double>& percentiles,
                                                  double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must be in (0, 1]");
  if (sites.empty()) throw std::invalid_argument("availability_curve needs at least one series");
  const std::size_t length = sites.front().values.size();
  for (const auto& s : sites) {
    if (s.values.size() != length) {
      throw std::invalid_argument("series '" + s.label + "' is not aligned with the others");
    }
  }
  if (length == 0) throw std::invalid_argument("availability_curve needs non-empty series");

  std::vector<AvailabilityPoint> out;
  for (double p : percentiles) {
    std::vector<double> aggregate(length, 0.0);
    double provisioned = 0.0;
    for (const auto& s : sites) {
      const auto capped = percentile_cap(s.values, p);
      provisioned += capped.cap;
      for (std::size_t t = 0; t < length; ++t) aggregate[t] += capped.values[t];
    }
    const double threshold = theta * provisioned;
    std::size_t above = 0;
    for (double a : aggregate) {
      // Relative slack so that exact equality survives summation order.
      if (a >= threshold - 1e-12 * std::max(1.0, std::abs(threshold))) ++above;
    }
    out.push_back({p, static_cast<double>(above) / static_cast<double>(length)});
  }
  return out;
}

double cov(const std::vector<double>& series) {
  const double m = mean(series);
  if (!(m > 0.0)) throw std::invalid_argument("coefficient of variation needs a positive mean");
  return stddev(series) / m;
}

double cov_reduction(const std::vector<GenerationSeries>& sites) {
  if (sites.empty()) throw std::invalid_argument("cov_reduction needs at least one series");
  const std::size_t length = sites.front().values.size();
  std::vector<double> aggregate(length, 0.0);
  double member_cov = 0.0;
  for (const auto& s : sites) {
    if (s.values.size() != length) {
      throw std::invalid_argument("series '" + s.label + "' is not aligned with the others");
    }
    member_cov += cov(s.values);
    for (std::size_t t = 0; t < length; ++t) aggregate[t] += s.values[t];
  }
  member_cov /= static_cast<double>(sites.size());
  if (member_cov == 0.0) return 0.0;
  return 1.0 - cov(aggregate) / member_cov;
}

double lag1_autocorr(const std::vector<double>& series) {
  if (series.size() < 3) throw std::invalid_argument("lag-1 autocorrelation needs >= 3 samples");
  const std::size_t n = series.size() - 1;
  double mx = 0.0, my = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    mx += series[t];
    my += series[t + 1];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double dx = series[t] - mx;
    const double dy = series[t + 1] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw std::invalid_argument("lag-1 autocorrelation needs non-zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
  const double rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat_deg - a.lat_deg) * rad;
  const double dlon = (b.lon_deg - a.lon_deg) * rad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat_deg * rad) * std::cos(b.lat_deg * rad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double fiber_rtt(const GeoPoint& a, const GeoPoint& b, double path_stretch,
                 double refractive_index) {
  for (const auto* p : {&a, &b}) {
    if (std::abs(p->lat_deg) > 90.0 || std::abs(p->lon_deg) > 180.0) {
      throw std::invalid_argument("latitude/longitude out of range");
    }
  }
  const double one_way_s =
      haversine_km(a, b) * path_stretch / (kSpeedOfLightKmPerS / refractive_index);
  return 2.0 * one_way_s * 1000.0;
}

std::vector<GenerationSeries> load_series_csv(std::istream& in) {
  std::vector<GenerationSeries> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const auto where = "series line " + std::to_string(line_no);
    if (out.empty()) {
      if (fields.size() < 2) throw std::invalid_argument(where + ": need 'time' plus site columns");
      for (std::size_t i = 1; i < fields.size(); ++i) out.push_back({fields[i], {}});
      continue;
    }
    if (fields.size() != out.size() + 1) {
      throw std::invalid_argument(where + ": expected " + std::to_string(out.size() + 1) +
                                  " fields");
    }
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const double v = parse_double(fields[i], where);
      if (v < 0.0) throw std::invalid_argument(where + ": generation must be non-negative");
      out[i - 1].values.push_back(v);
    }
  }
  return out;
}

std::vector<GenerationSeries> load_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open series file '" + path + "'");
  return load_series_csv(in);
}

void save_series_csv(const std::vector<GenerationSeries>& sites, std::ostream& out) {
  out << "time";
  for (const auto& s : sites) out << ',' << s.label;
  out << '\n';
  const std::size_t length = sites.empty() ? 0 : sites.front().values.size();
  for (std::size_t t = 0; t < length; ++t) {
    out << t;
    for (const auto& s : sites) out << ',' << format_double(s.values.at(t));
    out << '\n';
  }
}

std::vector<LabeledPoint> load_coordinates_csv(std::istream& in) {
  std::vector<LabeledPoint> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = "coordinates line " + std::to_string(line_no);
    if (!header_seen) {
      if (line != "label,lat,lon") throw std::invalid_argument(where + ": expected 'label,lat,lon'");
      header_seen = true;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) throw std::invalid_argument(where + ": expected 3 fields");
    out.push_back({fields[0], {parse_double(fields[1], where), parse_double(fields[2], where)}});
  }
  return out;
}

std::vector<LabeledPoint> load_coordinates_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open coordinates file '" + path + "'");
  return load_coordinates_csv(in);
}

std::vector<double> synthetic_ar1(std::size_t n, double phi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> out;
  out.reserve(n);
  // Start from the stationary distribution.
  double x = noise(rng) / std::sqrt(std::max(1e-12, 1.0 - phi * phi));
  for (std::size_t t = 0; t < n; ++t) {
    out.push_back(x);
    x = phi * x + noise(rng);
  }
  return out;
}

std::vector<GenerationSeries> synthetic_wind_sites(int sites, std::size_t length, double phi,
                                                   double cross_correlation,
                                                   std::uint64_t seed) {
  if (sites < 1) throw std::invalid_argument("need at least one site");
  const double k = static_cast<double>(sites);
  if (cross_correlation <= -1.0 / (k - 1.0 + 1e-12) && sites > 1) {
    throw std::invalid_argument("cross-site correlation too negative for this many sites");
  }
  if (cross_correlation >= 1.0) throw std::invalid_argument("cross-site correlation must be < 1");

  // Equicorrelated innovations: e_s = a * z_s + b * mean(z), with a and b
  // solved so that var(e_s) = 1 and corr(e_s, e_t) = rho.
  const double rho = cross_correlation;
  const double a = std::sqrt(1.0 - rho);
  const double b = sites > 1 ? (-a + std::sqrt(a * a + k * rho)) : 0.0;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double stationary = 1.0 / std::sqrt(std::max(1e-12, 1.0 - phi * phi));
  std::vector<double> state(static_cast<std::size_t>(sites), 0.0);
  std::vector<double> z(static_cast<std::size_t>(sites));
  auto innovations = [&] {
    double zbar = 0.0;
    for (double& v : z) {
      v = noise(rng);
      zbar += v;
    }
    zbar /= k;
    std::vector<double> e(z.size());
    for (std::size_t s = 0; s < z.size(); ++s) e[s] = a * z[s] + b * zbar;
    return e;
  };

  auto e0 = innovations();
  for (std::size_t s = 0; s < state.size(); ++s) state[s] = e0[s] * stationary;

  std::vector<GenerationSeries> out;
  for (int s = 0; s < sites; ++s) out.push_back({"site" + std::to_string(s), {}});
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t s = 0; s < state.size(); ++s) {
      // Latent standardized wind speed -> power curve with cut-in and rated
      // speed, giving values in [0, 1].
      const double speed = 8.0 + 3.0 * state[s] / stationary;
      const double x = std::clamp((speed - 3.0) / (12.0 - 3.0), 0.0, 1.0);
      out[s].values.push_back(x * x * x);
    }
    const auto e = innovations();
    for (std::size_t s = 0; s < state.size(); ++s) state[s] = phi * state[s] + e[s];
  }
  return out;
}

}  // namespace windfleet
