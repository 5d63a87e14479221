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
#include <utility>
#include <vector>

namespace windfleet {

// Generation of one site at a uniform interval (e.g. hourly).
struct GenerationSeries {
  std::string label;
  std::vector<double> values;
};

struct CappedSeries {
  std::vector<double> values;
  double cap = 0.0;
};

// Caps every value at the series' nearest-rank p-th percentile.
CappedSeries percentile_cap(const std::vector<double>& series, double p);

struct AvailabilityPoint {
  double percentile = 0.0;
  double availability = 0.0;
};

// For each p: cap every site at its own p-th percentile, sum across sites, and
// report the fraction of timesteps whose aggregate reaches theta times the
// summed caps.
std::vector<AvailabilityPoint> availability_curve(const std::vector<GenerationSeries>& sites,
                                                  const std::vector<double>& percentiles,
                                                  double theta);

// Population stddev over mean; throws for a non-positive mean.
double cov(const std::vector<double>& series);

// 1 - cov(sum of members) / mean(cov of members).
double cov_reduction(const std::vector<GenerationSeries>& sites);

// Pearson correlation of consecutive samples.
double lag1_autocorr(const std::vector<double>& series);

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kSpeedOfLightKmPerS = 299792.458;

double haversine_km(const GeoPoint& a, const GeoPoint& b);

// Round trip over fiber: 2 * distance * stretch / (c / n), in milliseconds.
double fiber_rtt(const GeoPoint& a, const GeoPoint& b, double path_stretch = 1.5,
                 double refractive_index = 1.468);

// Wide CSV: header 'time,<label>...', one row per timestep.
std::vector<GenerationSeries> load_series_csv(std::istream& in);
std::vector<GenerationSeries> load_series_csv(const std::string& path);
void save_series_csv(const std::vector<GenerationSeries>& sites, std::ostream& out);

struct LabeledPoint {
  std::string label;
  GeoPoint point;
};

// CSV 'label,lat,lon'.
std::vector<LabeledPoint> load_coordinates_csv(std::istream& in);
std::vector<LabeledPoint> load_coordinates_csv(const std::string& path);

// Seeded AR(1) Gaussian series with the given lag-1 coefficient.
std::vector<double> synthetic_ar1(std::size_t n, double phi, std::uint64_t seed);

// Wind-like sites: AR(1) latent weather with a shared cross-site correlation
// mapped through a cubic power curve into [0, 1]. A negative correlation
// yields complementary sites.
std::vector<GenerationSeries> synthetic_wind_sites(int sites, std::size_t length, double phi,
                                                   double cross_correlation, std::uint64_t seed);

}  // namespace windfleet
