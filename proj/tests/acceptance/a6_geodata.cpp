// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <sstream>

#include "acceptance.hpp"
#include "tricity/geodata.hpp"

namespace tricity::acceptance {
namespace {

constexpr double kR = 6378137.0;
constexpr double kLon0 = -74.010, kLat0 = 40.700;
constexpr double kAmp = 20.0, kWx = 0.004, kWy = 0.005;  // degrees
constexpr double kCell = 2e-5;                            // tile pixel, degrees

double elevation(double lon, double lat) {
  return 100.0 + kAmp * std::sin(2 * kPi * (lon - kLon0) / kWx) * std::cos(2 * kPi * (lat - kLat0) / kWy);
}

// Bilinear error bound h^2/8 (|f_xx| + |f_yy|) with h the tile pixel size.
double bilinear_bound() {
  const double fxx = kAmp * std::pow(2 * kPi / kWx, 2), fyy = kAmp * std::pow(2 * kPi / kWy, 2);
  return kCell * kCell / 8.0 * (fxx + fyy);
}

HeightGrid analytic_tile(double lon_min, double lat_min, int n, bool feet) {
  HeightGrid g(n, n);
  g.crs = Crs::WGS84;
  g.geotransform = {lon_min, kCell, 0.0, lat_min + n * kCell, 0.0, -kCell};
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double v = elevation(lon_min + (c + 0.5) * kCell, lat_min + n * kCell - (r + 0.5) * kCell);
      g.at(c, r) = float(feet ? v / 0.3048 : v);
    }
  if (feet) g.units = VerticalUnits::Feet;
  return g;
}

Vec2 merc_to_lonlat(double x, double y) {
  return {x / kR * 180.0 / kPi, (2.0 * std::atan(std::exp(y / kR)) - kPi / 2) * 180.0 / kPi};
}

// Web Mercator tile on the image lattice, covering `cols` of its columns.
HeightGrid coverage_tile(const ImageFootprintMeta& img, int cols) {
  const auto b = estimate_bbox_mercator(img.lat, img.lon, img.zoom, img.width, img.height);
  const double dx = (b[2] - b[0]) / img.width, dy = (b[3] - b[1]) / img.height;
  HeightGrid g(cols, img.height + 20, 10.0f);
  g.crs = Crs::WebMercator;
  g.geotransform = {b[0], dx, 0.0, b[3] + 10 * dy, 0.0, -dy};
  return g;
}

}  // namespace

Outcome run_a6(const Options&) {
  std::ostringstream m;
  bool pass = true;

  // Four overlapping 0.003 deg tiles on a 0.002 deg pitch; the last in feet.
  const int n = 150;
  std::vector<HeightGrid> tiles;
  std::vector<std::string> labels;
  for (int t = 0; t < 4; ++t) {
    tiles.push_back(analytic_tile(kLon0 + (t % 2) * 0.002, kLat0 + (t / 2) * 0.002, n, t == 3));
    labels.push_back("tile" + std::to_string(t) + (t == 3 ? "_ft" : ""));
  }
  std::vector<ImageFootprintMeta> imgs;
  const double centers[][2] = {{0.0010, 0.0010}, {0.0025, 0.0012}, {0.0040, 0.0040},
                               {0.0012, 0.0038}, {0.0026, 0.0026}, {0.0041, 0.0009}};
  for (const auto& c : centers) {
    ImageFootprintMeta im;
    im.lon = kLon0 + c[0];
    im.lat = kLat0 + c[1];
    im.zoom = 18;
    im.width = im.height = 128;
    im.name = "img" + std::to_string(imgs.size());
    imgs.push_back(im);
  }

  // QC pair far from the analytic tiles, each with its own mercator tile.
  ImageFootprintMeta q5;
  q5.lat = 35.0;
  q5.lon = 139.0;
  q5.zoom = 19;
  q5.width = q5.height = 100;
  q5.name = "nodata5";
  ImageFootprintMeta q6 = q5;
  q6.lon = 139.01;
  q6.name = "nodata6";
  tiles.push_back(coverage_tile(q5, 95));
  labels.push_back("cov95");
  tiles.push_back(coverage_tile(q6, 94));
  labels.push_back("cov94");
  imgs.push_back(q5);
  imgs.push_back(q6);

  const auto res = prepare_dsm(imgs, tiles, labels);
  const double bound = bilinear_bound();
  double worst_mae = 0.0;
  bool feet_used = false, all_ok = true;
  for (std::size_t i = 0; i < 6; ++i) {
    const PrepareResult& r = res[i];
    if (r.status != PrepareResult::Status::Accepted || !r.dsm) {
      all_ok = false;
      m << r.name << " " << status_name(r.status) << " " << r.message << "; ";
      continue;
    }
    feet_used |= r.tile == "tile3_ft";
    const HeightGrid& g = *r.dsm;
    double sum = 0.0;
    for (int y = 0; y < g.height; ++y)
      for (int x = 0; x < g.width; ++x) {
        const Vec2 p = g.pixel_to_crs(x + 0.5, y + 0.5);
        const Vec2 ll = merc_to_lonlat(p.x(), p.y());
        sum += std::abs(double(g.at(x, y)) - elevation(ll.x(), ll.y()));
      }
    worst_mae = std::max(worst_mae, sum / double(g.size()));
  }
  pass &= all_ok && feet_used && worst_mae <= bound;
  m << "analytic-world max MAE=" << worst_mae << " m (bilinear bound " << bound << " m), feet tile "
    << (feet_used ? "selected" : "NOT selected");

  // Feet conversion is exactly x0.3048.
  const HeightGrid meters = feet_to_meters(tiles[3]);
  bool exact = meters.units == VerticalUnits::Meters;
  for (std::size_t i = 0; i < meters.values.size(); ++i)
    exact &= meters.values[i] == float(double(tiles[3].values[i]) * 0.3048);
  pass &= exact;
  m << "; feet x0.3048 " << (exact ? "exact" : "MISMATCH");

  const PrepareResult& r5 = res[6];
  const PrepareResult& r6 = res[7];
  const bool qc = r5.status == PrepareResult::Status::Accepted && r5.nan_percent == 5.0 &&
                  r6.status == PrepareResult::Status::Rejected && r6.nan_percent == 6.0;
  pass &= qc;
  m << "; nodata " << r5.nan_percent << "% -> " << status_name(r5.status) << ", " << r6.nan_percent
    << "% -> " << status_name(r6.status);

  // Corners sit ~1e6 m from the origin, so widths carry rounding of the
  // corner coordinates; allow a few ulps of those rather than of the width.
  double worst_ratio = 0.0;
  bool zoom_ok = true;
  for (int z = 10; z < 21; ++z)
    for (double lat : {-60.0, 0.0, 40.7, 71.0}) {
      const auto a = estimate_bbox_mercator(lat, 12.5, z, 512, 384);
      const auto b = estimate_bbox_mercator(lat, 12.5, z + 1, 512, 384);
      for (int ax = 0; ax < 2; ++ax) {
        const double wa = a[ax + 2] - a[ax], wb = b[ax + 2] - b[ax];
        const double scale = std::max(std::abs(a[ax]), std::abs(a[ax + 2]));
        const double tol = 8.0 * std::numeric_limits<double>::epsilon() * scale;
        zoom_ok &= std::abs(wa - 2.0 * wb) <= tol;
        worst_ratio = std::max(worst_ratio, std::abs(wa / wb - 2.0));
      }
    }
  pass &= zoom_ok;
  m << "; zoom z/z+1 extent ratio max |r-2|=" << worst_ratio << " (width diff within 8 ulp of corners: " << (zoom_ok ? "yes" : "no") << ")";
  return {pass, m.str()};
}

}  // namespace tricity::acceptance
