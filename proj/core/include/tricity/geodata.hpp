// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tricity/common.hpp"

namespace tricity {

enum class Crs { WGS84, WebMercator, Local };
enum class VerticalUnits { Meters, Feet };

std::string crs_name(Crs crs);
Crs parse_crs(const std::string& s);

/// Spherical Web Mercator (EPSG:3857) constants and conversions.
inline constexpr double kEarthRadius = 6378137.0;
inline constexpr double kMaxMercatorLat = 85.051128779806604;  // atan(sinh(pi)) in degrees
inline constexpr double kGsdZoom0 = 156543.03392;              // m/px at the equator, zoom 0

Vec2 lonlat_to_mercator(double lon_deg, double lat_deg);
Vec2 mercator_to_lonlat(double x, double y);

/// Ground sample distance (m/px) at latitude and zoom.
double ground_sample_distance(double lat_deg, int zoom);

struct GeoBBox {
  double min_lon = 0, min_lat = 0, max_lon = 0, max_lat = 0;

  void validate() const;
  bool intersects(const GeoBBox& o) const {
    return min_lon <= o.max_lon && o.min_lon <= max_lon && min_lat <= o.max_lat &&
           o.min_lat <= max_lat;
  }
};

/// Footprint of a px_w x px_h Web Mercator image centered at (lat, lon).
/// Half-extents are GSD * px / 2 ground meters, i.e. (156543.03392 / 2^zoom) *
/// px / 2 projected meters, converted back to WGS84 exactly.
GeoBBox estimate_bbox(double lat_deg, double lon_deg, int zoom, int px_w, int px_h);

/// Same footprint in Web Mercator meters: {min_x, min_y, max_x, max_y}.
std::array<double, 4> estimate_bbox_mercator(double lat_deg, double lon_deg, int zoom, int px_w,
                                             int px_h);

/// Georeferenced single-band raster. geotransform maps pixel-corner
/// coordinates (col, row) to CRS coordinates:
///   X = gt[0] + col*gt[1] + row*gt[2],  Y = gt[3] + col*gt[4] + row*gt[5].
struct HeightGrid {
  int width = 0;
  int height = 0;
  std::array<double, 6> geotransform{0, 1, 0, 0, 0, -1};
  Crs crs = Crs::Local;
  VerticalUnits units = VerticalUnits::Meters;
  float nodata = std::numeric_limits<float>::quiet_NaN();
  std::vector<float> values;

  HeightGrid() = default;
  HeightGrid(int w, int h, float fill = 0.0f)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t size() const { return values.size(); }
  float& at(int col, int row) { return values[static_cast<std::size_t>(row) * width + col]; }
  float at(int col, int row) const { return values[static_cast<std::size_t>(row) * width + col]; }

  /// nodata compares by bit pattern when NaN, by equality otherwise.
  bool is_nodata(float v) const;
  std::size_t nodata_count() const;
  double coverage() const;  // fraction of non-nodata pixels

  Vec2 pixel_to_crs(double col, double row) const;
  Vec2 crs_to_pixel(double x, double y) const;  // throws if not invertible
};

/// Bit-level nodata helper shared by readers.
bool same_float_bits(float a, float b);

/// Spatial index over tile bounding boxes (all in one CRS).
struct TileEntry {
  std::string path;
  GeoBBox bbox;  // in WGS84 degrees
  Crs crs = Crs::WGS84;
};

class TileIndex {
 public:
  TileIndex() = default;
  /// Throws DomainError for tiles whose CRS has no conversion to WGS84.
  static TileIndex build(std::vector<TileEntry> tiles);

  /// Tiles whose boxes intersect `query` (closed intersection), in
  /// insertion order.
  std::vector<std::size_t> query(const GeoBBox& query) const;
  const std::vector<TileEntry>& tiles() const { return tiles_; }

 private:
  // Uniform bucket grid over the union of tile boxes.
  std::vector<TileEntry> tiles_;
  GeoBBox bounds_{};
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<std::size_t>> buckets_;
};

/// Footprint of a grid in WGS84 degrees (Local CRS is rejected).
GeoBBox grid_bbox_wgs84(const HeightGrid& g);

/// Target lattice: out_w x out_h Web Mercator pixels over `target_merc`
/// ({min_x, min_y, max_x, max_y}). Each target pixel center is converted to the
/// source CRS and bilinearly sampled between source pixel centers; taps with
/// non-zero weight on nodata propagate nodata; centers outside the source
/// footprint are nodata; the outer half-pixel band clamps to edge pixels.
HeightGrid reproject_bilinear(const HeightGrid& src, const std::array<double, 4>& target_merc,
                              int out_w, int out_h);

/// Maximum coverage wins; ties keep the first candidate.
const HeightGrid& select_best_coverage(const std::vector<HeightGrid>& candidates);

/// Multiplies non-nodata values by 0.3048 and marks the grid as meters.
/// A grid already in meters is returned unchanged.
HeightGrid feet_to_meters(HeightGrid grid);

struct QcResult {
  bool accept = false;
  double nan_percent = 0.0;
};
QcResult qc_nan(const HeightGrid& grid, double threshold_pct = 5.0);

// Raster I/O. Format chosen by extension: .tif/.tiff (GeoTIFF subset),
// .asc (ESRI ASCII grid), .fgrid (float grid with text header).
HeightGrid load_grid(const std::filesystem::path& path);
void save_grid(const HeightGrid& grid, const std::filesystem::path& path);

HeightGrid read_geotiff(const std::filesystem::path& path);
void write_geotiff(const HeightGrid& grid, const std::filesystem::path& path,
                   bool tiled = false, int tile_size = 16);
HeightGrid read_ascii_grid(const std::filesystem::path& path, Crs crs = Crs::WGS84);
void write_ascii_grid(const HeightGrid& grid, const std::filesystem::path& path);
HeightGrid read_float_grid(const std::filesystem::path& path);
void write_float_grid(const HeightGrid& grid, const std::filesystem::path& path);

/// Parses "<lat>_<lon>_z<zoom>" from an image file stem.
struct ImageFootprintMeta {
  std::string name;
  double lat = 0.0, lon = 0.0;
  int zoom = 0;
  int width = 0, height = 0;
};
std::optional<ImageFootprintMeta> parse_image_name(const std::string& filename);

struct PrepareResult {
  std::string name;
  enum class Status { Accepted, Rejected, NoCoverage, Failed } status = Status::Failed;
  double nan_percent = 100.0;
  std::string tile;   // chosen tile path
  std::string message;
  std::optional<HeightGrid> dsm;  // set when accepted
};

std::string status_name(PrepareResult::Status s);

struct PrepareOptions {
  double nan_threshold_pct = 5.0;
  /// Extension: fill nodata of the best tile from the other
  /// candidates (in coverage order) before QC. Off by default.
  bool mosaic = false;
};

/// DSM ground-truth preparation: footprint, candidate lookup, bilinear
/// reprojection, best coverage, unit conversion, NaN quality control.
std::vector<PrepareResult> prepare_dsm(const std::vector<ImageFootprintMeta>& images,
                                       const std::vector<std::filesystem::path>& tile_paths,
                                       const PrepareOptions& opts = {});
/// Same pipeline over in-memory tiles (paths are labels only).
std::vector<PrepareResult> prepare_dsm(const std::vector<ImageFootprintMeta>& images,
                                       const std::vector<HeightGrid>& tiles,
                                       const std::vector<std::string>& labels,
                                       const PrepareOptions& opts = {});

}  // namespace tricity
