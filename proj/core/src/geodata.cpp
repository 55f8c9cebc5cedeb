// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include "tricity/geodata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>

#include "tricity/parallel.hpp"

namespace tricity {

std::string crs_name(Crs crs) {
  switch (crs) {
    case Crs::WGS84: return "WGS84";
    case Crs::WebMercator: return "WebMercator";
    case Crs::Local: return "Local";
  }
  return "?";
}

Crs parse_crs(const std::string& s) {
  if (s == "WGS84" || s == "EPSG:4326") return Crs::WGS84;
  if (s == "WebMercator" || s == "EPSG:3857") return Crs::WebMercator;
  if (s == "Local") return Crs::Local;
  throw ConfigError("unknown CRS '" + s + "'");
}

Vec2 lonlat_to_mercator(double lon_deg, double lat_deg) {
  if (!(std::abs(lat_deg) <= kMaxMercatorLat))
    throw DomainError("latitude " + std::to_string(lat_deg) + " outside Web Mercator bounds");
  const double lat = deg2rad(lat_deg);
  return Vec2(kEarthRadius * deg2rad(lon_deg), kEarthRadius * std::log(std::tan(0.25 * kPi + 0.5 * lat)));
}

Vec2 mercator_to_lonlat(double x, double y) {
  return Vec2(rad2deg(x / kEarthRadius), rad2deg(2.0 * std::atan(std::exp(y / kEarthRadius)) - 0.5 * kPi));
}

double ground_sample_distance(double lat_deg, int zoom) {
  if (!(std::abs(lat_deg) <= kMaxMercatorLat))
    throw DomainError("latitude outside Web Mercator bounds");
  return kGsdZoom0 * std::cos(deg2rad(lat_deg)) / std::ldexp(1.0, zoom);
}

void GeoBBox::validate() const {
  if (!(min_lon < max_lon && min_lat < max_lat)) throw DomainError("bbox min must be below max");
  if (min_lat < -kMaxMercatorLat - 1e-9 || max_lat > kMaxMercatorLat + 1e-9)
    throw DomainError("bbox latitude outside Web Mercator bounds");
}

std::array<double, 4> estimate_bbox_mercator(double lat_deg, double lon_deg, int zoom, int px_w,
                                             int px_h) {
  if (px_w < 1 || px_h < 1) throw DomainError("image size must be positive");
  if (zoom < 0 || zoom > 30) throw DomainError("zoom must lie in [0, 30]");
  const Vec2 c = lonlat_to_mercator(lon_deg, lat_deg);
  // Projected meters per pixel; ground GSD is this times cos(lat).
  const double m_per_px = kGsdZoom0 / std::ldexp(1.0, zoom);
  const double hw = 0.5 * m_per_px * px_w, hh = 0.5 * m_per_px * px_h;
  return {c.x() - hw, c.y() - hh, c.x() + hw, c.y() + hh};
}

GeoBBox estimate_bbox(double lat_deg, double lon_deg, int zoom, int px_w, int px_h) {
  const auto m = estimate_bbox_mercator(lat_deg, lon_deg, zoom, px_w, px_h);
  const Vec2 lo = mercator_to_lonlat(m[0], m[1]);
  const Vec2 hi = mercator_to_lonlat(m[2], m[3]);
  return {lo.x(), lo.y(), hi.x(), hi.y()};
}

bool same_float_bits(float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); }

bool HeightGrid::is_nodata(float v) const {
  if (std::isnan(nodata)) return std::isnan(v);
  return v == nodata;
}

std::size_t HeightGrid::nodata_count() const {
  std::size_t n = 0;
  for (float v : values) n += is_nodata(v);
  return n;
}

double HeightGrid::coverage() const {
  if (values.empty()) return 0.0;
  return 1.0 - double(nodata_count()) / double(values.size());
}

Vec2 HeightGrid::pixel_to_crs(double col, double row) const {
  const auto& g = geotransform;
  return Vec2(g[0] + col * g[1] + row * g[2], g[3] + col * g[4] + row * g[5]);
}

Vec2 HeightGrid::crs_to_pixel(double x, double y) const {
  const auto& g = geotransform;
  const double det = g[1] * g[5] - g[2] * g[4];
  if (std::abs(det) < 1e-300) throw DomainError("geotransform is not invertible");
  const double dx = x - g[0], dy = y - g[3];
  return Vec2((g[5] * dx - g[2] * dy) / det, (-g[4] * dx + g[1] * dy) / det);
}

namespace {

Vec2 to_wgs84(Crs crs, const Vec2& p) {
  switch (crs) {
    case Crs::WGS84: return p;
    case Crs::WebMercator: return mercator_to_lonlat(p.x(), p.y());
    case Crs::Local: break;
  }
  throw DomainError("no conversion from the Local CRS to WGS84");
}

Vec2 from_mercator(Crs crs, double x, double y) {
  switch (crs) {
    case Crs::WebMercator: return Vec2(x, y);
    case Crs::WGS84: return mercator_to_lonlat(x, y);
    case Crs::Local: break;
  }
  throw DomainError("unsupported CRS pair: WebMercator -> Local");
}

}  // namespace

GeoBBox grid_bbox_wgs84(const HeightGrid& g) {
  GeoBBox b{1e300, 1e300, -1e300, -1e300};
  for (double c : {0.0, double(g.width)})
    for (double r : {0.0, double(g.height)}) {
      const Vec2 p = to_wgs84(g.crs, g.pixel_to_crs(c, r));
      b.min_lon = std::min(b.min_lon, p.x());
      b.max_lon = std::max(b.max_lon, p.x());
      b.min_lat = std::min(b.min_lat, p.y());
      b.max_lat = std::max(b.max_lat, p.y());
    }
  return b;
}

TileIndex TileIndex::build(std::vector<TileEntry> tiles) {
  TileIndex idx;
  for (const auto& t : tiles)
    if (t.crs == Crs::Local) throw DomainError("tile '" + t.path + "' has no CRS conversion");
  idx.tiles_ = std::move(tiles);
  if (idx.tiles_.empty()) return idx;
  GeoBBox u = idx.tiles_[0].bbox;
  for (const auto& t : idx.tiles_) {
    u.min_lon = std::min(u.min_lon, t.bbox.min_lon);
    u.min_lat = std::min(u.min_lat, t.bbox.min_lat);
    u.max_lon = std::max(u.max_lon, t.bbox.max_lon);
    u.max_lat = std::max(u.max_lat, t.bbox.max_lat);
  }
  idx.bounds_ = u;
  const int side = std::max(1, int(std::ceil(std::sqrt(double(idx.tiles_.size())))));
  idx.nx_ = idx.ny_ = side;
  idx.buckets_.assign(std::size_t(side) * side, {});
  for (std::size_t i = 0; i < idx.tiles_.size(); ++i) {
    const auto& b = idx.tiles_[i].bbox;
    auto cell = [&](double v, double lo, double hi, int n) {
      if (!(hi > lo)) return 0;
      return std::clamp(int((v - lo) / (hi - lo) * n), 0, n - 1);
    };
    const int x0 = cell(b.min_lon, u.min_lon, u.max_lon, side), x1 = cell(b.max_lon, u.min_lon, u.max_lon, side);
    const int y0 = cell(b.min_lat, u.min_lat, u.max_lat, side), y1 = cell(b.max_lat, u.min_lat, u.max_lat, side);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) idx.buckets_[std::size_t(y) * side + x].push_back(i);
  }
  return idx;
}

std::vector<std::size_t> TileIndex::query(const GeoBBox& q) const {
  std::vector<std::size_t> out;
  if (tiles_.empty() || !q.intersects(bounds_)) return out;
  const auto& u = bounds_;
  auto cell = [](double v, double lo, double hi, int n) {
    if (!(hi > lo)) return 0;
    return std::clamp(int((v - lo) / (hi - lo) * n), 0, n - 1);
  };
  const int x0 = cell(q.min_lon, u.min_lon, u.max_lon, nx_), x1 = cell(q.max_lon, u.min_lon, u.max_lon, nx_);
  const int y0 = cell(q.min_lat, u.min_lat, u.max_lat, ny_), y1 = cell(q.max_lat, u.min_lat, u.max_lat, ny_);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      for (std::size_t i : buckets_[std::size_t(y) * nx_ + x])
        if (tiles_[i].bbox.intersects(q)) out.push_back(i);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

HeightGrid reproject_bilinear(const HeightGrid& src, const std::array<double, 4>& t, int out_w,
                              int out_h) {
  if (out_w < 1 || out_h < 1) throw DomainError("reprojection target must be at least 1x1");
  if (src.crs == Crs::Local) throw DomainError("unsupported CRS pair: Local -> WebMercator");
  HeightGrid out(out_w, out_h, std::numeric_limits<float>::quiet_NaN());
  out.crs = Crs::WebMercator;
  out.units = src.units;
  const double dx = (t[2] - t[0]) / out_w, dy = (t[3] - t[1]) / out_h;
  out.geotransform = {t[0], dx, 0.0, t[3], 0.0, -dy};
  parallel_for(std::size_t(out_h), 8, [&](std::size_t, std::size_t rb, std::size_t re) {
    for (std::size_t r = rb; r < re; ++r) {
      for (int c = 0; c < out_w; ++c) {
        const double X = t[0] + (c + 0.5) * dx;
        const double Y = t[3] - (r + 0.5) * dy;
        const Vec2 s = from_mercator(src.crs, X, Y);
        const Vec2 px = src.crs_to_pixel(s.x(), s.y());
        if (!(px.x() >= 0.0 && px.x() <= src.width && px.y() >= 0.0 && px.y() <= src.height))
          continue;
        const double sc = std::clamp(px.x() - 0.5, 0.0, double(src.width - 1));
        const double sr = std::clamp(px.y() - 0.5, 0.0, double(src.height - 1));
        const int c0 = std::min(int(sc), src.width - 1), r0 = std::min(int(sr), src.height - 1);
        const int c1 = std::min(c0 + 1, src.width - 1), r1 = std::min(r0 + 1, src.height - 1);
        const double tc = sc - c0, tr = sr - r0;
        const int cs[4] = {c0, c1, c0, c1};
        const int rs[4] = {r0, r0, r1, r1};
        const double ws[4] = {(1 - tc) * (1 - tr), tc * (1 - tr), (1 - tc) * tr, tc * tr};
        double acc = 0.0;
        bool hole = false;
        for (int k = 0; k < 4; ++k) {
          if (ws[k] < 1e-9) continue;
          const float v = src.at(cs[k], rs[k]);
          if (src.is_nodata(v)) {
            hole = true;
            break;
          }
          acc += ws[k] * v;
        }
        if (!hole) out.at(c, int(r)) = static_cast<float>(acc);
      }
    }
  });
  return out;
}

const HeightGrid& select_best_coverage(const std::vector<HeightGrid>& candidates) {
  if (candidates.empty()) throw DomainError("select_best_coverage: no candidates");
  std::size_t best = 0;
  double best_cov = candidates[0].coverage();
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double c = candidates[i].coverage();
    if (c > best_cov) {
      best = i;
      best_cov = c;
    }
  }
  return candidates[best];
}

HeightGrid feet_to_meters(HeightGrid grid) {
  if (grid.units == VerticalUnits::Meters) return grid;
  for (float& v : grid.values)
    if (!grid.is_nodata(v)) v = static_cast<float>(double(v) * 0.3048);
  grid.units = VerticalUnits::Meters;
  return grid;
}

QcResult qc_nan(const HeightGrid& grid, double threshold_pct) {
  QcResult r;
  if (grid.values.empty()) {
    r.nan_percent = 100.0;
    return r;
  }
  r.nan_percent = 100.0 * double(grid.nodata_count()) / double(grid.values.size());
  r.accept = r.nan_percent <= threshold_pct;
  return r;
}

std::optional<ImageFootprintMeta> parse_image_name(const std::string& filename) {
  static const std::regex re(R"(^([-+]?\d+(?:\.\d+)?)_([-+]?\d+(?:\.\d+)?)_z(\d+)$)");
  const std::string stem = std::filesystem::path(filename).stem().string();
  std::smatch m;
  if (!std::regex_match(stem, m, re)) return std::nullopt;
  ImageFootprintMeta meta;
  meta.name = stem;
  meta.lat = std::stod(m[1].str());
  meta.lon = std::stod(m[2].str());
  meta.zoom = std::stoi(m[3].str());
  return meta;
}

std::string status_name(PrepareResult::Status s) {
  switch (s) {
    case PrepareResult::Status::Accepted: return "accepted";
    case PrepareResult::Status::Rejected: return "rejected";
    case PrepareResult::Status::NoCoverage: return "no_coverage";
    case PrepareResult::Status::Failed: return "failed";
  }
  return "?";
}

std::vector<PrepareResult> prepare_dsm(const std::vector<ImageFootprintMeta>& images,
                                       const std::vector<HeightGrid>& tiles,
                                       const std::vector<std::string>& labels,
                                       const PrepareOptions& opts) {
  if (labels.size() != tiles.size()) throw DomainError("prepare_dsm: one label per tile required");
  std::vector<TileEntry> entries;
  for (std::size_t i = 0; i < tiles.size(); ++i)
    entries.push_back({labels[i], grid_bbox_wgs84(tiles[i]), tiles[i].crs});
  const TileIndex index = TileIndex::build(std::move(entries));

  std::vector<PrepareResult> results(images.size());
  parallel_for(images.size(), 1, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const ImageFootprintMeta& img = images[i];
      PrepareResult& res = results[i];
      res.name = img.name;
      try {
        const GeoBBox target = estimate_bbox(img.lat, img.lon, img.zoom, img.width, img.height);
        const auto merc = estimate_bbox_mercator(img.lat, img.lon, img.zoom, img.width, img.height);
        const auto cand = index.query(target);
        if (cand.empty()) {
          res.status = PrepareResult::Status::NoCoverage;
          res.message = "no overlapping DSM tile";
          continue;
        }
        std::vector<HeightGrid> temps;
        for (std::size_t j : cand) temps.push_back(reproject_bilinear(tiles[j], merc, img.width, img.height));
        const HeightGrid& best_ref = select_best_coverage(temps);
        const std::size_t best = std::size_t(&best_ref - temps.data());
        HeightGrid best_dsm = feet_to_meters(best_ref);
        if (opts.mosaic) {
          std::vector<std::size_t> order;
          for (std::size_t j = 0; j < temps.size(); ++j)
            if (j != best) order.push_back(j);
          std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
            return temps[a].coverage() > temps[c].coverage();
          });
          for (std::size_t j : order) {
            const HeightGrid fill = feet_to_meters(temps[j]);
            for (std::size_t p = 0; p < best_dsm.values.size(); ++p)
              if (best_dsm.is_nodata(best_dsm.values[p]) && !fill.is_nodata(fill.values[p]))
                best_dsm.values[p] = fill.values[p];
          }
        }
        res.tile = labels[cand[best]];
        const QcResult qc = qc_nan(best_dsm, opts.nan_threshold_pct);
        res.nan_percent = qc.nan_percent;
        if (qc.accept) {
          res.status = PrepareResult::Status::Accepted;
          res.dsm = std::move(best_dsm);
        } else {
          res.status = PrepareResult::Status::Rejected;
          res.message = "insufficient DSM coverage";
        }
      } catch (const std::exception& ex) {
        res.status = PrepareResult::Status::Failed;
        res.message = ex.what();
      }
    }
  });
  return results;
}

std::vector<PrepareResult> prepare_dsm(const std::vector<ImageFootprintMeta>& images,
                                       const std::vector<std::filesystem::path>& tile_paths,
                                       const PrepareOptions& opts) {
  std::vector<HeightGrid> tiles;
  std::vector<std::string> labels;
  for (const auto& p : tile_paths) {
    tiles.push_back(load_grid(p));
    labels.push_back(p.string());
  }
  return prepare_dsm(images, tiles, labels, opts);
}

// ESRI ASCII grid. Nodata cells are read back as NaN.
HeightGrid read_ascii_grid(const std::filesystem::path& path, Crs crs) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  int ncols = -1, nrows = -1;
  double x = 0, y = 0, cell = 0;
  bool center = false;
  std::optional<double> nodata;
  std::string key;
  for (int i = 0; i < 6; ++i) {
    const auto pos = is.tellg();
    if (!(is >> key)) break;
    std::string k = key;
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
    if (k == "ncols") is >> ncols;
    else if (k == "nrows") is >> nrows;
    else if (k == "xllcorner") is >> x;
    else if (k == "yllcorner") is >> y;
    else if (k == "xllcenter") { is >> x; center = true; }
    else if (k == "yllcenter") { is >> y; center = true; }
    else if (k == "cellsize") is >> cell;
    else if (k == "nodata_value") { double v; is >> v; nodata = v; }
    else { is.seekg(pos); break; }
    if (!is) throw FormatError(path.string() + ": malformed header field " + key);
  }
  if (ncols < 1 || nrows < 1 || !(cell > 0.0)) throw FormatError(path.string() + ": incomplete ASCII grid header");
  if (center) {
    x -= 0.5 * cell;
    y -= 0.5 * cell;
  }
  HeightGrid g(ncols, nrows);
  g.crs = crs;
  g.geotransform = {x, cell, 0.0, y + nrows * cell, 0.0, -cell};
  for (float& v : g.values) {
    double d;
    if (!(is >> d)) throw FormatError(path.string() + ": truncated ASCII grid body");
    v = (nodata && d == *nodata) ? std::numeric_limits<float>::quiet_NaN() : static_cast<float>(d);
  }
  return g;
}

void write_ascii_grid(const HeightGrid& g, const std::filesystem::path& path) {
  const auto& gt = g.geotransform;
  if (gt[2] != 0.0 || gt[4] != 0.0 || std::abs(gt[1] + gt[5]) > 1e-12 * std::abs(gt[1]))
    throw DomainError("ESRI ASCII grids need square, north-up pixels");
  std::ofstream os(path);
  if (!os) throw IoError("cannot create " + path.string());
  const double nd = -9999.0;
  os << std::setprecision(17) << "ncols " << g.width << "\nnrows " << g.height << "\nxllcorner "
     << gt[0] << "\nyllcorner " << gt[3] + g.height * gt[5] << "\ncellsize " << gt[1]
     << "\nNODATA_value " << nd << "\n";
  os << std::setprecision(9);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const float v = g.at(c, r);
      if (c) os << ' ';
      if (g.is_nodata(v)) os << nd;
      else os << v;
    }
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

// Float grid: text header terminated by "end", then little-endian float32.
HeightGrid read_float_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "FGRID 1") throw FormatError(path.string() + ": not an FGRID file");
  HeightGrid g;
  int w = -1, h = -1, ch = 1;
  bool ended = false;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k == "end") {
      ended = true;
      break;
    }
    if (k == "width") ss >> w;
    else if (k == "height") ss >> h;
    else if (k == "channels") ss >> ch;
    else if (k == "geotransform") for (double& v : g.geotransform) ss >> v;
    else if (k == "crs") { std::string s; ss >> s; g.crs = parse_crs(s); }
    else if (k == "nodata") {
      std::string s;
      ss >> s;
      g.nodata = s == "nan" ? std::numeric_limits<float>::quiet_NaN() : std::stof(s);
    } else if (k == "units") {
      std::string s;
      ss >> s;
      if (s == "meters") g.units = VerticalUnits::Meters;
      else if (s == "feet") g.units = VerticalUnits::Feet;
      else throw FormatError(path.string() + ": unknown units " + s);
    } else if (!k.empty()) {
      throw FormatError(path.string() + ": unknown header key " + k);
    }
    if (ss.fail()) throw FormatError(path.string() + ": malformed header line '" + line + "'");
  }
  if (!ended || w < 1 || h < 1) throw FormatError(path.string() + ": incomplete FGRID header");
  if (ch != 1) throw FormatError(path.string() + ": only single-channel grids are supported");
  g.width = w;
  g.height = h;
  g.values.resize(std::size_t(w) * h);
  for (float& v : g.values) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError(path.string() + ": truncated FGRID body");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 4);
    std::memcpy(&v, b, 4);
  }
  return g;
}

void write_float_grid(const HeightGrid& g, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot create " + path.string());
  os << "FGRID 1\nwidth " << g.width << "\nheight " << g.height << "\nchannels 1\ngeotransform";
  os << std::setprecision(17);
  for (double v : g.geotransform) os << ' ' << v;
  os << "\ncrs " << crs_name(g.crs) << "\nnodata ";
  if (std::isnan(g.nodata)) os << "nan";
  else os << std::setprecision(9) << g.nodata;
  os << "\nunits " << (g.units == VerticalUnits::Meters ? "meters" : "feet") << "\nend\n";
  for (float v : g.values) {
    unsigned char b[4];
    std::memcpy(b, &v, 4);
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 4);
    os.write(reinterpret_cast<const char*>(b), 4);
  }
  if (!os) throw IoError("failed writing " + path.string());
}

namespace {

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

}  // namespace

HeightGrid load_grid(const std::filesystem::path& path) {
  const std::string e = lower_ext(path);
  if (e == ".tif" || e == ".tiff") return read_geotiff(path);
  if (e == ".asc") return read_ascii_grid(path);
  if (e == ".fgrid") return read_float_grid(path);
  throw FormatError(path.string() + ": unknown grid format '" + e + "'");
}

void save_grid(const HeightGrid& grid, const std::filesystem::path& path) {
  const std::string e = lower_ext(path);
  if (e == ".tif" || e == ".tiff") return write_geotiff(grid, path);
  if (e == ".asc") return write_ascii_grid(grid, path);
  if (e == ".fgrid") return write_float_grid(grid, path);
  throw FormatError(path.string() + ": unknown grid format '" + e + "'");
}

}  // namespace tricity
