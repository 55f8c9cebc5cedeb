// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal GeoTIFF: little-endian, one band of float32, uncompressed, strips
// or tiles, georeferenced by ModelPixelScale + ModelTiepoint.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <sstream>

#include "tricity/geodata.hpp"

namespace tricity {

namespace {

enum Tag : std::uint16_t {
  kImageWidth = 256,
  kImageLength = 257,
  kBitsPerSample = 258,
  kCompression = 259,
  kPhotometric = 262,
  kStripOffsets = 273,
  kSamplesPerPixel = 277,
  kRowsPerStrip = 278,
  kStripByteCounts = 279,
  kPlanarConfig = 284,
  kPredictor = 317,
  kTileWidth = 322,
  kTileLength = 323,
  kTileOffsets = 324,
  kTileByteCounts = 325,
  kSampleFormat = 339,
  kModelPixelScale = 33550,
  kModelTiepoint = 33922,
  kModelTransformation = 34264,
  kGeoKeyDirectory = 34735,
  kGdalNodata = 42113,
};

template <typename T>
T swap_bytes(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  std::reverse(b, b + sizeof(T));
  std::memcpy(&v, b, sizeof(T));
  return v;
}

enum Type : std::uint16_t { kByte = 1, kAscii = 2, kShort = 3, kLong = 4, kRational = 5, kFloat = 11, kDouble = 12 };

std::size_t type_size(std::uint16_t t) {
  switch (t) {
    case kByte: case kAscii: return 1;
    case kShort: return 2;
    case kLong: case kFloat: return 4;
    case kRational: case kDouble: return 8;
    default: return 0;
  }
}

class Reader {
 public:
  Reader(std::vector<unsigned char> buf, std::string name) : b_(std::move(buf)), name_(std::move(name)) {}

  template <typename T>
  T read(std::size_t off) const {
    if (off > b_.size() || b_.size() - off < sizeof(T))
      throw FormatError(name_ + ": truncated TIFF (read past end at offset " + std::to_string(off) + ")");
    T v;
    std::memcpy(&v, b_.data() + off, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) v = swap_bytes(v);
    return v;
  }
  std::size_t size() const { return b_.size(); }
  const std::string& name() const { return name_; }

 private:
  std::vector<unsigned char> b_;
  std::string name_;
};

struct Entry {
  std::uint16_t type = 0;
  std::uint32_t count = 0;
  std::size_t offset = 0;  // where the values live
};

std::vector<double> values_of(const Reader& r, const Entry& e) {
  std::vector<double> v(e.count);
  for (std::uint32_t i = 0; i < e.count; ++i) {
    const std::size_t o = e.offset + i * type_size(e.type);
    switch (e.type) {
      case kByte: v[i] = r.read<std::uint8_t>(o); break;
      case kShort: v[i] = r.read<std::uint16_t>(o); break;
      case kLong: v[i] = r.read<std::uint32_t>(o); break;
      case kFloat: v[i] = std::bit_cast<float>(r.read<std::uint32_t>(o)); break;
      case kDouble: v[i] = std::bit_cast<double>(r.read<std::uint64_t>(o)); break;
      case kRational: v[i] = double(r.read<std::uint32_t>(o)) / r.read<std::uint32_t>(o + 4); break;
      default: throw FormatError(r.name() + ": unsupported TIFF field type " + std::to_string(e.type));
    }
  }
  return v;
}

std::string ascii_of(const Reader& r, const Entry& e) {
  std::string s;
  for (std::uint32_t i = 0; i < e.count; ++i) {
    const char c = static_cast<char>(r.read<std::uint8_t>(e.offset + i));
    if (c == '\0') break;
    s.push_back(c);
  }
  return s;
}

}  // namespace

HeightGrid read_geotiff(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const Reader r(std::move(buf), path.string());
  const std::string& name = r.name();
  if (r.size() < 8) throw FormatError(name + ": truncated TIFF header");
  const auto order = r.read<std::uint16_t>(0);
  if (order == 0x4D4D) throw FormatError(name + ": big-endian TIFF; pre-convert required (byte order MM)");
  if (order != 0x4949) throw FormatError(name + ": not a TIFF file");
  const auto magic = r.read<std::uint16_t>(2);
  if (magic == 43) throw FormatError(name + ": BigTIFF; pre-convert required");
  if (magic != 42) throw FormatError(name + ": bad TIFF magic");
  const std::size_t ifd = r.read<std::uint32_t>(4);
  const std::uint16_t n = r.read<std::uint16_t>(ifd);
  std::map<std::uint16_t, Entry> tags;
  for (std::uint16_t i = 0; i < n; ++i) {
    const std::size_t o = ifd + 2 + std::size_t(i) * 12;
    Entry e;
    const auto tag = r.read<std::uint16_t>(o);
    e.type = r.read<std::uint16_t>(o + 2);
    e.count = r.read<std::uint32_t>(o + 4);
    const std::size_t bytes = type_size(e.type) * e.count;
    e.offset = bytes <= 4 ? o + 8 : r.read<std::uint32_t>(o + 8);
    if (type_size(e.type) && e.offset + bytes > r.size())
      throw FormatError(name + ": truncated TIFF (tag " + std::to_string(tag) + " data past end)");
    tags[tag] = e;
  }
  r.read<std::uint32_t>(ifd + 2 + std::size_t(n) * 12);  // next-IFD offset must be present
  auto get = [&](std::uint16_t tag) -> std::optional<std::vector<double>> {
    auto it = tags.find(tag);
    if (it == tags.end()) return std::nullopt;
    return values_of(r, it->second);
  };
  auto scalar = [&](std::uint16_t tag, double dflt) {
    const auto v = get(tag);
    return v && !v->empty() ? (*v)[0] : dflt;
  };
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) throw FormatError(name + ": unsupported " + what + "; pre-convert required");
  };

  const int W = int(scalar(kImageWidth, 0)), H = int(scalar(kImageLength, 0));
  if (W < 1 || H < 1) throw FormatError(name + ": missing image dimensions");
  const double comp = scalar(kCompression, 1);
  require(comp == 1, "Compression=" + std::to_string(int(comp)));
  const double spp = scalar(kSamplesPerPixel, 1);
  require(spp == 1, "SamplesPerPixel=" + std::to_string(int(spp)));
  const double bps = scalar(kBitsPerSample, 1);
  require(bps == 32, "BitsPerSample=" + std::to_string(int(bps)));
  const double fmt = scalar(kSampleFormat, 1);
  require(fmt == 3, "SampleFormat=" + std::to_string(int(fmt)));
  const double pred = scalar(kPredictor, 1);
  require(pred == 1, "Predictor=" + std::to_string(int(pred)));
  const double planar = scalar(kPlanarConfig, 1);
  require(planar == 1, "PlanarConfiguration=" + std::to_string(int(planar)));
  require(!tags.count(kModelTransformation), "ModelTransformation tag");

  HeightGrid g(W, H);
  auto copy_block = [&](std::size_t off, std::size_t bytes, int x0, int y0, int bw, int bh) {
    if (off + bytes > r.size()) throw FormatError(name + ": truncated TIFF (pixel data past end)");
    if (bytes < std::size_t(bw) * bh * 4) throw FormatError(name + ": short pixel block");
    for (int y = 0; y < bh; ++y)
      for (int x = 0; x < bw; ++x) {
        const int gx = x0 + x, gy = y0 + y;
        if (gx >= W || gy >= H) continue;
        g.at(gx, gy) = std::bit_cast<float>(r.read<std::uint32_t>(off + (std::size_t(y) * bw + x) * 4));
      }
  };
  if (tags.count(kTileOffsets)) {
    const int tw = int(scalar(kTileWidth, 0)), th = int(scalar(kTileLength, 0));
    if (tw < 1 || th < 1) throw FormatError(name + ": missing tile size");
    const auto offs = *get(kTileOffsets);
    const auto counts = get(kTileByteCounts);
    const int across = (W + tw - 1) / tw, down = (H + th - 1) / th;
    if (offs.size() < std::size_t(across) * down) throw FormatError(name + ": too few tile offsets");
    for (int ty = 0; ty < down; ++ty)
      for (int tx = 0; tx < across; ++tx) {
        const std::size_t k = std::size_t(ty) * across + tx;
        const std::size_t bytes = counts && k < counts->size() ? std::size_t((*counts)[k]) : std::size_t(tw) * th * 4;
        copy_block(std::size_t(offs[k]), bytes, tx * tw, ty * th, tw, th);
      }
  } else if (tags.count(kStripOffsets)) {
    const int rps = int(std::min<double>(scalar(kRowsPerStrip, H), H));
    const auto offs = *get(kStripOffsets);
    const auto counts = get(kStripByteCounts);
    const int strips = (H + rps - 1) / rps;
    if (offs.size() < std::size_t(strips)) throw FormatError(name + ": too few strip offsets");
    for (int s = 0; s < strips; ++s) {
      const int rows = std::min(rps, H - s * rps);
      const std::size_t bytes = counts && std::size_t(s) < counts->size() ? std::size_t((*counts)[s]) : std::size_t(W) * rows * 4;
      copy_block(std::size_t(offs[s]), bytes, 0, s * rps, W, rows);
    }
  } else {
    throw FormatError(name + ": no strip or tile offsets");
  }

  const auto scale = get(kModelPixelScale);
  const auto tie = get(kModelTiepoint);
  bool pixel_is_point = false;
  g.crs = Crs::Local;
  if (const auto keys = get(kGeoKeyDirectory); keys && keys->size() >= 4) {
    const std::size_t nk = std::size_t((*keys)[3]);
    for (std::size_t k = 0; k < nk && 4 + 4 * k + 3 < keys->size(); ++k) {
      const int id = int((*keys)[4 + 4 * k]);
      const int loc = int((*keys)[4 + 4 * k + 1]);
      const int val = int((*keys)[4 + 4 * k + 3]);
      if (loc != 0) continue;  // values stored elsewhere are not needed here
      if (id == 1025) pixel_is_point = val == 2;
      else if (id == 2048 && val == 4326) g.crs = Crs::WGS84;
      else if (id == 3072 && (val == 3857 || val == 900913)) g.crs = Crs::WebMercator;
      else if (id == 3072 || id == 2048) {
        if (val != 32767) throw FormatError(name + ": unsupported CRS code " + std::to_string(val) + "; pre-convert required");
      } else if (id == 4099) {
        if (val == 9002 || val == 9003) g.units = VerticalUnits::Feet;
        else if (val == 9001) g.units = VerticalUnits::Meters;
      }
    }
  }
  if (scale && tie && scale->size() >= 2 && tie->size() >= 6) {
    const double sx = (*scale)[0], sy = (*scale)[1];
    const double I = (*tie)[0], J = (*tie)[1], X = (*tie)[3], Y = (*tie)[4];
    g.geotransform = {X - I * sx, sx, 0.0, Y + J * sy, 0.0, -sy};
    if (pixel_is_point) {
      g.geotransform[0] -= 0.5 * sx;
      g.geotransform[3] += 0.5 * sy;
    }
  }
  if (auto it = tags.find(kGdalNodata); it != tags.end()) {
    const std::string s = ascii_of(r, it->second);
    try {
      g.nodata = (s == "nan" || s == "NaN") ? std::numeric_limits<float>::quiet_NaN() : std::stof(s);
    } catch (const std::exception&) {
      throw FormatError(name + ": bad GDAL_NODATA value '" + s + "'");
    }
  }
  return g;
}

namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    if constexpr (std::endian::native == std::endian::big) v = swap_bytes(v);
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
  }
  void put_f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void align() {
    if (buf.size() % 2) buf.push_back(0);
  }
  std::vector<unsigned char> buf;
};

struct OutTag {
  std::uint16_t tag;
  std::uint16_t type;
  std::uint32_t count;
  std::vector<unsigned char> data;  // raw little-endian values
};

template <typename T>
std::vector<unsigned char> raw(const std::vector<T>& v) {
  Writer w;
  for (T x : v) {
    if constexpr (std::is_same_v<T, double>) w.put_f64(x);
    else w.put(x);
  }
  return w.buf;
}

}  // namespace

void write_geotiff(const HeightGrid& g, const std::filesystem::path& path, bool tiled,
                   int tile_size) {
  if (g.width < 1 || g.height < 1) throw DomainError("cannot write an empty grid");
  const auto& gt = g.geotransform;
  if (gt[2] != 0.0 || gt[4] != 0.0) throw DomainError("GeoTIFF writer needs a north-up geotransform");
  if (tiled && (tile_size < 16 || tile_size % 16)) throw DomainError("tile size must be a multiple of 16");

  Writer w;
  w.put<std::uint16_t>(0x4949);
  w.put<std::uint16_t>(42);
  w.put<std::uint32_t>(0);  // IFD offset, patched below

  // Pixel blocks.
  std::vector<std::uint32_t> offsets, counts;
  auto emit_block = [&](int x0, int y0, int bw, int bh) {
    w.align();
    offsets.push_back(std::uint32_t(w.buf.size()));
    for (int y = 0; y < bh; ++y)
      for (int x = 0; x < bw; ++x) {
        const int gx = x0 + x, gy = y0 + y;
        w.put_f32(gx < g.width && gy < g.height ? g.at(gx, gy) : 0.0f);
      }
    counts.push_back(std::uint32_t(bw) * bh * 4);
  };
  int rps = g.height;
  if (tiled) {
    for (int ty = 0; ty < g.height; ty += tile_size)
      for (int tx = 0; tx < g.width; tx += tile_size) emit_block(tx, ty, tile_size, tile_size);
  } else {
    rps = std::max(1, std::min(g.height, 8192 / (4 * g.width)));
    for (int y = 0; y < g.height; y += rps) emit_block(0, y, g.width, std::min(rps, g.height - y));
  }

  std::vector<OutTag> tags;
  auto add_short = [&](std::uint16_t t, std::vector<std::uint16_t> v) {
    tags.push_back({t, kShort, std::uint32_t(v.size()), raw(v)});
  };
  auto add_long = [&](std::uint16_t t, std::vector<std::uint32_t> v) {
    tags.push_back({t, kLong, std::uint32_t(v.size()), raw(v)});
  };
  add_long(kImageWidth, {std::uint32_t(g.width)});
  add_long(kImageLength, {std::uint32_t(g.height)});
  add_short(kBitsPerSample, {32});
  add_short(kCompression, {1});
  add_short(kPhotometric, {1});
  if (!tiled) {
    add_long(kStripOffsets, offsets);
    add_short(kSamplesPerPixel, {1});
    add_long(kRowsPerStrip, {std::uint32_t(rps)});
    add_long(kStripByteCounts, counts);
  } else {
    add_short(kSamplesPerPixel, {1});
  }
  add_short(kPlanarConfig, {1});
  if (tiled) {
    add_long(kTileWidth, {std::uint32_t(tile_size)});
    add_long(kTileLength, {std::uint32_t(tile_size)});
    add_long(kTileOffsets, offsets);
    add_long(kTileByteCounts, counts);
  }
  add_short(kSampleFormat, {3});
  tags.push_back({kModelPixelScale, kDouble, 3, raw(std::vector<double>{gt[1], -gt[5], 0.0})});
  tags.push_back({kModelTiepoint, kDouble, 6, raw(std::vector<double>{0, 0, 0, gt[0], gt[3], 0})});
  std::vector<std::uint16_t> keys = {1, 1, 0, 0};
  auto key = [&](std::uint16_t id, std::uint16_t v) { keys.insert(keys.end(), {id, 0, 1, v}); };
  switch (g.crs) {
    case Crs::WebMercator: key(1024, 1); key(1025, 1); key(3072, 3857); break;
    case Crs::WGS84: key(1024, 2); key(1025, 1); key(2048, 4326); break;
    case Crs::Local: key(1024, 32767); key(1025, 1); break;
  }
  key(4099, g.units == VerticalUnits::Feet ? 9002 : 9001);
  keys[3] = std::uint16_t((keys.size() - 4) / 4);
  add_short(kGeoKeyDirectory, keys);
  {
    std::ostringstream ss;
    if (std::isnan(g.nodata)) ss << "nan";
    else ss << std::setprecision(9) << g.nodata;
    std::string s = ss.str();
    std::vector<unsigned char> d(s.begin(), s.end());
    d.push_back(0);
    tags.push_back({kGdalNodata, kAscii, std::uint32_t(d.size()), d});
  }
  std::sort(tags.begin(), tags.end(), [](const OutTag& a, const OutTag& b) { return a.tag < b.tag; });

  // Out-of-line tag data, then the IFD.
  std::vector<std::uint32_t> data_off(tags.size(), 0);
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].data.size() <= 4) continue;
    w.align();
    data_off[i] = std::uint32_t(w.buf.size());
    w.buf.insert(w.buf.end(), tags[i].data.begin(), tags[i].data.end());
  }
  w.align();
  const std::uint32_t ifd = std::uint32_t(w.buf.size());
  w.put<std::uint16_t>(std::uint16_t(tags.size()));
  for (std::size_t i = 0; i < tags.size(); ++i) {
    w.put<std::uint16_t>(tags[i].tag);
    w.put<std::uint16_t>(tags[i].type);
    w.put<std::uint32_t>(tags[i].count);
    if (tags[i].data.size() <= 4) {
      unsigned char inl[4] = {0, 0, 0, 0};
      std::copy(tags[i].data.begin(), tags[i].data.end(), inl);
      w.buf.insert(w.buf.end(), inl, inl + 4);
    } else {
      w.put<std::uint32_t>(data_off[i]);
    }
  }
  w.put<std::uint32_t>(0);
  std::memcpy(w.buf.data() + 4, &ifd, 4);
  if constexpr (std::endian::native == std::endian::big) std::reverse(w.buf.begin() + 4, w.buf.begin() + 8);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot create " + path.string());
  os.write(reinterpret_cast<const char*>(w.buf.data()), std::streamsize(w.buf.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace tricity
