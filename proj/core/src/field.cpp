// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include "tricity/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace tricity {

std::string_view group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::Planes: return "planes";
    case ParamGroup::Decoder: return "decoder";
    case ParamGroup::Sky: return "sky";
    case ParamGroup::Codes: return "codes";
  }
  return "?";
}

std::vector<double>& ParamSet::group(ParamGroup g) {
  switch (g) {
    case ParamGroup::Planes: return planes;
    case ParamGroup::Decoder: return decoder;
    case ParamGroup::Sky: return sky;
    case ParamGroup::Codes: break;
  }
  return codes;
}

const std::vector<double>& ParamSet::group(ParamGroup g) const {
  return const_cast<ParamSet*>(this)->group(g);
}

ParamSet ParamSet::zeros_like() const {
  ParamSet z;
  for (ParamGroup g : kAllGroups) z.group(g).assign(group(g).size(), 0.0);
  return z;
}

void ParamSet::set_zero() {
  for (ParamGroup g : kAllGroups) std::fill(group(g).begin(), group(g).end(), 0.0);
}

bool ParamSet::same_shape(const ParamSet& o) const {
  for (ParamGroup g : kAllGroups)
    if (group(g).size() != o.group(g).size()) return false;
  return true;
}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (ParamGroup g : kAllGroups) n += group(g).size();
  return n;
}

void ParamSet::axpy(double scale, const ParamSet& o) {
  if (!same_shape(o)) throw DomainError("ParamSet::axpy shape mismatch");
  for (ParamGroup g : kAllGroups) {
    auto& a = group(g);
    const auto& b = o.group(g);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
  }
}

void ParamSet::check_finite(std::string_view what) const {
  for (ParamGroup g : kAllGroups) {
    const auto& v = group(g);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i]))
        throw NumericError(std::string(what) + ": non-finite value in group '" +
                           std::string(group_name(g)) + "' at index " + std::to_string(i));
    }
  }
}

double effective_extent(double base_side, int token_grid, int pad_tokens) {
  return base_side * (1.0 + 2.0 * pad_tokens / static_cast<double>(token_grid));
}

bool SceneExtent::contains(const Vec3& x) const {
  const Vec3 a = lo(), b = hi();
  return x.x() >= a.x() && x.x() <= b.x() && x.y() >= a.y() && x.y() <= b.y() &&
         x.z() >= a.z() && x.z() <= b.z();
}

void SceneExtent::validate() const {
  if (!(base_side > 0.0)) throw ConfigError("scene extent L must be positive");
  if (token_grid <= 0) throw ConfigError("token grid H_t must be positive");
  if (pad_tokens < 0) throw ConfigError("pad tokens N must be non-negative");
}

void FieldShape::validate() const {
  if (res < 2) throw ConfigError("field res must be >= 2");
  if (channels < 1 || hidden < 1 || code_dim < 0)
    throw ConfigError("field channels/hidden must be >= 1 and code_dim >= 0");
  if (sky_h < 1 || sky_w < 1) throw ConfigError("sky grid must be at least 1x1");
  if (n_codes < 1) throw ConfigError("field needs at least one illumination code");
}

TriPlaneField::TriPlaneField(const FieldShape& shape, const SceneExtent& extent)
    : shape_(shape), extent_(extent) {
  shape_.validate();
  extent_.validate();
  params_.planes.assign(3 * std::size_t(shape_.res) * shape_.res * shape_.channels, 0.0);
  params_.decoder.assign(decoder_layout().size(), 0.0);
  params_.sky.assign(std::size_t(shape_.sky_h) * shape_.sky_w * 3, 0.0);
  params_.codes.assign(std::size_t(shape_.n_codes) * shape_.code_dim, 0.0);
}

int TriPlaneField::pad_cells() const {
  const double frac = extent_.pad_tokens / double(extent_.token_grid + 2 * extent_.pad_tokens);
  return static_cast<int>(std::lround(shape_.res * frac));
}

TriPlaneField TriPlaneField::create(const FieldShape& shape, const SceneExtent& extent,
                                    std::mt19937_64& rng, const FieldInit& init) {
  TriPlaneField f(shape, extent);
  const int res = shape.res;
  const int pad = f.pad_cells();
  auto in_band = [&](int i) { return i < pad || i >= res - pad; };
  std::normal_distribution<double> plane_noise(0.0, init.plane_std);
  for (int p = 0; p < 3; ++p) {
    for (int r = 0; r < res; ++r) {
      for (int c = 0; c < res; ++c) {
        // XY pads both axes; XZ/YZ pad only their horizontal axis.
        const bool border = p == 0 ? (in_band(r) || in_band(c)) : in_band(c);
        const std::size_t base = f.plane_index(p, r, c);
        for (int k = 0; k < shape.channels; ++k)
          f.params_.planes[base + k] = border ? 0.0 : plane_noise(rng);
      }
    }
  }
  const DecoderLayout L = f.decoder_layout();
  auto& dec = f.params_.decoder;
  std::normal_distribution<double> w1(0.0, 1.0 / std::sqrt(double(shape.channels)));
  std::normal_distribution<double> wd(0.0, 1.0 / std::sqrt(double(shape.hidden)));
  std::normal_distribution<double> wc(0.0, 1.0 / std::sqrt(double(shape.hidden + shape.code_dim)));
  for (std::size_t i = L.w1(); i < L.b1(); ++i) dec[i] = w1(rng);
  for (std::size_t i = L.wd(); i < L.bd(); ++i) dec[i] = wd(rng);
  dec[L.bd()] = init.density_bias;
  for (std::size_t i = L.wc(); i < L.bc(); ++i) dec[i] = wc(rng);
  std::fill(f.params_.sky.begin(), f.params_.sky.end(), init.sky_value);
  return f;
}

std::span<const double> TriPlaneField::code(int view) const {
  if (view < 0 || view >= shape_.n_codes) throw DomainError("illumination code index out of range");
  return std::span<const double>(params_.codes).subspan(std::size_t(view) * shape_.code_dim,
                                                         shape_.code_dim);
}

namespace {

struct AxisTap {
  int i0, i1;
  double t;
};

AxisTap axis_tap(double n, int res) {
  const double s = n * res - 0.5;
  if (s <= 0.0) return {0, 0, 0.0};
  if (s >= res - 1) return {res - 1, res - 1, 0.0};
  const int i0 = static_cast<int>(s);
  return {i0, i0 + 1, s - i0};
}

}  // namespace

PlaneStencil plane_stencil(const TriPlaneField& field, const Vec3& x) {
  PlaneStencil st;
  const SceneExtent& e = field.extent();
  const double side = e.side();
  const Vec3 n = (x - e.lo()) / side;
  if (!(n.x() >= 0.0 && n.x() <= 1.0 && n.y() >= 0.0 && n.y() <= 1.0 && n.z() >= 0.0 &&
        n.z() <= 1.0))
    return st;
  st.inside = true;
  const int res = field.shape().res;
  const AxisTap tx = axis_tap(n.x(), res), ty = axis_tap(n.y(), res), tz = axis_tap(n.z(), res);
  // (col axis, row axis) per plane.
  const AxisTap* cols[3] = {&tx, &tx, &ty};
  const AxisTap* rows[3] = {&ty, &tz, &tz};
  for (int p = 0; p < 3; ++p) {
    const AxisTap& c = *cols[p];
    const AxisTap& r = *rows[p];
    const int k = 4 * p;
    st.offset[k + 0] = field.plane_index(p, r.i0, c.i0);
    st.offset[k + 1] = field.plane_index(p, r.i0, c.i1);
    st.offset[k + 2] = field.plane_index(p, r.i1, c.i0);
    st.offset[k + 3] = field.plane_index(p, r.i1, c.i1);
    st.weight[k + 0] = (1.0 - r.t) * (1.0 - c.t);
    st.weight[k + 1] = (1.0 - r.t) * c.t;
    st.weight[k + 2] = r.t * (1.0 - c.t);
    st.weight[k + 3] = r.t * c.t;
  }
  return st;
}

void sample_triplane(const TriPlaneField& field, const PlaneStencil& st, std::span<double> h) {
  const int C = field.shape().channels;
  std::fill(h.begin(), h.begin() + C, 0.0);
  if (!st.inside) return;
  const double* planes = field.params().planes.data();
  for (int k = 0; k < 12; ++k) {
    const double w = st.weight[k];
    if (w == 0.0) continue;
    const double* cell = planes + st.offset[k];
    for (int c = 0; c < C; ++c) h[c] += w * cell[c];
  }
}

void sample_triplane(const TriPlaneField& field, const Vec3& x, std::span<double> h) {
  sample_triplane(field, plane_stencil(field, x), h);
}

namespace {

void trunk_forward(const TriPlaneField& field, std::span<const double> h, DecodeCache& out) {
  const DecoderLayout L = field.decoder_layout();
  const double* dec = field.params().decoder.data();
  const double* w1 = dec + L.w1();
  const double* b1 = dec + L.b1();
  const double* wd = dec + L.wd();
  double dens = dec[L.bd()];
  for (int j = 0; j < L.hidden; ++j) {
    const double* row = w1 + std::size_t(j) * L.channels;
    double a = b1[j];
    for (int i = 0; i < L.channels; ++i) a += row[i] * h[i];
    out.pre[j] = a;
    const double z = softplus(a);
    out.trunk[j] = z;
    dens += wd[j] * z;
  }
  out.density_pre = dens;
  out.sigma = softplus(dens);
}

}  // namespace

double decode_density(const TriPlaneField& field, std::span<const double> h, DecodeCache& out) {
  trunk_forward(field, h, out);
  return out.sigma;
}

void decode(const TriPlaneField& field, std::span<const double> h, std::span<const double> w,
            DecodeCache& out) {
  trunk_forward(field, h, out);
  const DecoderLayout L = field.decoder_layout();
  const double* dec = field.params().decoder.data();
  const std::size_t in = std::size_t(L.hidden + L.code_dim);
  for (int k = 0; k < 3; ++k) {
    const double* row = dec + L.wc() + k * in;
    double a = dec[L.bc() + k];
    for (int j = 0; j < L.hidden; ++j) a += row[j] * out.trunk[j];
    for (int j = 0; j < L.code_dim; ++j) a += row[L.hidden + j] * w[j];
    out.rgb[k] = sigmoid(a);
  }
}

void decode_backward(const TriPlaneField& field, std::span<const double> h,
                     std::span<const double> w, const DecodeCache& cache, double d_sigma,
                     const std::array<double, 3>& d_rgb, std::span<double> grad_decoder,
                     std::span<double> dh, std::span<double> dw) {
  const DecoderLayout L = field.decoder_layout();
  const double* dec = field.params().decoder.data();
  double* g = grad_decoder.data();
  const std::size_t in = std::size_t(L.hidden + L.code_dim);

  // Trunk output gradient; hidden <= a few hundred so a small stack buffer suffices.
  constexpr int kMaxHidden = 512;
  if (L.hidden > kMaxHidden) throw DomainError("decoder hidden width exceeds 512");
  double d_trunk[kMaxHidden];

  const double d_dens = d_sigma * sigmoid(cache.density_pre);
  g[L.bd()] += d_dens;
  for (int j = 0; j < L.hidden; ++j) {
    g[L.wd() + j] += d_dens * cache.trunk[j];
    d_trunk[j] = d_dens * dec[L.wd() + j];
  }
  if (!dw.empty()) std::fill(dw.begin(), dw.begin() + L.code_dim, 0.0);
  for (int k = 0; k < 3; ++k) {
    if (d_rgb[k] == 0.0) continue;
    const double s = cache.rgb[k];
    const double da = d_rgb[k] * s * (1.0 - s);
    const double* row = dec + L.wc() + k * in;
    double* grow = g + L.wc() + k * in;
    g[L.bc() + k] += da;
    for (int j = 0; j < L.hidden; ++j) {
      grow[j] += da * cache.trunk[j];
      d_trunk[j] += da * row[j];
    }
    for (int j = 0; j < L.code_dim; ++j) {
      grow[L.hidden + j] += da * w[j];
      if (!dw.empty()) dw[j] += da * row[L.hidden + j];
    }
  }
  std::fill(dh.begin(), dh.begin() + L.channels, 0.0);
  const double* w1 = dec + L.w1();
  for (int j = 0; j < L.hidden; ++j) {
    const double dpre = d_trunk[j] * sigmoid(cache.pre[j]);
    if (dpre == 0.0) continue;
    g[L.b1() + j] += dpre;
    double* grow = g + L.w1() + std::size_t(j) * L.channels;
    const double* row = w1 + std::size_t(j) * L.channels;
    for (int i = 0; i < L.channels; ++i) {
      grow[i] += dpre * h[i];
      dh[i] += dpre * row[i];
    }
  }
}

double density_at(const TriPlaneField& field, const Vec3& x, std::span<const double>) {
  std::vector<double> h(field.shape().channels), pre(field.shape().hidden), z(field.shape().hidden);
  sample_triplane(field, x, h);
  DecodeCache cache{pre, z};
  return decode_density(field, h, cache);
}

std::array<double, 3> color_at(const TriPlaneField& field, const Vec3& x,
                               std::span<const double> w) {
  std::vector<double> h(field.shape().channels), pre(field.shape().hidden), z(field.shape().hidden);
  sample_triplane(field, x, h);
  DecodeCache cache{pre, z};
  decode(field, h, w, cache);
  return cache.rgb;
}

SkyStencil sky_stencil(const FieldShape& shape, const Vec3& dir) {
  const Vec3 d = dir.normalized();
  const double theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
  const double phi = std::atan2(d.y(), d.x());
  const int H = shape.sky_h, W = shape.sky_w;
  double sr = theta / kPi * H - 0.5;
  int r0, r1;
  double tr;
  if (sr <= 0.0) {
    r0 = r1 = 0;
    tr = 0.0;
  } else if (sr >= H - 1) {
    r0 = r1 = H - 1;
    tr = 0.0;
  } else {
    r0 = static_cast<int>(sr);
    r1 = r0 + 1;
    tr = sr - r0;
  }
  const double sc = (phi + kPi) / (2.0 * kPi) * W - 0.5;
  const double fc = std::floor(sc);
  const double tc = sc - fc;
  const int c0 = ((static_cast<int>(fc) % W) + W) % W;
  const int c1 = (c0 + 1) % W;
  SkyStencil st;
  auto idx = [&](int r, int c) { return (std::size_t(r) * W + c) * 3; };
  st.offset = {idx(r0, c0), idx(r0, c1), idx(r1, c0), idx(r1, c1)};
  st.weight = {(1 - tr) * (1 - tc), (1 - tr) * tc, tr * (1 - tc), tr * tc};
  return st;
}

std::array<double, 3> sample_sky_raw(const TriPlaneField& field, const SkyStencil& st) {
  std::array<double, 3> c{};
  const double* sky = field.params().sky.data();
  for (int k = 0; k < 4; ++k)
    for (int ch = 0; ch < 3; ++ch) c[ch] += st.weight[k] * sky[st.offset[k] + ch];
  return c;
}

std::array<double, 3> sample_sky(const TriPlaneField& field, const Vec3& dir) {
  auto c = sample_sky_raw(field, sky_stencil(field.shape(), dir));
  for (double& v : c) v = std::clamp(v, 0.0, 1.0);
  return c;
}

// Checkpoint: "TPF1", little-endian header, then float32 payload.
namespace {

constexpr char kMagic[4] = {'T', 'P', 'F', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T)))
    throw FormatError("checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void TriPlaneField::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot create checkpoint " + path.string());
  os.write(kMagic, 4);
  put<std::uint32_t>(os, shape_.res);
  put<std::uint32_t>(os, shape_.channels);
  put<std::uint32_t>(os, shape_.hidden);
  put<std::uint32_t>(os, shape_.code_dim);
  put<std::uint32_t>(os, extent_.pad_tokens);
  put<std::uint32_t>(os, extent_.token_grid);
  put<float>(os, static_cast<float>(extent_.base_side));
  put<float>(os, static_cast<float>(extent_.z_min));
  put<std::uint32_t>(os, shape_.sky_h);
  put<std::uint32_t>(os, shape_.sky_w);
  put<std::uint32_t>(os, shape_.n_codes);
  for (ParamGroup g : kAllGroups)
    for (double v : params_.group(g)) put<float>(os, static_cast<float>(v));
  if (!os) throw IoError("failed writing checkpoint " + path.string());
}

TriPlaneField TriPlaneField::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(path.string() + ": not a TPF1 checkpoint");
  FieldShape s;
  SceneExtent e;
  s.res = static_cast<int>(get<std::uint32_t>(is));
  s.channels = static_cast<int>(get<std::uint32_t>(is));
  s.hidden = static_cast<int>(get<std::uint32_t>(is));
  s.code_dim = static_cast<int>(get<std::uint32_t>(is));
  e.pad_tokens = static_cast<int>(get<std::uint32_t>(is));
  e.token_grid = static_cast<int>(get<std::uint32_t>(is));
  e.base_side = get<float>(is);
  e.z_min = get<float>(is);
  s.sky_h = static_cast<int>(get<std::uint32_t>(is));
  s.sky_w = static_cast<int>(get<std::uint32_t>(is));
  s.n_codes = static_cast<int>(get<std::uint32_t>(is));
  if (s.res > 4096 || s.channels > 4096 || s.hidden > 4096 || s.sky_h > 16384 ||
      s.sky_w > 16384 || s.n_codes > 1 << 20)
    throw FormatError(path.string() + ": implausible checkpoint header");
  TriPlaneField f(s, e);
  for (ParamGroup g : kAllGroups)
    for (double& v : f.params_.group(g)) v = get<float>(is);
  return f;
}

}  // namespace tricity
