// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include "tricity/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tricity {

void MarchConfig::validate() const {
  if (n_samples < 2) throw ConfigError("march: n_samples must be >= 2");
  if (t_near && *t_near < 0.0) throw ConfigError("march: t_near must be >= 0");
  if (t_near && t_far && !(*t_far > *t_near)) throw ConfigError("march: t_far must exceed t_near");
  if (!(depth_valid_threshold >= 0.0 && depth_valid_threshold <= 1.0))
    throw ConfigError("march: depth_valid_threshold must lie in [0, 1]");
  if (!(early_stop >= 0.0 && early_stop < 1.0)) throw ConfigError("march: early_stop in [0, 1)");
}

std::optional<std::pair<double, double>> clip_to_box(const Vec3& origin, const Vec3& dir,
                                                     const Vec3& lo, const Vec3& hi) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / dir[a];
    double ta = (lo[a] - origin[a]) * inv;
    double tb = (hi[a] - origin[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t1 < t0) return std::nullopt;
  }
  if (!(t1 > t0)) return std::nullopt;
  return std::make_pair(t0, t1);
}

void RayTape::reserve(int n, int C, int H) {
  channels = C;
  hidden = H;
  const std::size_t s = std::size_t(n);
  t.resize(s);
  sigma.resize(s);
  trans.resize(s);
  weight.resize(s);
  rgb.resize(s);
  stencil.resize(s);
  feat.resize(s * C);
  pre.resize(s * H);
  trunk.resize(s * H);
  density_pre.resize(s);
}

RayOutput march_ray(const TriPlaneField& field, const Ray& ray, std::span<const double> code,
                    const MarchConfig& cfg, std::mt19937_64* rng, RayTape* tape) {
  const int C = field.shape().channels;
  const int H = field.shape().hidden;
  const SceneExtent& ext = field.extent();
  RayOutput out;

  const auto seg = clip_to_box(ray.origin, ray.direction, ext.lo(), ext.hi());
  double a = 0.0, b = 0.0;
  bool hit = false;
  if (seg) {
    a = std::max(seg->first, cfg.t_near.value_or(seg->first));
    b = std::min(seg->second, cfg.t_far.value_or(seg->second));
    hit = b > a;
  }

  // Local scratch when no tape is requested.
  thread_local RayTape scratch;
  RayTape& tp = tape ? *tape : scratch;
  tp.samples = 0;
  tp.delta = 0.0;

  double T = 1.0, wsum = 0.0, wt = 0.0;
  std::array<double, 3> acc{};
  if (hit) {
    const int n = cfg.n_samples;
    const double delta = (b - a) / n;
    tp.delta = delta;
    if (tp.t.size() < std::size_t(n) || tp.channels != C || tp.hidden != H) tp.reserve(n, C, H);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    for (int k = 0; k < n; ++k) {
      const double off = (cfg.jitter && rng) ? jitter(*rng) : 0.5;
      const double t = a + (k + off) * delta;
      const Vec3 x = ray.origin + t * ray.direction;
      const std::size_t s = std::size_t(tp.samples);
      std::span<double> h(tp.feat.data() + s * C, C);
      tp.stencil[s] = plane_stencil(field, x);
      sample_triplane(field, tp.stencil[s], h);
      DecodeCache dc{std::span<double>(tp.pre.data() + s * H, H),
                     std::span<double>(tp.trunk.data() + s * H, H)};
      decode(field, h, code, dc);
      const double alpha = 1.0 - std::exp(-dc.sigma * delta);
      const double w = T * alpha;
      tp.t[s] = t;
      tp.sigma[s] = dc.sigma;
      tp.density_pre[s] = dc.density_pre;
      tp.trans[s] = T;
      tp.weight[s] = w;
      tp.rgb[s] = dc.rgb;
      for (int i = 0; i < 3; ++i) acc[i] += w * dc.rgb[i];
      wsum += w;
      wt += w * t;
      T *= 1.0 - alpha;
      ++tp.samples;
      if (cfg.early_stop > 0.0 && T < cfg.early_stop) break;
    }
  }
  tp.sky = sky_stencil(field.shape(), ray.direction);
  tp.sky_raw = sample_sky_raw(field, tp.sky);
  for (int i = 0; i < 3; ++i) out.rgb[i] = acc[i] + T * std::clamp(tp.sky_raw[i], 0.0, 1.0);
  out.t_out = T;
  out.opacity = wsum;
  out.depth = wsum > 0.0 ? wt / wsum : 0.0;
  out.depth_valid = wsum >= cfg.depth_valid_threshold && wsum > 0.0;
  out.samples = tp.samples;
  return out;
}

void march_ray_backward(const TriPlaneField& field, const Ray&, std::span<const double> code,
                        const RayTape& tp, const RayOutput& out, const RayGrad& g,
                        ParamSet& grads, std::span<double> code_grad) {
  const int C = field.shape().channels;
  const int H = field.shape().hidden;
  const int K = tp.samples;
  const double T_out = out.t_out;

  // Sky: C += T_out * clamp(sky_raw).
  std::array<double, 3> sky{};
  double g_dot_sky = 0.0;
  for (int i = 0; i < 3; ++i) {
    sky[i] = std::clamp(tp.sky_raw[i], 0.0, 1.0);
    g_dot_sky += g.rgb[i] * sky[i];
    const bool passes = tp.sky_raw[i] > 0.0 && tp.sky_raw[i] < 1.0;
    if (!passes || g.rgb[i] == 0.0) continue;
    const double gs = g.rgb[i] * T_out;
    for (int k = 0; k < 4; ++k) grads.sky[tp.sky.offset[k] + i] += gs * tp.sky.weight[k];
  }
  if (K == 0) return;

  const double O = out.opacity;
  const double D = out.depth;
  const bool use_depth = g.depth != 0.0 && O > 0.0;
  const double delta = tp.delta;

  constexpr int kMaxC = 512;
  double dh[kMaxC];
  std::vector<double> dw_local(code.size());
  std::span<double> dw = code_grad.empty() ? std::span<double>() : std::span<double>(dw_local);

  // Suffix sums over j > k of w_j (g . c_j) and w_j t_j.
  double suffix_c = 0.0, suffix_t = 0.0;
  for (int k = K - 1; k >= 0; --k) {
    const double w = tp.weight[k];
    const auto& c = tp.rgb[k];
    const double g_dot_c = g.rgb[0] * c[0] + g.rgb[1] * c[1] + g.rgb[2] * c[2];
    const double T_next = tp.trans[k] - w;  // T_{k+1}

    double d_sigma = delta * (T_next * g_dot_c - suffix_c - T_out * g_dot_sky);
    d_sigma += g.t_out * (-delta * T_out);
    if (use_depth) {
      const double dN = delta * (T_next * tp.t[k] - suffix_t);
      const double dO = delta * T_out;
      d_sigma += g.depth * (dN - D * dO) / O;
    }
    const std::array<double, 3> d_rgb = {g.rgb[0] * w, g.rgb[1] * w, g.rgb[2] * w};

    suffix_c += w * g_dot_c;
    suffix_t += w * tp.t[k];

    if (d_sigma == 0.0 && w == 0.0) continue;
    const std::span<const double> h(tp.feat.data() + std::size_t(k) * C, C);
    DecodeCache dc{std::span<double>(const_cast<double*>(tp.pre.data()) + std::size_t(k) * H, H),
                   std::span<double>(const_cast<double*>(tp.trunk.data()) + std::size_t(k) * H, H)};
    dc.density_pre = tp.density_pre[k];
    dc.sigma = tp.sigma[k];
    dc.rgb = c;
    decode_backward(field, h, code, dc, d_sigma, d_rgb, grads.decoder, std::span<double>(dh, C),
                    dw);
    if (!dw.empty())
      for (std::size_t j = 0; j < dw.size(); ++j) code_grad[j] += dw[j];
    const PlaneStencil& st = tp.stencil[k];
    if (!st.inside) continue;
    for (int q = 0; q < 12; ++q) {
      const double sw = st.weight[q];
      if (sw == 0.0) continue;
      double* gp = grads.planes.data() + st.offset[q];
      for (int ch = 0; ch < C; ++ch) gp[ch] += sw * dh[ch];
    }
  }
}

RenderOutput make_render_output(int width, int height) {
  return {Image(width, height, 3), Image(width, height, 1), Image(width, height, 1),
          Image(width, height, 1), Image(width, height, 1)};
}

void store_ray(RenderOutput& out, std::size_t i, const RayOutput& r) {
  for (int c = 0; c < 3; ++c) out.rgb.data[i * 3 + c] = r.rgb[c];
  out.depth.data[i] = r.depth;
  out.opacity.data[i] = r.opacity;
  out.t_out.data[i] = r.t_out;
  out.valid.data[i] = r.depth_valid ? 1.0 : 0.0;
}

RenderOutput render_view(const TriPlaneField& field, const CameraSpec& camera,
                         std::span<const double> code, const MarchConfig& cfg) {
  cfg.validate();
  field.params().check_finite("render_view");
  MarchConfig eval = cfg;
  eval.jitter = false;
  const RayBatch rays = make_rays(camera);
  RenderOutput out = make_render_output(rays.width, rays.height);
  parallel_for(rays.size(), 256, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      store_ray(out, i, march_ray(field, Ray{rays.origins[i], rays.directions[i]}, code, eval));
  });
  return out;
}

HeightGrid depth_to_height(const RenderOutput& out, const OrthographicCamera& camera) {
  HeightGrid g(out.depth.width, out.depth.height);
  g.crs = Crs::Local;
  g.geotransform = {camera.center.x() - 0.5 * camera.extent, camera.extent / camera.width, 0.0,
                    camera.center.y() + 0.5 * camera.extent, 0.0, -camera.extent / camera.height};
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.values[i] = out.valid.data[i] > 0.5 ? static_cast<float>(camera.altitude - out.depth.data[i])
                                          : g.nodata;
  }
  return g;
}

HeightGrid render_height(const TriPlaneField& field, const OrthographicCamera& camera,
                         std::span<const double> code, const MarchConfig& cfg,
                         const std::optional<std::array<double, 6>>& geotransform, Crs crs) {
  HeightGrid g = depth_to_height(render_view(field, camera, code, cfg), camera);
  if (geotransform) {
    g.geotransform = *geotransform;
    g.crs = crs;
  }
  return g;
}

}  // namespace tricity
