// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <random>
#include <vector>

#include "tricity/cameras.hpp"
#include "tricity/field.hpp"
#include "tricity/geodata.hpp"
#include "tricity/image.hpp"
#include "tricity/parallel.hpp"

namespace tricity {

struct MarchConfig {
  int n_samples = 96;
  /// Optional clamps on the ray parameter; the segment is always clipped to
  /// the scene cube as well.
  std::optional<double> t_near;
  std::optional<double> t_far;
  /// Stratified offsets inside each bin (fitting). Off = bin midpoints.
  bool jitter = false;
  double depth_valid_threshold = 0.5;
  /// Stop marching once transmittance drops below this value (0 disables).
  /// The truncated sum is what gets differentiated.
  double early_stop = 0.0;

  void validate() const;
};

/// Slab test against an axis-aligned box; returns [t_enter, t_exit] with
/// t_enter >= 0, or nullopt on a miss.
std::optional<std::pair<double, double>> clip_to_box(const Vec3& origin, const Vec3& dir,
                                                     const Vec3& lo, const Vec3& hi);

struct RayOutput {
  std::array<double, 3> rgb{};
  double depth = 0.0;       // opacity-normalized expected ray distance
  double opacity = 0.0;     // sum of compositing weights
  double t_out = 1.0;       // residual transmittance
  bool depth_valid = false;
  int samples = 0;
};

/// Per-ray forward cache for the backward pass. Buffers are reused across
/// rays to avoid reallocation.
struct RayTape {
  int samples = 0;
  int channels = 0;
  int hidden = 0;
  double delta = 0.0;  // bin width (every sample's step)
  std::vector<double> t;
  std::vector<double> sigma;
  std::vector<double> trans;   // T_k before sample k
  std::vector<double> weight;  // T_k * alpha_k
  std::vector<std::array<double, 3>> rgb;
  std::vector<PlaneStencil> stencil;
  std::vector<double> feat;    // samples x C
  std::vector<double> pre;     // samples x hidden
  std::vector<double> trunk;   // samples x hidden
  std::vector<double> density_pre;
  SkyStencil sky;
  std::array<double, 3> sky_raw{};

  void reserve(int n, int C, int H);
};

/// Upstream gradients for one ray.
struct RayGrad {
  std::array<double, 3> rgb{};
  double depth = 0.0;
  double t_out = 0.0;
};

/// Composites C = sum_k T_k (1 - exp(-sigma_k delta_k)) c_k + T_out c_sky(d).
/// Throws NumericError if the field holds NaN/Inf (checked by render_view and
/// the fitting loop; march_ray itself assumes finite parameters).
RayOutput march_ray(const TriPlaneField& field, const Ray& ray, std::span<const double> code,
                    const MarchConfig& cfg, std::mt19937_64* rng = nullptr,
                    RayTape* tape = nullptr);

/// Accumulates parameter gradients of one ray given its tape. `code_grad` is
/// the slice of the codes gradient belonging to `code` (may be empty).
void march_ray_backward(const TriPlaneField& field, const Ray& ray, std::span<const double> code,
                        const RayTape& tape, const RayOutput& out, const RayGrad& grad,
                        ParamSet& grads, std::span<double> code_grad);

/// Generic marcher for any medium exposing density(x), color(x) and sky(d);
/// used for ground-truth rendering of analytic scenes.
template <class Medium>
RayOutput march_medium(const Medium& medium, const Ray& ray, const Vec3& lo, const Vec3& hi,
                       const MarchConfig& cfg) {
  RayOutput out;
  const auto seg = clip_to_box(ray.origin, ray.direction, lo, hi);
  double a = 0.0, b = 0.0;
  bool hit = false;
  if (seg) {
    a = std::max(seg->first, cfg.t_near.value_or(seg->first));
    b = std::min(seg->second, cfg.t_far.value_or(seg->second));
    hit = b > a;
  }
  double T = 1.0, wsum = 0.0, wt = 0.0;
  std::array<double, 3> acc{};
  if (hit) {
    const double delta = (b - a) / cfg.n_samples;
    for (int k = 0; k < cfg.n_samples; ++k) {
      const double t = a + (k + 0.5) * delta;
      const Vec3 x = ray.origin + t * ray.direction;
      const double sigma = medium.density(x);
      if (sigma <= 0.0) continue;
      const double alpha = 1.0 - std::exp(-sigma * delta);
      const double w = T * alpha;
      const auto c = medium.color(x);
      for (int i = 0; i < 3; ++i) acc[i] += w * c[i];
      wsum += w;
      wt += w * t;
      T *= 1.0 - alpha;
      ++out.samples;
    }
  }
  const auto sky = medium.sky(ray.direction);
  for (int i = 0; i < 3; ++i) out.rgb[i] = acc[i] + T * sky[i];
  out.t_out = T;
  out.opacity = wsum;
  out.depth_valid = wsum >= cfg.depth_valid_threshold;
  out.depth = wsum > 0.0 ? wt / wsum : 0.0;
  return out;
}

struct RenderOutput {
  Image rgb;      // 3 channels
  Image depth;    // meters along the ray
  Image opacity;  // 1 - t_out
  Image t_out;
  Image valid;    // 1 where depth is valid
};

RenderOutput render_view(const TriPlaneField& field, const CameraSpec& camera,
                         std::span<const double> code, const MarchConfig& cfg);

RenderOutput make_render_output(int width, int height);
void store_ray(RenderOutput& out, std::size_t pixel, const RayOutput& r);

/// Rendering of an arbitrary medium over a camera (deterministic midpoints).
template <class Medium>
RenderOutput render_medium(const Medium& medium, const CameraSpec& camera, const Vec3& lo,
                           const Vec3& hi, const MarchConfig& cfg) {
  cfg.validate();
  const RayBatch rays = make_rays(camera);
  RenderOutput out = make_render_output(rays.width, rays.height);
  parallel_for(rays.size(), 256, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      store_ray(out, i, march_medium(medium, Ray{rays.origins[i], rays.directions[i]}, lo, hi, cfg));
  });
  return out;
}

/// Height map h = z_cam - depth from an orthographic camera, nodata (NaN)
/// where depth is invalid. Georeferenced in the local scene frame unless a
/// geotransform/CRS is supplied.
HeightGrid render_height(const TriPlaneField& field, const OrthographicCamera& camera,
                         std::span<const double> code, const MarchConfig& cfg,
                         const std::optional<std::array<double, 6>>& geotransform = std::nullopt,
                         Crs crs = Crs::Local);

/// Converts a rendered depth image from an orthographic camera to heights.
HeightGrid depth_to_height(const RenderOutput& out, const OrthographicCamera& camera);

}  // namespace tricity
