// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <random>
#include <span>

#include "tricity/common.hpp"
#include "tricity/params.hpp"

namespace tricity {

/// L_eff = L * (1 + 2N / H_t).
double effective_extent(double base_side, int token_grid, int pad_tokens);

/// Axis-aligned scene cube. Horizontally centered on the origin with side
/// L_eff; vertically spans [z_min, z_min + L_eff].
struct SceneExtent {
  double base_side = 50.0;  // L, meters
  int token_grid = 16;      // H_t = W_t
  int pad_tokens = 2;       // N
  double z_min = -5.0;

  double side() const { return effective_extent(base_side, token_grid, pad_tokens); }
  Vec3 lo() const { return Vec3(-0.5 * side(), -0.5 * side(), z_min); }
  Vec3 hi() const { return lo() + Vec3::Constant(side()); }
  bool contains(const Vec3& x) const;
  void validate() const;
};

struct FieldShape {
  int res = 64;       // plane side in cells (padded)
  int channels = 8;   // C
  int hidden = 32;    // decoder trunk width
  int code_dim = 8;   // d_w
  int sky_h = 128;
  int sky_w = 128;
  int n_codes = 1;    // one illumination code per supervised view

  void validate() const;
};

/// Offsets of the decoder tensors inside ParamSet::decoder.
struct DecoderLayout {
  int channels, hidden, code_dim;
  std::size_t w1() const { return 0; }                                   // hidden x C
  std::size_t b1() const { return w1() + std::size_t(hidden) * channels; }  // hidden
  std::size_t wd() const { return b1() + hidden; }                       // hidden
  std::size_t bd() const { return wd() + hidden; }                       // 1
  std::size_t wc() const { return bd() + 1; }                            // 3 x (hidden + d_w)
  std::size_t bc() const { return wc() + 3 * std::size_t(hidden + code_dim); }  // 3
  std::size_t size() const { return bc() + 3; }
};

struct FieldInit {
  double plane_std = 0.1;
  double density_bias = -4.0;
  double sky_value = 0.5;
};

/// Tri-plane radiance field: planes XY, XZ, YZ (res x res x C each), a
/// shallow decoder, a spherical sky grid and per-view illumination codes.
class TriPlaneField {
 public:
  TriPlaneField() = default;
  TriPlaneField(const FieldShape& shape, const SceneExtent& extent);

  static TriPlaneField create(const FieldShape& shape, const SceneExtent& extent,
                              std::mt19937_64& rng, const FieldInit& init = {});

  const FieldShape& shape() const { return shape_; }
  const SceneExtent& extent() const { return extent_; }
  DecoderLayout decoder_layout() const { return {shape_.channels, shape_.hidden, shape_.code_dim}; }

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// Index of channel 0 of cell (row, col) of plane p in params().planes.
  /// p: 0 = XY (col from x, row from y), 1 = XZ (x, z), 2 = YZ (y, z).
  std::size_t plane_index(int p, int row, int col) const {
    return ((std::size_t(p) * shape_.res + row) * shape_.res + col) * shape_.channels;
  }
  /// Width in cells of the zero-initialized spatial-token border.
  int pad_cells() const;

  std::span<const double> code(int view) const;

  void save(const std::filesystem::path& path) const;
  static TriPlaneField load(const std::filesystem::path& path);

 private:
  FieldShape shape_;
  SceneExtent extent_;
  ParamSet params_;
};

/// Bilinear footprint of a point on the three planes: 4 taps per plane.
/// `inside` is false (and all weights zero) outside the cube.
struct PlaneStencil {
  std::array<std::size_t, 12> offset{};
  std::array<double, 12> weight{};
  bool inside = false;
};

PlaneStencil plane_stencil(const TriPlaneField& field, const Vec3& x);

/// h(x) = phi_XY(x) + phi_XZ(x) + phi_YZ(x); writes C values into h.
void sample_triplane(const TriPlaneField& field, const Vec3& x, std::span<double> h);
void sample_triplane(const TriPlaneField& field, const PlaneStencil& st, std::span<double> h);

/// Decoder forward activations, kept for the backward pass. The caller
/// owns the hidden-width buffers.
struct DecodeCache {
  std::span<double> pre;    // trunk pre-activation (hidden)
  std::span<double> trunk;  // softplus(pre)
  double density_pre = 0.0;
  double sigma = 0.0;
  std::array<double, 3> rgb{};  // sigmoid outputs
};

inline double softplus(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(x));
}
inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// sigma = softplus(density head), c = sigmoid(color head). Trunk sees h;
/// the color head additionally sees the illumination code w.
void decode(const TriPlaneField& field, std::span<const double> h, std::span<const double> w,
            DecodeCache& out);
/// Density-only forward (trunk + density head).
double decode_density(const TriPlaneField& field, std::span<const double> h, DecodeCache& out);

/// Accumulates decoder parameter gradients into grad_decoder and returns the
/// input gradients dh (size C) and dw (size d_w, may be empty to skip).
void decode_backward(const TriPlaneField& field, std::span<const double> h,
                     std::span<const double> w, const DecodeCache& cache, double d_sigma,
                     const std::array<double, 3>& d_rgb, std::span<double> grad_decoder,
                     std::span<double> dh, std::span<double> dw);

double density_at(const TriPlaneField& field, const Vec3& x, std::span<const double> w);
std::array<double, 3> color_at(const TriPlaneField& field, const Vec3& x, std::span<const double> w);

/// Spherical sky lookup. theta (polar angle from +z) maps to rows, azimuth
/// phi in [-pi, pi) maps to columns with wrap-around; rows clamp at the poles.
struct SkyStencil {
  std::array<std::size_t, 4> offset{};  // channel-0 offsets into ParamSet::sky
  std::array<double, 4> weight{};
};
SkyStencil sky_stencil(const FieldShape& shape, const Vec3& dir);
/// Unclamped bilinear value (used for gradients); sample_sky clamps to [0,1].
std::array<double, 3> sample_sky_raw(const TriPlaneField& field, const SkyStencil& st);
std::array<double, 3> sample_sky(const TriPlaneField& field, const Vec3& dir);

}  // namespace tricity
