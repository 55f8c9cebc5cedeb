// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "test_util.hpp"
#include "tricity/renderer.hpp"

namespace tricity {
namespace {

// Every weight zero and a density bias of b gives sigma = softplus(b).
TriPlaneField constant_field(double bias, double side = 50.0) {
  FieldShape s;
  s.res = 8;
  s.channels = 2;
  s.hidden = 4;
  s.code_dim = 2;
  s.sky_h = 16;
  s.sky_w = 32;
  TriPlaneField f(s, SceneExtent{side, 16, 0, 0.0});
  f.params().decoder[f.decoder_layout().bd()] = bias;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (double& v : f.params().sky) v = u(rng);
  return f;
}

// sigma ~ 170 below z = 3 and ~1e-13 above it, through the XZ plane rows.
TriPlaneField ground_field() {
  FieldShape s;
  s.res = 64;
  s.channels = 1;
  s.hidden = 1;
  s.code_dim = 1;
  SceneExtent e;  // 62.5 m cube from z = -5
  TriPlaneField f(s, e);
  const double cell = e.side() / s.res;
  for (int r = 0; r < s.res; ++r) {
    const double z = e.z_min + (r + 0.5) * cell;
    for (int c = 0; c < s.res; ++c) f.params().planes[f.plane_index(1, r, c)] = z < 3.0 ? 1.0 : -1.0;
  }
  const DecoderLayout L = f.decoder_layout();
  f.params().decoder[L.w1()] = 20.0;
  f.params().decoder[L.wd()] = 10.0;
  f.params().decoder[L.bd()] = -30.0;
  return f;
}

struct Slab {
  double t0, z_lo, z_hi;
  double density(const Vec3& x) const { return x.z() >= z_lo && x.z() <= z_hi ? 1e3 : 0.0; }
  std::array<double, 3> color(const Vec3&) const { return {0.2, 0.6, 0.9}; }
  std::array<double, 3> sky(const Vec3&) const { return {1.0, 1.0, 1.0}; }
};

// The field viewed as a generic medium, with density optionally scaled.
struct FieldMedium {
  const TriPlaneField* f;
  std::span<const double> code;
  double scale = 1.0;
  double density(const Vec3& x) const { return scale * density_at(*f, x, code); }
  std::array<double, 3> color(const Vec3& x) const { return color_at(*f, x, code); }
  std::array<double, 3> sky(const Vec3& d) const { return sample_sky(*f, d); }
};

TEST(Renderer, ClipToBox) {
  const Vec3 lo(0, 0, 0), hi(1, 1, 1);
  auto s = clip_to_box(Vec3(-1, 0.5, 0.5), Vec3(1, 0, 0), lo, hi);
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(s->first, 1.0);
  EXPECT_DOUBLE_EQ(s->second, 2.0);
  s = clip_to_box(Vec3(0.5, 0.5, 0.5), Vec3(0, 0, 1), lo, hi);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->first, 0.0);
  EXPECT_FALSE(clip_to_box(Vec3(-1, 2, 0.5), Vec3(1, 0, 0), lo, hi));
  EXPECT_FALSE(clip_to_box(Vec3(2, 0.5, 0.5), Vec3(1, 0, 0), lo, hi));
}

TEST(Renderer, EmptyVolumeShowsSky) {
  const TriPlaneField f = constant_field(-1000.0);
  std::mt19937_64 rng(2);
  MarchConfig mc;
  for (const Ray& r : testing::random_rays(f, 100, rng)) {
    const RayOutput o = march_ray(f, r, f.code(0), mc);
    EXPECT_EQ(o.t_out, 1.0);
    EXPECT_FALSE(o.depth_valid);
    const auto sky = sample_sky(f, r.direction);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(o.rgb[c], sky[c], 1e-15);
  }
}

TEST(Renderer, EmptyFieldPanoramaEqualsSky) {
  const TriPlaneField f = constant_field(-1000.0);
  PanoramaCamera cam;
  cam.pose.position = Vec3(0, 0, 10);
  cam.width = 64;
  cam.height = 16;
  const RenderOutput out = render_view(f, cam, f.code(0), MarchConfig{});
  const RayBatch rays = make_rays(cam);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const auto sky = sample_sky(f, rays.directions[i]);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.rgb.data[i * 3 + c], sky[c], 1e-15);
  }
}

TEST(Renderer, ConstantDensityTransmittance) {
  const TriPlaneField f = constant_field(std::log(std::expm1(0.1)));
  const Ray r{Vec3(-30, 1, 20), Vec3(1, 0, 0)};  // crosses the 50 m cube
  const RayOutput o = march_ray(f, r, f.code(0), MarchConfig{});
  EXPECT_NEAR(o.t_out, std::exp(-5.0), 1e-12);
  EXPECT_NEAR(o.t_out, 0.0067379, 1e-7);
}

TEST(Renderer, OpaqueSlab) {
  const Slab slab{0, 2.0, 3.0};
  const Vec3 lo(-10, -10, 0), hi(10, 10, 20);
  MarchConfig mc;
  const Ray r{Vec3(0.3, 0.2, 15.0), Vec3(0, 0, -1)};
  const RayOutput o = march_medium(slab, r, lo, hi, mc);
  const double delta = 15.0 / mc.n_samples;
  EXPECT_GE(o.opacity, 0.999);
  EXPECT_LE(std::abs(o.depth - 12.0), delta);
  EXPECT_NEAR(o.rgb[0], 0.2, 1e-3);
  EXPECT_NEAR(o.rgb[1], 0.6, 1e-3);
  EXPECT_NEAR(o.rgb[2], 0.9, 1e-3);
  mc.n_samples *= 2;
  const RayOutput o2 = march_medium(slab, r, lo, hi, mc);
  for (int c = 0; c < 3; ++c) EXPECT_LT(std::abs(o2.rgb[c] - o.rgb[c]), 1e-3);
}

TEST(Renderer, OrthographicGroundDepth) {
  const Slab ground{0, -1.0, 0.0};
  OrthographicCamera cam{Vec2::Zero(), 20.0, 60.0, 16, 16};
  const Vec3 lo(-15, -15, -1), hi(15, 15, 61);
  MarchConfig mc;
  const RenderOutput out = render_medium(ground, cam, lo, hi, mc);
  const double delta = 61.0 / mc.n_samples;
  for (double d : out.depth.data) EXPECT_LE(std::abs(d - 60.0), delta);
}

TEST(Renderer, ConservationAndMonotoneTransmittance) {
  const TriPlaneField f = testing::random_field(3);
  std::mt19937_64 rng(4);
  MarchConfig mc;
  mc.n_samples = 48;
  RayTape tape;
  for (const Ray& r : testing::random_rays(f, 500, rng)) {
    const RayOutput o = march_ray(f, r, f.code(0), mc, nullptr, &tape);
    EXPECT_NEAR(o.opacity + o.t_out, 1.0, 1e-6);
    for (int k = 1; k < tape.samples; ++k) EXPECT_LE(tape.trans[k], tape.trans[k - 1]);
  }
}

TEST(Renderer, MarchRayMatchesGenericMarcher) {
  const TriPlaneField f = testing::random_field(5);
  std::mt19937_64 rng(6);
  MarchConfig mc;
  mc.n_samples = 32;
  const FieldMedium m{&f, f.code(1)};
  for (const Ray& r : testing::random_rays(f, 100, rng)) {
    const RayOutput a = march_ray(f, r, f.code(1), mc);
    const RayOutput b = march_medium(m, r, f.extent().lo(), f.extent().hi(), mc);
    EXPECT_NEAR(a.t_out, b.t_out, 1e-12);
    EXPECT_NEAR(a.depth, b.depth, 1e-9);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(a.rgb[c], b.rgb[c], 1e-12);
  }
}

TEST(Renderer, ScaledDensityIsOpaque) {
  const TriPlaneField f = testing::random_field(7);
  std::mt19937_64 rng(8);
  MarchConfig mc;
  const FieldMedium base{&f, f.code(0)};
  FieldMedium dense = base;
  dense.scale = 1e3;
  int checked = 0;
  for (const Ray& r : testing::random_rays(f, 200, rng)) {
    const RayOutput a = march_medium(base, r, f.extent().lo(), f.extent().hi(), mc);
    if (a.opacity < 0.01) continue;
    const RayOutput b = march_medium(dense, r, f.extent().lo(), f.extent().hi(), mc);
    EXPECT_GT(b.opacity, 0.999);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Renderer, PixelOrderDoesNotMatter) {
  const TriPlaneField f = testing::random_field(9);
  PerspectiveCamera cam;
  cam.pose = {Vec3(0, -9, 3), 0.1, -0.2, 0.0};
  cam.width = 24;
  cam.height = 18;
  MarchConfig mc;
  mc.n_samples = 32;
  const RenderOutput full = render_view(f, cam, f.code(0), mc);
  std::vector<int> order(cam.width * cam.height);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(3));
  for (int i : order) {
    const RayOutput o =
        march_ray(f, ray_at(cam, i % cam.width + 0.5, i / cam.width + 0.5), f.code(0), mc);
    EXPECT_EQ(o.rgb[0], full.rgb.data[std::size_t(i) * 3]);
    EXPECT_EQ(o.t_out, full.t_out.data[i]);
  }
}

TEST(Renderer, HeightOfGroundField) {
  const TriPlaneField f = ground_field();
  OrthographicCamera cam{Vec2::Zero(), 40.0, 57.0, 20, 20};
  MarchConfig mc;
  const RenderOutput out = render_view(f, cam, f.code(0), mc);
  const HeightGrid h = depth_to_height(out, cam);
  const double spacing = 62.5 / mc.n_samples, cell = 62.5 / 64;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      ASSERT_FALSE(h.is_nodata(h.at(x, y)));
      EXPECT_LE(std::abs(h.at(x, y) - 3.0), spacing + cell);
      EXPECT_NEAR(h.at(x, y) + out.depth.at(x, y), 57.0, 1e-5);
    }
}

TEST(Renderer, EmptyFieldHeightIsNodata) {
  const TriPlaneField f = constant_field(-1000.0);
  OrthographicCamera cam{Vec2::Zero(), 40.0, 45.0, 8, 8};
  const HeightGrid h = render_height(f, cam, f.code(0), MarchConfig{});
  EXPECT_EQ(h.nodata_count(), h.size());
}

TEST(Renderer, NonFiniteParametersAreRejected) {
  TriPlaneField f = testing::random_field(10);
  f.params().planes[5] = std::numeric_limits<double>::quiet_NaN();
  OrthographicCamera cam{Vec2::Zero(), 4.0, 5.0, 4, 4};
  EXPECT_THROW(render_view(f, cam, f.code(0), MarchConfig{}), NumericError);
}

TEST(Renderer, MarchConfigValidation) {
  MarchConfig mc;
  mc.n_samples = 1;
  EXPECT_THROW(mc.validate(), ConfigError);
  mc = {};
  mc.t_near = 5.0;
  mc.t_far = 4.0;
  EXPECT_THROW(mc.validate(), ConfigError);
}

}  // namespace
}  // namespace tricity
