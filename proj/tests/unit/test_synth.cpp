// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "tricity/losses.hpp"
#include "tricity/synth.hpp"

namespace tricity {
namespace {

namespace fs = std::filesystem;

SceneSpec two_boxes() {
  SceneSpec s;
  Primitive ground;
  ground.kind = PrimitiveKind::Slab;
  ground.z_top = 0.0;
  ground.sigma = 20.0;
  Primitive a;
  a.name = "a";
  a.center = {0, 0, 2};
  a.size = {4, 4, 4};
  a.sigma = 2.0;
  a.rgb = {1, 0, 0};
  Primitive b = a;
  b.name = "b";
  b.center = {1, 0, 2};
  b.sigma = 5.0;
  b.rgb = {0, 0, 1};
  s.primitives = {ground, a, b};
  return s;
}

TEST(Synth, DensityAndColorRules) {
  const SceneSpec s = two_boxes();
  EXPECT_EQ(s.density(Vec3(10, 10, 20)), 0.0);
  EXPECT_EQ(s.density(Vec3(-1.5, 0, 2)), 2.0);
  EXPECT_EQ(s.density(Vec3(0.5, 0, 2)), 5.0);
  EXPECT_EQ(s.color(Vec3(0.5, 0, 2))[2], 1.0);
  EXPECT_EQ(s.density(Vec3(20, 20, -1)), 20.0);
  EXPECT_EQ(s.tallest(), 4.0);
}

TEST(Synth, AnalyticDepthExamples) {
  SceneSpec s;
  Primitive ground;
  ground.kind = PrimitiveKind::Slab;
  ground.z_top = 0.0;
  s.primitives = {ground};
  const auto t = analytic_depth(s, Ray{Vec3(0, 0, 60), Vec3(0, 0, -1)});
  ASSERT_TRUE(t);
  EXPECT_NEAR(*t, 60.0, 1e-12);
  EXPECT_FALSE(analytic_depth(s, Ray{Vec3(0, 0, 10), Vec3(0, 0, 1)}));
  EXPECT_FALSE(analytic_depth(s, Ray{Vec3(0, 0, 10), Vec3(1, 0, 0)}));
}

TEST(Synth, AnalyticDepthMatchesDenseMarch) {
  const SceneSpec s = default_city_block();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1), pos(-20, 20), h(1, 30);
  const double step = 1e-3;
  int hits = 0;
  for (int i = 0; i < 60; ++i) {
    const Vec3 o(pos(rng), pos(rng), h(rng));
    Vec3 d(u(rng), u(rng), u(rng) - 0.6);
    d.normalize();
    const auto t = analytic_depth(s, Ray{o, d});
    // 1e5 steps over the first 100 m of the ray.
    double marched = -1;
    for (int k = 0; k < 100000; ++k) {
      const double tk = (k + 0.5) * step;
      if (s.density(o + tk * d) > 0.0) {
        marched = tk;
        break;
      }
    }
    if (!t) {
      EXPECT_LT(marched, 0.0);
      continue;
    }
    if (*t > 100.0) continue;
    ++hits;
    EXPECT_LE(std::abs(*t - marched), step);
  }
  EXPECT_GT(hits, 30);
}

SupervisionConfig small_cfg() {
  SupervisionConfig c;
  c.satellite = OrthographicCamera{Vec2::Zero(), 50.0, 60.0, 24, 24};
  c.pano_width = 64;
  c.pano_height = 16;
  c.gt_samples = 256;
  c.heldout_sat_size = 12;
  c.seed = 5;
  return c;
}

TEST(Synth, SkyMaskIsAnalyticMiss) {
  const SyntheticDataset ds = generate_supervision(default_city_block(), small_cfg());
  ASSERT_EQ(ds.train.panoramas.size(), 4u);
  ASSERT_EQ(ds.train.satellites.size(), 1u);
  for (const PanoramaView& p : ds.train.panoramas)
    for (int y = 0; y < p.camera.height; ++y)
      for (int x = 0; x < p.camera.width; ++x) {
        const bool miss = !analytic_depth(ds.spec, ray_at(p.camera, x + 0.5, y + 0.5));
        EXPECT_EQ(p.sky_mask->at(x, y), miss ? 1.0 : 0.0);
      }
}

TEST(Synth, DepthLabelIsAffineInTrueDepth) {
  const SyntheticDataset ds = generate_supervision(default_city_block(), small_cfg());
  const SatelliteView& sat = ds.train.satellites[0];
  Image depth(sat.camera.width, sat.camera.height, 1);
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      const auto t = analytic_depth(ds.spec, ray_at(sat.camera, x + 0.5, y + 0.5));
      ASSERT_TRUE(t);
      depth.at(x, y) = *t;
      EXPECT_NEAR(sat.depth_label->at(x, y), 2.0 * *t + 5.0, 1e-9);
    }
  EXPECT_NEAR(depth_loss(depth, *sat.depth_label, nullptr, 0.5).value, 0.0, 1e-9);
}

TEST(Synth, DeterministicPerSeed) {
  const SyntheticDataset a = generate_supervision(default_city_block(), small_cfg());
  const SyntheticDataset b = generate_supervision(default_city_block(), small_cfg());
  EXPECT_EQ(a.train.panoramas[2].rgb.data, b.train.panoramas[2].rgb.data);
  EXPECT_EQ(a.train.panoramas[2].camera.pose.yaw, b.train.panoramas[2].camera.pose.yaw);
  SupervisionConfig c = small_cfg();
  c.seed = 6;
  const SyntheticDataset d = generate_supervision(default_city_block(), c);
  EXPECT_NE(a.train.panoramas[0].camera.pose.yaw, d.train.panoramas[0].camera.pose.yaw);
}

TEST(Synth, SupervisionIsConverged) {
  const SceneSpec s = default_city_block();
  const AnalyticMedium med{&s};
  PanoramaCamera cam;
  cam.pose.position = {-2, -4, 1.7};
  cam.width = 64;
  cam.height = 16;
  MarchConfig m;
  m.n_samples = 2048;
  const Image a = render_medium(med, cam, s.world.lo(), s.world.hi(), m).rgb;
  m.n_samples = 4096;
  const Image b = render_medium(med, cam, s.world.lo(), s.world.hi(), m).rgb;
  double mean = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) mean += std::abs(a.data[i] - b.data[i]);
  EXPECT_LT(mean / a.data.size(), 1e-3);
}

TEST(Synth, CanopyVoidGravity) {
  const SceneSpec s = default_city_block();
  // Sample straight up through the canopy from the void beneath it.
  const Primitive* canopy = nullptr;
  for (const auto& p : s.primitives)
    if (p.name == "canopy") canopy = &p;
  ASSERT_NE(canopy, nullptr);
  std::vector<GravityPair> pairs;
  const Vec3 c = canopy->center;
  for (int i = 0; i < 200; ++i) {
    const double z = c.z() - canopy->radius - 1.0 + 0.01 * i;
    pairs.push_back({Vec3(c.x() - 1.0, c.y(), z), 1.5});
  }
  auto density = [&](const Vec3& x) { return s.density(x); };
  auto loss = [&](double eps) { return gravity_loss(density, pairs, eps); };
  EXPECT_EQ(loss(1.0), 0.0);
  EXPECT_GT(loss(0.0), 0.0);
}

TEST(Synth, SceneJsonRoundTrip) {
  const SceneSpec s = default_city_block();
  const SceneSpec r = SceneSpec::from_json(s.to_json());
  EXPECT_EQ(r.to_json(), s.to_json());
  ASSERT_EQ(r.primitives.size(), s.primitives.size());
  const fs::path p = fs::temp_directory_path() / "tricity_scene.json";
  s.save(p);
  EXPECT_EQ(SceneSpec::load(p).to_json(), s.to_json());
  EXPECT_THROW(SceneSpec::from_json(R"({"primitives": [{"type": "cone"}]})"), ConfigError);
}

TEST(Synth, ValidationRejectsBadPrimitives) {
  SceneSpec s = two_boxes();
  s.primitives[1].sigma = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = two_boxes();
  s.primitives[1].center.z() = 200.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Synth, DatasetRoundTrip) {
  const SyntheticDataset ds = generate_supervision(default_city_block(), small_cfg());
  const fs::path dir = fs::temp_directory_path() / "tricity_ds";
  fs::remove_all(dir);
  write_dataset(ds, dir);
  const SyntheticDataset r = read_dataset(dir);
  ASSERT_EQ(r.train.panoramas.size(), ds.train.panoramas.size());
  EXPECT_EQ(r.train.panoramas[1].camera.pose.yaw, ds.train.panoramas[1].camera.pose.yaw);
  // PNG storage quantizes colors to 8 bits.
  for (std::size_t i = 0; i < ds.train.panoramas[1].rgb.data.size(); ++i)
    EXPECT_NEAR(r.train.panoramas[1].rgb.data[i], ds.train.panoramas[1].rgb.data[i], 0.5 / 255 + 1e-9);
  EXPECT_EQ(r.train.panoramas[1].sky_mask->data, ds.train.panoramas[1].sky_mask->data);
  EXPECT_EQ(r.heldout_height.values, ds.heldout_height.values);
  EXPECT_EQ(r.spec.to_json(), ds.spec.to_json());
}

}  // namespace
}  // namespace tricity
