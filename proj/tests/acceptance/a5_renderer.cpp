// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include "acceptance.hpp"
#include "test_util.hpp"
#include "tricity/renderer.hpp"

namespace tricity::acceptance {
namespace {

struct Slab {
  double z_top;
  double density(const Vec3& x) const { return x.z() <= z_top ? 1e4 : 0.0; }
  std::array<double, 3> color(const Vec3&) const { return {0.5, 0.5, 0.5}; }
  std::array<double, 3> sky(const Vec3&) const { return {1.0, 1.0, 1.0}; }
};

// Density head bias b with every other decoder weight and plane at zero
// gives sigma = softplus(b) everywhere in the cube.
TriPlaneField constant_field(double sigma) {
  FieldShape s;
  s.res = 8;
  s.channels = 2;
  s.hidden = 4;
  s.code_dim = 2;
  SceneExtent e;
  e.base_side = 10.0;
  e.token_grid = 8;
  e.pad_tokens = 0;
  e.z_min = 0.0;
  TriPlaneField f(s, e);
  for (ParamGroup g : kAllGroups)
    for (double& v : f.params().group(g)) v = 0.0;
  const DecoderLayout L = f.decoder_layout();
  f.params().decoder[L.bd()] = std::log(std::expm1(sigma));
  return f;
}

}  // namespace

Outcome run_a5(const Options& opt) {
  std::ostringstream m;
  bool pass = true;

  // Conservation on random rays through a random field.
  const TriPlaneField f = testing::random_field(55, 16, 4, 1);
  std::mt19937_64 rng(56);
  const std::size_t n_rays = opt.quick ? 10000 : 100000;
  const std::vector<Ray> rays = testing::random_rays(f, n_rays, rng);
  MarchConfig mc;
  mc.n_samples = 64;
  double worst = 0.0;
  for (const Ray& r : rays) {
    const RayOutput o = march_ray(f, r, f.code(0), mc);
    worst = std::max(worst, std::abs(o.opacity + o.t_out - 1.0));
  }
  pass &= worst <= 1e-6;
  m << "sum(w)+T_out max dev=" << worst << " over " << n_rays << " rays";

  // Constant density: T_out = exp(-sigma * len).
  double worst_t = 0.0;
  for (double sigma : {0.05, 0.3, 1.7}) {
    const TriPlaneField c = constant_field(sigma);
    const Vec3 lo = c.extent().lo(), hi = c.extent().hi();
    for (const Ray& r : testing::random_rays(c, 200, rng)) {
      const auto seg = clip_to_box(r.origin, r.direction, lo, hi);
      const double len = seg ? seg->second - seg->first : 0.0;
      const RayOutput o = march_ray(c, r, c.code(0), mc);
      worst_t = std::max(worst_t, std::abs(o.t_out - std::exp(-sigma * len)));
    }
  }
  pass &= worst_t <= 1e-9;
  m << "; constant-sigma |T_out-exp(-sigma len)| max=" << worst_t;

  // Opaque slab seen from above at an angle: depth within one bin.
  const Vec3 lo(-20, -20, 0), hi(20, 20, 10);
  const Slab slab{3.0};
  double worst_ratio = 0.0;
  std::uniform_real_distribution<double> ang(0.0, 0.8), pos(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const double a = ang(rng);
    const Vec3 d = Vec3(std::sin(a), 0.3 * std::sin(a), -std::cos(a)).normalized();
    const Vec3 o(pos(rng), pos(rng), 9.5);
    const RayOutput out = march_medium(slab, Ray{o, d}, lo, hi, mc);
    const auto seg = clip_to_box(o, d, lo, hi);
    const double delta = (seg->second - seg->first) / mc.n_samples;
    const double truth = (o.z() - slab.z_top) / -d.z();
    worst_ratio = std::max(worst_ratio, std::abs(out.depth - truth) / delta);
  }
  pass &= worst_ratio <= 1.0;
  m << "; opaque-slab depth error max=" << worst_ratio << " sample spacings";

  return {pass, m.str()};
}

}  // namespace tricity::acceptance
