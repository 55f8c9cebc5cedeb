// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "tricity/autodiff.hpp"
#include "tricity/meshing.hpp"
#include "tricity/parallel.hpp"
#include "tricity/renderer.hpp"
#include "tricity/synth.hpp"

namespace tricity {
namespace {

TriPlaneField make_field(int res, int channels) {
  FieldShape s;
  s.res = res;
  s.channels = channels;
  s.n_codes = 4;
  std::mt19937_64 rng(7);
  FieldInit init;
  init.plane_std = 0.5;
  return TriPlaneField::create(s, SceneExtent{}, rng, init);
}

void BM_SampleTriplane(benchmark::State& state) {
  const TriPlaneField f = make_field(int(state.range(0)), 8);
  std::vector<double> h(f.shape().channels);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-30.0, 30.0), z(-4.0, 50.0);
  std::vector<Vec3> pts(1024);
  for (Vec3& p : pts) p = Vec3(u(rng), u(rng), z(rng));
  std::size_t i = 0;
  for (auto _ : state) {
    sample_triplane(f, pts[i++ & 1023], h);
    benchmark::DoNotOptimize(h.data());
  }
}
BENCHMARK(BM_SampleTriplane)->Arg(64)->Arg(128);

void BM_MarchRay(benchmark::State& state) {
  const TriPlaneField f = make_field(64, 8);
  const std::vector<double> code = mean_code(f);
  MarchConfig mc;
  mc.n_samples = int(state.range(0));
  mc.jitter = false;
  const Ray ray{Vec3(-20.0, -25.0, 2.0), Vec3(0.6, 0.8, 0.05).normalized()};
  for (auto _ : state) benchmark::DoNotOptimize(march_ray(f, ray, code, mc));
  state.SetItemsProcessed(state.iterations() * mc.n_samples);
}
BENCHMARK(BM_MarchRay)->Arg(64)->Arg(128);

void BM_MarchRayBackward(benchmark::State& state) {
  const TriPlaneField f = make_field(64, 8);
  const std::vector<double> code = mean_code(f);
  MarchConfig mc;
  mc.jitter = false;
  const Ray ray{Vec3(-20.0, -25.0, 2.0), Vec3(0.6, 0.8, 0.05).normalized()};
  ParamSet grads = f.params().zeros_like();
  std::vector<double> code_grad(code.size());
  RayTape tape;
  RayGrad g;
  g.rgb = {1.0, 1.0, 1.0};
  for (auto _ : state) {
    const RayOutput out = march_ray(f, ray, code, mc, nullptr, &tape);
    march_ray_backward(f, ray, code, tape, out, g, grads, code_grad);
  }
}
BENCHMARK(BM_MarchRayBackward);

void BM_MarchingCubesSphere(benchmark::State& state) {
  const int res = int(state.range(0));
  const DensityGrid grid = eval_density_grid(
      [](const Vec3& x) { return 10.0 * std::max(0.0, 1.0 - x.norm() / 0.7); }, Vec3::Constant(-1.0),
      2.0, res);
  for (auto _ : state) benchmark::DoNotOptimize(marching_cubes(grid, 2.0));
}
BENCHMARK(BM_MarchingCubesSphere)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_EvaluateBatch(benchmark::State& state) {
  set_num_threads(1);
  static const SyntheticDataset ds = [] {
    SupervisionConfig sc;
    sc.satellite = OrthographicCamera{Vec2::Zero(), 50.0, 60.0, 64, 64};
    sc.pano_width = 128;
    sc.pano_height = 32;
    sc.gt_samples = 128;
    sc.heldout_sat_size = 16;
    return generate_supervision(default_city_block(), sc);
  }();
  FieldShape s;
  s.n_codes = ds.train.n_codes();
  std::mt19937_64 init(3);
  const TriPlaneField f = TriPlaneField::create(s, ds.spec.world, init);
  FitConfig cfg;
  std::mt19937_64 rng(5);
  const Batch b = sample_batch(f, ds.train, cfg, rng);
  BatchWorkspace ws;
  const bool grads = state.range(0) != 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        evaluate_batch(f, b, cfg.weights, cfg.gravity, cfg.march, 9, grads, &ws));
  state.SetItemsProcessed(state.iterations() * std::int64_t(b.rays.size()));
}
BENCHMARK(BM_EvaluateBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace tricity

BENCHMARK_MAIN();
