// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "test_util.hpp"
#include "tricity/autodiff.hpp"
#include "tricity/synth.hpp"

namespace tricity {
namespace {

ParamSet scalar_params(double x) {
  ParamSet p;
  p.planes = {x};
  p.decoder = {0.0};
  p.sky = {};
  p.codes = {};
  return p;
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamSet p = scalar_params(1.0), g = scalar_params(3.7);
  AdamState s = AdamState::for_params(p);
  AdamConfig cfg;
  cfg.lr = 0.01;
  adam_step(p, g, s, cfg);
  EXPECT_NEAR(p.planes[0], 1.0 - 0.01, 1e-9);
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, ZeroGradientLeavesParametersAndDecaysMoments) {
  ParamSet p = scalar_params(1.0);
  AdamState s = AdamState::for_params(p);
  AdamConfig cfg;
  adam_step(p, scalar_params(2.0), s, cfg);
  const double x = p.planes[0], m = s.m.planes[0], v = s.v.planes[0];
  ParamSet zero = scalar_params(0.0);
  adam_step(p, zero, s, cfg);
  EXPECT_NEAR(s.m.planes[0], 0.9 * m, 1e-15);
  EXPECT_NEAR(s.v.planes[0], 0.999 * v, 1e-15);
  // The first moment still carries momentum; the decoder entry never moves.
  EXPECT_LT(p.planes[0], x);
  EXPECT_EQ(p.decoder[0], 0.0);
}

TEST(Adam, MinimizesQuadratic) {
  ParamSet p = scalar_params(1.0);
  AdamState s = AdamState::for_params(p);
  AdamConfig cfg;
  cfg.lr = 0.1;
  for (int i = 0; i < 100; ++i) adam_step(p, scalar_params(2.0 * p.planes[0]), s, cfg);
  EXPECT_LT(std::abs(p.planes[0]), 0.05);
}

TEST(Adam, NonFiniteGradientThrowsBeforeUpdating) {
  ParamSet p = scalar_params(1.0), g = scalar_params(1.0);
  g.decoder[0] = std::numeric_limits<double>::quiet_NaN();
  AdamState s = AdamState::for_params(p);
  try {
    adam_step(p, g, s, AdamConfig{});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("decoder"), std::string::npos);
  }
  EXPECT_EQ(p.planes[0], 1.0);
  EXPECT_EQ(s.step, 0);
  EXPECT_EQ(s.m.planes[0], 0.0);
}

TEST(Adam, ShapeMismatchThrows) {
  ParamSet p = scalar_params(1.0), g = scalar_params(1.0);
  g.planes.push_back(0.0);
  AdamState s = AdamState::for_params(p);
  EXPECT_THROW(adam_step(p, g, s, AdamConfig{}), DomainError);
}

TEST(Adam, GroupScaleZeroFreezesGroup) {
  ParamSet p = scalar_params(1.0), g = scalar_params(1.0);
  g.decoder[0] = 1.0;
  AdamState s = AdamState::for_params(p);
  AdamConfig cfg;
  cfg.group_lr_scale = {0.0, 1.0, 1.0, 1.0};
  adam_step(p, g, s, cfg);
  EXPECT_EQ(p.planes[0], 1.0);
  EXPECT_NE(p.decoder[0], 0.0);
}

// Small supervision set shared by the fitting tests.
const SyntheticDataset& tiny_dataset() {
  static const SyntheticDataset ds = [] {
    SupervisionConfig cfg;
    cfg.satellite = OrthographicCamera{Vec2::Zero(), 50.0, 60.0, 32, 32};
    cfg.pano_width = 64;
    cfg.pano_height = 16;
    cfg.gt_samples = 128;
    cfg.heldout_sat_size = 16;
    return generate_supervision(default_city_block(), cfg);
  }();
  return ds;
}

FitConfig tiny_fit(int iterations) {
  FitConfig cfg;
  cfg.iterations = iterations;
  cfg.rays_per_batch = 32;
  cfg.patch_size = 6;
  cfg.perspective_size = 16;
  cfg.march.n_samples = 24;
  cfg.gravity.samples = 32;
  cfg.log_every = 1;
  cfg.seed = 11;
  return cfg;
}

FieldShape tiny_shape() {
  FieldShape s;
  s.res = 16;
  s.channels = 4;
  s.hidden = 16;
  s.code_dim = 4;
  s.sky_h = 8;
  s.sky_w = 16;
  return s;
}

TEST(Fit, SameSeedGivesIdenticalLogs) {
  const SyntheticDataset& ds = tiny_dataset();
  std::vector<std::string> a, b;
  FitCallbacks ca, cb;
  ca.on_log = [&](const FitLogRecord& r) {
    FitLogRecord c = r;
    c.elapsed_s = 0;
    a.push_back(to_ndjson(c));
  };
  cb.on_log = [&](const FitLogRecord& r) {
    FitLogRecord c = r;
    c.elapsed_s = 0;
    b.push_back(to_ndjson(c));
  };
  const TriPlaneField fa = fit_scene(ds.train, tiny_shape(), ds.spec.world, tiny_fit(8), ca);
  const TriPlaneField fb = fit_scene(ds.train, tiny_shape(), ds.spec.world, tiny_fit(8), cb);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 8u);
  EXPECT_EQ(fa.params().planes, fb.params().planes);
  EXPECT_EQ(fa.params().decoder, fb.params().decoder);
}

TEST(Fit, FrozenGroupsLeaveParametersBitIdentical) {
  const SyntheticDataset& ds = tiny_dataset();
  FieldShape s = tiny_shape();
  s.n_codes = ds.train.n_codes();
  std::mt19937_64 rng(3);
  TriPlaneField f = TriPlaneField::create(s, ds.spec.world, rng);
  const ParamSet before = f.params();
  FitConfig cfg = tiny_fit(1);
  cfg.adam.group_lr_scale = {0.0, 0.0, 0.0, 0.0};
  fit_field(f, ds.train, cfg);
  EXPECT_EQ(f.params().planes, before.planes);
  EXPECT_EQ(f.params().decoder, before.decoder);
  EXPECT_EQ(f.params().sky, before.sky);
  EXPECT_EQ(f.params().codes, before.codes);
}

TEST(Fit, LossDecreases) {
  const SyntheticDataset& ds = tiny_dataset();
  std::vector<double> rgb;
  FitCallbacks cb;
  cb.on_log = [&](const FitLogRecord& r) {
    if (r.view == ViewKind::Panorama) rgb.push_back(r.terms.rgb);
  };
  FitConfig cfg = tiny_fit(200);
  cfg.adam.lr = 3e-2;
  fit_scene(ds.train, tiny_shape(), ds.spec.world, cfg, cb);
  ASSERT_GT(rgb.size(), 40u);
  double first = 0, last = 0;
  for (int i = 0; i < 15; ++i) {
    first += rgb[i];
    last += rgb[rgb.size() - 1 - i];
  }
  EXPECT_LT(last, 0.5 * first);
}

TEST(Fit, BatchShapes) {
  const SyntheticDataset& ds = tiny_dataset();
  FieldShape s = tiny_shape();
  s.n_codes = ds.train.n_codes();
  std::mt19937_64 init(1);
  const TriPlaneField f = TriPlaneField::create(s, ds.spec.world, init);
  FitConfig cfg = tiny_fit(1);
  std::mt19937_64 rng(5);
  int seen[3] = {0, 0, 0};
  for (int i = 0; i < 60; ++i) {
    const Batch b = sample_batch(f, ds.train, cfg, rng);
    ++seen[int(b.kind)];
    EXPECT_EQ(b.rays.size(), std::size_t(b.width) * b.height);
    EXPECT_EQ(b.rgb.width, b.width);
    EXPECT_EQ(b.mask.height, b.height);
    EXPECT_EQ(b.gravity.size(), std::size_t(cfg.gravity.samples));
    EXPECT_LT(b.code, ds.train.n_codes());
    if (b.kind == ViewKind::Satellite) {
      EXPECT_EQ(b.width, cfg.patch_size);
      EXPECT_TRUE(b.depth_label.has_value());
    } else {
      EXPECT_EQ(b.height, 1);
      EXPECT_EQ(b.width, cfg.rays_per_batch);
    }
    if (b.kind == ViewKind::Perspective) EXPECT_EQ(b.rgb_scale, 0.5);
  }
  for (int k = 0; k < 3; ++k) EXPECT_GT(seen[k], 0);
}

TEST(Fit, ConfigValidation) {
  FitConfig cfg;
  cfg.adam.lr = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.iterations = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.view_mix = {0, 0, 0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(FitConfig{}.validate());
}

TEST(Fit, TooFewCodesThrows) {
  const SyntheticDataset& ds = tiny_dataset();
  FieldShape s = tiny_shape();
  s.n_codes = 1;
  std::mt19937_64 rng(1);
  TriPlaneField f = TriPlaneField::create(s, ds.spec.world, rng);
  EXPECT_THROW(fit_field(f, ds.train, tiny_fit(1)), ConfigError);
}

TEST(Fit, NdjsonRecordHasAllTerms) {
  FitLogRecord r;
  r.iteration = 3;
  r.view = ViewKind::Perspective;
  r.total = 1.5;
  const std::string line = to_ndjson(r);
  for (const char* k : {"\"iter\":3", "\"view\":\"perspective\"", "\"rgb\"", "\"grav\"",
                        "\"sky_op\"", "\"sky_l1\"", "\"depth\"", "\"total\":1.5", "\"time_s\""})
    EXPECT_NE(line.find(k), std::string::npos) << k;
  EXPECT_EQ(line.find('\n'), std::string::npos);
}

TEST(Fit, MeanCodeAveragesTable) {
  TriPlaneField f = testing::random_field(2, 8, 2, 3);
  const std::vector<double> m = mean_code(f);
  for (int j = 0; j < f.shape().code_dim; ++j)
    EXPECT_NEAR(m[j], (f.code(0)[j] + f.code(1)[j] + f.code(2)[j]) / 3.0, 1e-15);
}

}  // namespace
}  // namespace tricity
