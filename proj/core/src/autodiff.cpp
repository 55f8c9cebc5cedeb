// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include "tricity/autodiff.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tricity/parallel.hpp"

namespace tricity {

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, const AdamConfig& cfg) {
  if (!params.same_shape(grads) || !params.same_shape(state.m) || !params.same_shape(state.v))
    throw DomainError("adam_step: parameter, gradient and moment shapes differ");
  if (!(cfg.lr >= 0.0)) throw ConfigError("adam: lr must be >= 0");
  grads.check_finite("adam_step gradient");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (ParamGroup g : kAllGroups) {
    const double lr = cfg.lr * cfg.group_lr_scale[std::size_t(g)];
    auto& p = params.group(g);
    const auto& gr = grads.group(g);
    auto& m = state.m.group(g);
    auto& v = state.v.group(g);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gr[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gr[i] * gr[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      p[i] -= lr * mh / (std::sqrt(vh) + cfg.eps);
    }
  }
}

void ViewSet::validate() const {
  if (satellites.empty()) throw ConfigError("fitting needs at least one satellite view");
  if (panoramas.empty()) throw ConfigError("fitting needs at least one panorama");
  for (const auto& s : satellites) {
    if (s.rgb.width != s.camera.width || s.rgb.height != s.camera.height || s.rgb.channels != 3)
      throw DomainError("satellite image does not match its camera");
    if (s.depth_label && (s.depth_label->width != s.camera.width ||
                          s.depth_label->height != s.camera.height))
      throw DomainError("satellite depth label does not match its camera");
  }
  for (const auto& p : panoramas) {
    if (p.rgb.width != p.camera.width || p.rgb.height != p.camera.height || p.rgb.channels != 3)
      throw DomainError("panorama image does not match its camera");
    if (p.sky_mask && (p.sky_mask->width != p.camera.width || p.sky_mask->height != p.camera.height))
      throw DomainError("sky mask does not match its panorama");
  }
}

std::string view_kind_name(ViewKind k) {
  switch (k) {
    case ViewKind::Satellite: return "satellite";
    case ViewKind::Panorama: return "panorama";
    case ViewKind::Perspective: return "perspective";
  }
  return "?";
}

namespace {

constexpr std::size_t kRayGrain = 32;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

LossReport evaluate_batch(const TriPlaneField& field, const Batch& batch,
                          const LossWeights& weights, const GravityConfig& gravity,
                          const MarchConfig& march, std::uint64_t jitter_seed, bool want_grads,
                          BatchWorkspace* ws) {
  weights.validate();
  march.validate();
  const std::size_t n = batch.rays.size();
  if (n != std::size_t(batch.width) * batch.height)
    throw DomainError("batch ray count does not match its lattice");
  BatchWorkspace local;
  BatchWorkspace& w = ws ? *ws : local;
  if (w.tapes.size() < n) w.tapes.resize(n);
  w.outputs.assign(n, RayOutput{});

  const int C = field.shape().code_dim;
  const std::span<const double> code = field.code(batch.code);

  parallel_for(n, kRayGrain, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      std::mt19937_64 rng(mix(jitter_seed ^ mix(i)));
      w.outputs[i] = march_ray(field, batch.rays[i], code, march, march.jitter ? &rng : nullptr,
                               &w.tapes[i]);
    }
  });

  const int W = batch.width, H = batch.height;
  Image pred(W, H, 3), t_out(W, H, 1), depth(W, H, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) pred.data[i * 3 + c] = w.outputs[i].rgb[c];
    t_out.data[i] = w.outputs[i].t_out;
    depth.data[i] = w.outputs[i].depth;
  }

  LossReport rep;
  std::vector<RayGrad> rg(n);

  const LossValue rgb = photometric_loss(pred, batch.rgb, &batch.mask);
  rep.terms.rgb = batch.rgb_scale * rgb.value;
  const double k_rgb = weights.rgb * batch.rgb_scale;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) rg[i].rgb[c] += k_rgb * rgb.grad.data[i * 3 + c];

  if (batch.depth_label) {
    Image dmask(W, H, 1);
    int valid = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool ok = batch.mask.data[i] > 0.5 && std::isfinite(batch.depth_label->data[i]) &&
                      w.outputs[i].depth_valid;
      dmask.data[i] = ok ? 1.0 : 0.0;
      valid += ok;
    }
    if (valid >= 2) {
      const LossValue d = depth_loss(depth, *batch.depth_label, &dmask, weights.grad);
      rep.terms.depth = d.value;
      rep.depth_degenerate = d.flagged;
      for (std::size_t i = 0; i < n; ++i) rg[i].depth += weights.depth * d.grad.data[i];
    } else {
      rep.depth_degenerate = true;
    }
  }

  if (batch.sky_mask) {
    const LossValue bce = sky_opacity_bce(t_out, *batch.sky_mask);
    rep.terms.sky_op = bce.value;
    for (std::size_t i = 0; i < n; ++i) rg[i].t_out += weights.sky_op * bce.grad.data[i];
    const LossValue l1 = sky_masked_l1(pred, batch.rgb, *batch.sky_mask);
    rep.terms.sky_l1 = l1.value;
    rep.sky_empty = l1.flagged;
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) rg[i].rgb[c] += weights.sky_l1 * l1.grad.data[i * 3 + c];
  }

  if (want_grads) rep.grads = field.params().zeros_like();
  if (!batch.gravity.empty()) {
    rep.terms.grav = gravity_loss(field, batch.gravity, gravity.epsilon,
                                  want_grads && weights.grav > 0.0 ? &rep.grads : nullptr,
                                  weights.grav);
  }
  rep.total = total_loss(rep.terms, weights);
  if (!want_grads) return rep;

  const std::size_t chunks = chunk_count(n, kRayGrain);
  if (w.partial.size() < chunks) w.partial.resize(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    if (!w.partial[c].same_shape(rep.grads)) w.partial[c] = rep.grads.zeros_like();
    else w.partial[c].set_zero();
  }
  const std::size_t code_off = std::size_t(batch.code) * C;
  parallel_for(n, kRayGrain, [&](std::size_t chunk, std::size_t b, std::size_t e) {
    ParamSet& g = w.partial[chunk];
    std::span<double> cg(g.codes.data() + code_off, C);
    for (std::size_t i = b; i < e; ++i) {
      const RayGrad& gi = rg[i];
      if (gi.rgb[0] == 0.0 && gi.rgb[1] == 0.0 && gi.rgb[2] == 0.0 && gi.depth == 0.0 &&
          gi.t_out == 0.0)
        continue;
      march_ray_backward(field, batch.rays[i], code, w.tapes[i], w.outputs[i], gi, g, cg);
    }
  });
  for (std::size_t c = 0; c < chunks; ++c) rep.grads.axpy(1.0, w.partial[c]);
  return rep;
}

void FitConfig::validate() const {
  if (iterations < 1) throw ConfigError("fit: iterations must be >= 1");
  if (!(adam.lr > 0.0)) throw ConfigError("fit: learning rate must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw ConfigError("fit: Adam betas must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("fit: Adam eps must be > 0");
  if (!(lr_final_ratio > 0.0 && lr_final_ratio <= 1.0))
    throw ConfigError("fit: lr_final_ratio must lie in (0, 1]");
  if (rays_per_batch < 2) throw ConfigError("fit: rays_per_batch must be >= 2");
  if (patch_size < 2) throw ConfigError("fit: patch_size must be >= 2");
  if (patch_stride_max < 0) throw ConfigError("fit: patch_stride_max must be >= 0");
  if (perspective_size < 2) throw ConfigError("fit: perspective_size must be >= 2");
  double mix_sum = 0.0;
  for (double m : view_mix) {
    if (!(m >= 0.0)) throw ConfigError("fit: view_mix entries must be >= 0");
    mix_sum += m;
  }
  if (!(mix_sum > 0.0)) throw ConfigError("fit: view_mix must not be all zero");
  if (log_every < 1 || snapshot_every < 1) throw ConfigError("fit: cadences must be >= 1");
  weights.validate();
  gravity.validate();
  march.validate();
}

std::string to_ndjson(const FitLogRecord& r) {
  nlohmann::ordered_json j;
  j["iter"] = r.iteration;
  j["view"] = view_kind_name(r.view);
  j["rgb"] = r.terms.rgb;
  j["grav"] = r.terms.grav;
  j["sky_op"] = r.terms.sky_op;
  j["sky_l1"] = r.terms.sky_l1;
  j["depth"] = r.terms.depth;
  j["total"] = r.total;
  j["time_s"] = r.elapsed_s;
  return j.dump();
}

std::vector<double> mean_code(const TriPlaneField& field) {
  const int d = field.shape().code_dim;
  const int n = field.shape().n_codes;
  std::vector<double> m(d, 0.0);
  for (int v = 0; v < n; ++v) {
    const auto c = field.code(v);
    for (int j = 0; j < d; ++j) m[j] += c[j] / n;
  }
  return m;
}

Batch sample_batch(const TriPlaneField& field, const ViewSet& views, const FitConfig& cfg,
                   std::mt19937_64& rng) {
  std::array<double, 3> mix = cfg.view_mix;
  if (views.satellites.empty()) mix[0] = 0.0;
  if (views.panoramas.empty()) mix[1] = mix[2] = 0.0;
  if (mix[0] + mix[1] + mix[2] <= 0.0) throw ConfigError("no view type available for fitting");
  std::discrete_distribution<int> kind_dist(mix.begin(), mix.end());
  Batch b;
  b.kind = static_cast<ViewKind>(kind_dist(rng));

  if (b.kind == ViewKind::Satellite) {
    std::uniform_int_distribution<std::size_t> pick(0, views.satellites.size() - 1);
    const std::size_t vi = pick(rng);
    const SatelliteView& v = views.satellites[vi];
    const int P = std::min({cfg.patch_size, v.camera.width, v.camera.height});
    // Strided lattice: wide strides give the depth prior global structure.
    const int fit_stride = std::max(1, (std::min(v.camera.width, v.camera.height) - 1) / std::max(1, P - 1));
    const int smax = cfg.patch_stride_max > 0 ? std::min(cfg.patch_stride_max, fit_stride) : fit_stride;
    const int st = std::uniform_int_distribution<int>(1, smax)(rng);
    const int span = (P - 1) * st + 1;
    std::uniform_int_distribution<int> ox(0, v.camera.width - span), oy(0, v.camera.height - span);
    const int x0 = ox(rng), y0 = oy(rng);
    b.code = views.satellite_code(vi);
    b.width = b.height = P;
    b.rgb = Image(P, P, 3);
    b.mask = Image(P, P, 1, 1.0);
    if (v.depth_label) b.depth_label = Image(P, P, 1);
    if (cfg.satellite_opaque) b.sky_mask = Image(P, P, 1, 0.0);
    for (int y = 0; y < P; ++y)
      for (int x = 0; x < P; ++x) {
        const int sx = x0 + x * st, sy = y0 + y * st;
        b.rays.push_back(ray_at(v.camera, sx + 0.5, sy + 0.5));
        for (int c = 0; c < 3; ++c) b.rgb.at(x, y, c) = v.rgb.at(sx, sy, c);
        if (v.depth_label) b.depth_label->at(x, y) = v.depth_label->at(sx, sy);
      }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, views.panoramas.size() - 1);
    const std::size_t vi = pick(rng);
    const PanoramaView& v = views.panoramas[vi];
    const int n = cfg.rays_per_batch;
    b.code = views.panorama_code(vi);
    b.width = n;
    b.height = 1;
    b.rgb = Image(n, 1, 3);
    b.mask = Image(n, 1, 1, 1.0);
    if (b.kind == ViewKind::Panorama) {
      if (v.sky_mask) b.sky_mask = Image(n, 1, 1);
      std::uniform_int_distribution<int> px(0, v.camera.width - 1), py(0, v.camera.height - 1);
      for (int i = 0; i < n; ++i) {
        const int x = px(rng), y = py(rng);
        b.rays.push_back(ray_at(v.camera, x + 0.5, y + 0.5));
        for (int c = 0; c < 3; ++c) b.rgb.at(i, 0, c) = v.rgb.at(x, y, c);
        if (v.sky_mask) b.sky_mask->at(i, 0) = v.sky_mask->at(x, y);
      }
    } else {
      b.rgb_scale = 0.5;
      const TrainingView tv = sample_training_view(rng, cfg.perspective);
      const int S = cfg.perspective_size;
      const PerspectiveCrop crop = training_crop(cfg.perspective, v.rgb, tv, S, S,
                                                 v.camera.yaw_span, v.camera.pitch_span);
      PerspectiveCamera rel;
      rel.pose.yaw = tv.yaw;
      rel.pose.pitch = tv.pitch;
      rel.fov_deg = tv.fov_deg;
      rel.width = rel.height = S;
      const Mat3 R = v.camera.pose.rotation();
      std::uniform_int_distribution<int> px(0, S - 1);
      for (int i = 0; i < n; ++i) {
        const int x = px(rng), y = px(rng);
        const Ray r = ray_at(rel, x + 0.5, y + 0.5);
        b.rays.push_back({v.camera.pose.position, (R * r.direction).normalized()});
        for (int c = 0; c < 3; ++c) b.rgb.at(i, 0, c) = crop.image.at(x, y, c);
        b.mask.at(i, 0) = crop.valid.at(x, y);
      }
    }
  }
  if (cfg.weights.grav > 0.0) b.gravity = sample_gravity_pairs(field.extent(), cfg.gravity, rng);
  return b;
}

void fit_field(TriPlaneField& field, const ViewSet& views, const FitConfig& cfg,
               const FitCallbacks& cb) {
  cfg.validate();
  views.validate();
  if (field.shape().n_codes < views.n_codes())
    throw ConfigError("field has fewer illumination codes than supervised views");
  field.params().check_finite("fit start");

  std::mt19937_64 rng(cfg.seed);
  AdamState state = AdamState::for_params(field.params());
  AdamConfig adam = cfg.adam;
  BatchWorkspace ws;
  MarchConfig march = cfg.march;
  ParamSet snapshot = field.params();
  const auto t0 = std::chrono::steady_clock::now();

  for (int it = 0; it < cfg.iterations; ++it) {
    const double frac = cfg.iterations > 1 ? double(it) / (cfg.iterations - 1) : 0.0;
    adam.lr = cfg.adam.lr * std::pow(cfg.lr_final_ratio, frac);
    const Batch batch = sample_batch(field, views, cfg, rng);
    const std::uint64_t jitter_seed = rng();
    LossReport rep =
        evaluate_batch(field, batch, cfg.weights, cfg.gravity, march, jitter_seed, true, &ws);
    bool finite = std::isfinite(rep.total);
    if (finite) {
      try {
        adam_step(field.params(), rep.grads, state, adam);
        field.params().check_finite("fit update");
      } catch (const NumericError&) {
        finite = false;
      }
    }
    if (!finite) {
      field.params() = snapshot;
      if (cb.divergence_checkpoint) field.save(*cb.divergence_checkpoint);
      throw NumericError("fit diverged at iteration " + std::to_string(it) +
                         " (non-finite loss or update)");
    }
    if ((it + 1) % cfg.snapshot_every == 0) snapshot = field.params();
    if (cb.on_log && (it % cfg.log_every == 0 || it + 1 == cfg.iterations)) {
      FitLogRecord r;
      r.iteration = it;
      r.view = batch.kind;
      r.terms = rep.terms;
      r.total = rep.total;
      r.elapsed_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      cb.on_log(r);
    }
  }
}

TriPlaneField fit_scene(const ViewSet& views, const FieldShape& shape, const SceneExtent& extent,
                        const FitConfig& cfg, const FitCallbacks& cb, const FieldInit& init) {
  FieldShape s = shape;
  s.n_codes = std::max(1, views.n_codes());
  std::mt19937_64 rng(mix(cfg.seed ^ 0x5eedULL));
  TriPlaneField field = TriPlaneField::create(s, extent, rng, init);
  fit_field(field, views, cfg, cb);
  return field;
}

}  // namespace tricity
