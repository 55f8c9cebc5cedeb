// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include "tricity/losses.hpp"

#include <algorithm>
#include <cmath>

#include "tricity/parallel.hpp"

namespace tricity {

void LossWeights::validate() const {
  for (double w : {rgb, grav, sky_op, sky_l1, depth, grad})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and >= 0");
}

void GravityConfig::validate() const {
  if (samples < 0) throw ConfigError("gravity samples must be >= 0");
  if (delta_max && !(*delta_max > 0.0)) throw ConfigError("gravity delta_max must be > 0");
  if (!(epsilon >= 0.0)) throw ConfigError("gravity epsilon must be >= 0");
}

double GravityConfig::resolved_delta_max(const SceneExtent& extent) const {
  return delta_max.value_or(0.1 * extent.side());
}

std::vector<GravityPair> sample_gravity_pairs(const SceneExtent& extent, const GravityConfig& cfg,
                                              std::mt19937_64& rng) {
  const Vec3 lo = extent.lo();
  const double side = extent.side();
  const double dmax = cfg.resolved_delta_max(extent);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<GravityPair> pairs(std::size_t(cfg.samples));
  for (auto& p : pairs) {
    p.x = lo + side * Vec3(u(rng), u(rng), u(rng));
    p.dz = dmax * (1.0 - u(rng));  // (0, dmax]
  }
  return pairs;
}

double gravity_loss(const TriPlaneField& field, const std::vector<GravityPair>& pairs,
                    double epsilon, ParamSet* grads, double scale) {
  if (pairs.empty()) return 0.0;
  const int C = field.shape().channels;
  const int H = field.shape().hidden;
  const std::size_t n = pairs.size();
  constexpr std::size_t kGrain = 256;
  const std::size_t chunks = chunk_count(n, kGrain);
  std::vector<double> terms(n, 0.0);
  std::vector<ParamSet> partial;
  if (grads) {
    partial.resize(chunks);
    for (auto& p : partial) {
      p.planes.assign(grads->planes.size(), 0.0);
      p.decoder.assign(grads->decoder.size(), 0.0);
    }
  }
  const double inv = scale / static_cast<double>(n);
  parallel_for(n, kGrain, [&](std::size_t chunk, std::size_t b, std::size_t e) {
    std::vector<double> h0(C), h1(C), pre0(H), z0(H), pre1(H), z1(H), dh(C);
    for (std::size_t i = b; i < e; ++i) {
      const Vec3 x0 = pairs[i].x;
      const Vec3 x1(x0.x(), x0.y(), x0.z() + pairs[i].dz);
      const PlaneStencil s0 = plane_stencil(field, x0);
      const PlaneStencil s1 = plane_stencil(field, x1);
      sample_triplane(field, s0, h0);
      sample_triplane(field, s1, h1);
      DecodeCache c0{pre0, z0}, c1{pre1, z1};
      const double d0 = decode_density(field, h0, c0);
      const double d1 = decode_density(field, h1, c1);
      const double v = d1 - d0 - epsilon;
      if (v <= 0.0) continue;
      terms[i] = v;
      if (!grads) continue;
      ParamSet& g = partial[chunk];
      auto back = [&](const PlaneStencil& st, const std::vector<double>& h, const DecodeCache& c,
                      double d_sigma) {
        decode_backward(field, h, {}, c, d_sigma, {}, g.decoder, dh, {});
        if (!st.inside) return;
        for (int q = 0; q < 12; ++q) {
          if (st.weight[q] == 0.0) continue;
          double* gp = g.planes.data() + st.offset[q];
          for (int ch = 0; ch < C; ++ch) gp[ch] += st.weight[q] * dh[ch];
        }
      };
      back(s1, h1, c1, inv);
      back(s0, h0, c0, -inv);
    }
  });
  if (grads) {
    for (const auto& p : partial) {
      for (std::size_t i = 0; i < p.planes.size(); ++i) grads->planes[i] += p.planes[i];
      for (std::size_t i = 0; i < p.decoder.size(); ++i) grads->decoder[i] += p.decoder[i];
    }
  }
  return pairwise_sum(terms) / static_cast<double>(n);
}

namespace {

bool valid_at(const Image* mask, std::size_t pixel) {
  return !mask || mask->data[pixel] > 0.5;
}

void check_depth_inputs(const Image& pred, const Image& target, const Image* mask) {
  if (pred.channels != 1 || !pred.same_shape(target))
    throw DomainError("depth maps must be single-channel with matching shapes");
  if (mask && (mask->width != pred.width || mask->height != pred.height || mask->channels != 1))
    throw DomainError("depth mask shape mismatch");
}

}  // namespace

ScaleShift fit_scale_shift(const Image& pred, const Image& target, const Image* mask) {
  check_depth_inputs(pred, target, mask);
  std::vector<double> xs, ys;
  for (std::size_t p = 0; p < pred.pixels(); ++p) {
    if (!valid_at(mask, p)) continue;
    xs.push_back(pred.data[p]);
    ys.push_back(target.data[p]);
  }
  const std::size_t n = xs.size();
  if (n < 2) throw DomainError("scale/shift fit needs at least 2 valid pixels");
  const double mx = pairwise_sum(xs) / n;
  const double my = pairwise_sum(ys) / n;
  std::vector<double> sxx(n), sxy(n);
  for (std::size_t i = 0; i < n; ++i) {
    sxx[i] = (xs[i] - mx) * (xs[i] - mx);
    sxy[i] = (xs[i] - mx) * (ys[i] - my);
  }
  const double Sxx = pairwise_sum(sxx);
  const double Sxy = pairwise_sum(sxy);
  ScaleShift r;
  if (Sxx / n < 1e-12) {
    r.s = 1.0;
    r.t = my - mx;
    r.degenerate = true;
    return r;
  }
  r.s = Sxy / Sxx;
  r.t = my - r.s * mx;
  return r;
}

LossValue depth_loss(const Image& pred, const Image& target, const Image* mask,
                     double lambda_grad, ScaleShift* fitted) {
  check_depth_inputs(pred, target, mask);
  const ScaleShift st = fit_scale_shift(pred, target, mask);
  if (fitted) *fitted = st;
  const int W = pred.width, H = pred.height;
  const std::size_t P = pred.pixels();

  std::vector<double> xs, ys;
  for (std::size_t p = 0; p < P; ++p) {
    if (!valid_at(mask, p)) continue;
    xs.push_back(pred.data[p]);
    ys.push_back(target.data[p]);
  }
  const double n = static_cast<double>(xs.size());
  const double mx = pairwise_sum(xs) / n;
  const double my = pairwise_sum(ys) / n;
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - mx) * (xs[i] - mx);
  const double Sxx = pairwise_sum(sq);

  LossValue out;
  out.flagged = st.degenerate;
  out.grad = Image(W, H, 1);

  // Data term and its direct gradient.
  std::vector<double> data_terms;
  data_terms.reserve(xs.size());
  double dL_ds = 0.0, dL_dt = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    if (!valid_at(mask, p)) continue;
    const double r = st.s * pred.data[p] + st.t - target.data[p];
    data_terms.push_back(std::abs(r));
    const double sg = (r > 0.0) - (r < 0.0);
    out.grad.data[p] += st.s * sg / n;
    dL_ds += sg * pred.data[p] / n;
    dL_dt += sg / n;
  }
  // Gradient-matching term over forward-difference edges.
  std::vector<double> edge_terms;
  if (lambda_grad > 0.0) {
    auto edge = [&](std::size_t a, std::size_t b) {
      if (!valid_at(mask, a) || !valid_at(mask, b)) return;
      const double dp = pred.data[b] - pred.data[a];
      const double e = st.s * dp - (target.data[b] - target.data[a]);
      edge_terms.push_back(std::abs(e));
      const double sg = lambda_grad * ((e > 0.0) - (e < 0.0)) / n;
      out.grad.data[b] += st.s * sg;
      out.grad.data[a] -= st.s * sg;
      dL_ds += sg * dp;
    };
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const std::size_t p = std::size_t(y) * W + x;
        if (x + 1 < W) edge(p, p + 1);
        if (y + 1 < H) edge(p, p + W);
      }
  }
  // Chain through the closed-form (s, t).
  for (std::size_t p = 0; p < P; ++p) {
    if (!valid_at(mask, p)) continue;
    double ds = 0.0, dt = -1.0 / n;
    if (!st.degenerate) {
      ds = ((target.data[p] - my) - 2.0 * st.s * (pred.data[p] - mx)) / Sxx;
      dt = -st.s / n - mx * ds;
    }
    out.grad.data[p] += dL_ds * ds + dL_dt * dt;
  }
  out.value = pairwise_sum(data_terms) / n + lambda_grad * pairwise_sum(edge_terms) / n;
  return out;
}

LossValue photometric_loss(const Image& pred, const Image& gt, const Image* mask) {
  if (!pred.same_shape(gt)) throw DomainError("photometric loss: image shape mismatch");
  if (mask && (mask->width != pred.width || mask->height != pred.height || mask->channels != 1))
    throw DomainError("photometric loss: mask shape mismatch");
  LossValue out;
  out.grad = Image(pred.width, pred.height, pred.channels);
  const int C = pred.channels;
  std::vector<double> sq;
  sq.reserve(pred.data.size());
  for (std::size_t p = 0; p < pred.pixels(); ++p) {
    if (!valid_at(mask, p)) continue;
    for (int c = 0; c < C; ++c) {
      const double d = pred.data[p * C + c] - gt.data[p * C + c];
      sq.push_back(d * d);
    }
  }
  if (sq.empty()) {
    out.flagged = true;
    return out;
  }
  const double n = static_cast<double>(sq.size());
  for (std::size_t p = 0; p < pred.pixels(); ++p) {
    if (!valid_at(mask, p)) continue;
    for (int c = 0; c < C; ++c)
      out.grad.data[p * C + c] = 2.0 * (pred.data[p * C + c] - gt.data[p * C + c]) / n;
  }
  out.value = pairwise_sum(sq) / n;
  return out;
}

LossValue sky_opacity_bce(const Image& t_out, const Image& sky_mask) {
  if (t_out.channels != 1 || sky_mask.channels != 1 || t_out.width != sky_mask.width ||
      t_out.height != sky_mask.height)
    throw DomainError("sky BCE: shape mismatch");
  constexpr double lo = 1e-6, hi = 1.0 - 1e-6;
  LossValue out;
  out.grad = Image(t_out.width, t_out.height, 1);
  const std::size_t P = t_out.pixels();
  if (P == 0) return out;
  std::vector<double> terms(P);
  const double n = static_cast<double>(P);
  for (std::size_t p = 0; p < P; ++p) {
    const double raw = t_out.data[p];
    const double q = std::clamp(raw, lo, hi);
    const double m = sky_mask.data[p] > 0.5 ? 1.0 : 0.0;
    terms[p] = -(m * std::log(q) + (1.0 - m) * std::log(1.0 - q));
    if (raw > lo && raw < hi) out.grad.data[p] = (-m / q + (1.0 - m) / (1.0 - q)) / n;
  }
  out.value = pairwise_sum(terms) / n;
  return out;
}

LossValue sky_masked_l1(const Image& pred, const Image& gt, const Image& sky_mask) {
  if (!pred.same_shape(gt) || sky_mask.channels != 1 || sky_mask.width != pred.width ||
      sky_mask.height != pred.height)
    throw DomainError("sky L1: shape mismatch");
  LossValue out;
  out.grad = Image(pred.width, pred.height, pred.channels);
  const int C = pred.channels;
  std::vector<double> terms;
  for (std::size_t p = 0; p < pred.pixels(); ++p) {
    if (sky_mask.data[p] <= 0.5) continue;
    for (int c = 0; c < C; ++c) terms.push_back(std::abs(pred.data[p * C + c] - gt.data[p * C + c]));
  }
  if (terms.empty()) {
    out.flagged = true;
    return out;
  }
  const double n = static_cast<double>(terms.size());
  for (std::size_t p = 0; p < pred.pixels(); ++p) {
    if (sky_mask.data[p] <= 0.5) continue;
    for (int c = 0; c < C; ++c) {
      const double d = pred.data[p * C + c] - gt.data[p * C + c];
      out.grad.data[p * C + c] = ((d > 0.0) - (d < 0.0)) / n;
    }
  }
  out.value = pairwise_sum(terms) / n;
  return out;
}

double total_loss(const LossTerms& t, const LossWeights& w) {
  w.validate();
  return w.rgb * t.rgb + w.grav * t.grav + w.sky_op * t.sky_op + w.sky_l1 * t.sky_l1 +
         w.depth * t.depth;
}

}  // namespace tricity
